#include "fracback/inversion.hpp"

#include "fracback/errors.hpp"
#include "fracback/l1fdm.hpp"
#include "fracback/mlf.hpp"
#include "fracback/rng.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace fracback {
namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw domain_error("inversion: alpha must lie in (0, 1)");
    }
}

Eigen::VectorXd mode_decay(const EigenSystem& es, double alpha, double T) {
    const mlf::MlfParams params{alpha, 1.0};
    const double ta = std::pow(T, alpha);
    Eigen::VectorXd e(es.count());
    for (int n = 0; n < es.count(); ++n) {
        e(n) = mlf::ml_eval(params, es.eigenvalues(n) * ta);
    }
    return e;
}

} // namespace

ForwardMap build_forward_map(const EigenSystem& es, double alpha, double T,
                             ForwardMapProvenance provenance) {
    check_alpha(alpha);
    if (!(T > 0.0)) throw domain_error("build_forward_map: T must be positive");

    ForwardMap fm{Eigen::MatrixXd(), Eigen::MatrixXd(), alpha, T,
                  provenance,        es.grid(),         es.components()};

    const int n = es.count();
    if (provenance == ForwardMapProvenance::spectral) {
        const Eigen::VectorXd e = mode_decay(es, alpha, T);
        // K = w * Phi diag(e) Phi^T; symmetric because W is a scalar weight.
        fm.matrix.noalias() = es.eigenvectors * e.asDiagonal() *
                              es.eigenvectors.transpose() * es.weight();
    } else {
        if (es.grid().interior_count() > 40) {
            throw domain_error(
                "build_forward_map: fdm-columns route is an oracle for grids with "
                "at most 40 interior points");
        }
        const TimeGrid tg(T, 2048);
        fm.matrix.resize(n, n);
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd basis = Eigen::VectorXd::Zero(n);
            basis(j) = 1.0;
            const Field u0 = Field::from_flat(es.grid(), es.components(), basis);
            fm.matrix.col(j) =
                solve_forward(*es.op, alpha, u0, nullptr, tg).final_state.flat();
        }
    }
    fm.normal.noalias() = fm.matrix.transpose() * fm.matrix;
    return fm;
}

Field backward_spectral(const EigenSystem& es, double alpha, double T,
                        const Field& u1, std::optional<int> cutoff) {
    check_alpha(alpha);
    if (!(T > 0.0)) throw domain_error("backward_spectral: T must be positive");
    const int used = cutoff.value_or(es.count());
    if (used < 1 || used > es.count()) {
        throw domain_error("backward_spectral: cutoff out of range");
    }
    const Eigen::VectorXd e = mode_decay(es, alpha, T);
    Eigen::VectorXd coeffs = es.analyze(u1);
    for (int n = 0; n < used; ++n) {
        const double amplification = 1.0 / e(n);
        if (!(amplification < 1e15)) {
            throw convergence_error(
                "backward_spectral: mode " + std::to_string(n + 1) +
                " (lambda = " + std::to_string(es.eigenvalues(n)) +
                ") amplifies by " + std::to_string(amplification) +
                "; truncate or regularize");
        }
        coeffs(n) *= amplification;
    }
    for (int n = used; n < es.count(); ++n) coeffs(n) = 0.0;
    return es.synthesize(coeffs);
}

namespace {

struct NormalSolve {
    Field u0;
    double residual;
};

NormalSolve solve_normal(const ForwardMap& fm, const Eigen::VectorXd& rhs,
                         const Field& u1, double epsilon) {
    Eigen::MatrixXd system = fm.normal;
    system.diagonal().array() += epsilon;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) {
        throw error("backward_tikhonov: factorization failed for epsilon = " +
                    std::to_string(epsilon));
    }
    const Eigen::VectorXd x = llt.solve(rhs);
    Field u0 = Field::from_flat(fm.grid, fm.components, x);
    const double w = fm.grid.weight();
    const double residual = std::sqrt(w) * (fm.matrix * x - u1.flat()).norm();
    return {std::move(u0), residual};
}

} // namespace

TikhonovResult backward_tikhonov(const ForwardMap& fm, const Field& u1,
                                 const RegularizationChoice& reg) {
    if (u1.grid() != fm.grid || u1.components() != fm.components) {
        throw shape_error("backward_tikhonov: observation shape mismatch");
    }
    const Eigen::VectorXd rhs = fm.matrix.transpose() * u1.flat();

    if (reg.method == RegularizationChoice::Method::fixed_epsilon) {
        if (!(reg.epsilon > 0.0)) {
            throw domain_error("backward_tikhonov: epsilon must be positive");
        }
        NormalSolve s = solve_normal(fm, rhs, u1, reg.epsilon);
        return {std::move(s.u0), reg.epsilon, s.residual, 0};
    }

    if (!(reg.noise_estimate >= 0.0) || !(reg.discrepancy_factor >= 1.0)) {
        throw domain_error("backward_tikhonov: invalid discrepancy parameters");
    }
    const double target = reg.discrepancy_factor * reg.noise_estimate;
    double lo = 1e-16, hi = 1e2;
    NormalSolve at_lo = solve_normal(fm, rhs, u1, lo);
    NormalSolve at_hi = solve_normal(fm, rhs, u1, hi);
    if (!(at_lo.residual <= target && target <= at_hi.residual)) {
        throw domain_error(
            "backward_tikhonov: discrepancy target " + std::to_string(target) +
            " not bracketed; residual(" + std::to_string(lo) + ") = " +
            std::to_string(at_lo.residual) + ", residual(" + std::to_string(hi) +
            ") = " + std::to_string(at_hi.residual));
    }
    int iterations = 0;
    NormalSolve mid = at_lo;
    double eps_mid = lo;
    for (; iterations < 60 && hi / lo > 1.0 + 1e-3; ++iterations) {
        eps_mid = std::sqrt(lo * hi);
        mid = solve_normal(fm, rhs, u1, eps_mid);
        (mid.residual < target ? lo : hi) = eps_mid;
    }
    return {std::move(mid.u0), eps_mid, mid.residual, iterations};
}

std::vector<StabilityProbeRow> stability_probe(
    const EigenSystem& es, double alpha, double T, const Field& u0,
    const std::vector<double>& perturbation_sizes, int cutoff,
    std::uint64_t seed) {
    check_alpha(alpha);
    for (std::size_t i = 0; i < perturbation_sizes.size(); ++i) {
        if (!(perturbation_sizes[i] >= 0.0)) {
            throw domain_error("stability_probe: perturbation sizes must be >= 0");
        }
        if (i > 0 && perturbation_sizes[i] < perturbation_sizes[i - 1]) {
            throw domain_error("stability_probe: perturbation sizes must ascend");
        }
    }

    const Field u1 = propagate_homogeneous(es, alpha, u0, {T}).front();
    const Field clean = backward_spectral(es, alpha, T, u1, cutoff);

    // One random direction, reused across sizes, unit length in the discrete
    // D(A) norm: ||q||_{D(A)}^2 = sum (lambda_n q_n)^2.
    Rng rng(seed);
    Eigen::VectorXd direction(es.count());
    for (int n = 0; n < es.count(); ++n) direction(n) = rng.normal();
    double da_norm = 0.0;
    for (int n = 0; n < es.count(); ++n) {
        const double v = es.eigenvalues(n) * direction(n);
        da_norm += v * v;
    }
    direction /= std::sqrt(da_norm);

    std::vector<StabilityProbeRow> table;
    for (double size : perturbation_sizes) {
        const Field perturbed = Field::from_flat(
            es.grid(), es.components(),
            u1.flat() + es.eigenvectors * (size * direction));
        const Field rec = backward_spectral(es, alpha, T, perturbed, cutoff);
        const double err =
            std::sqrt(es.weight()) * (rec.flat() - clean.flat()).norm();
        table.push_back({size, err, size > 0.0 ? err / size : 0.0});
    }
    return table;
}

} // namespace fracback
