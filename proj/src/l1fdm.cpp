#include "fracback/l1fdm.hpp"

#include "fracback/eigensystem.hpp"
#include "fracback/errors.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace fracback {
namespace {

double history_coeff(const L1Weights& w, int n, int j) {
    // weight of u^j in the step-n right-hand side, 1 <= j <= n-1
    return w.b(n - j - 1) - w.b(n - j);
}

void check_compatible(const CoupledOperator& op, const Field& u0) {
    if (u0.grid() != op.grid || u0.components() != op.components) {
        throw shape_error("l1fdm: initial value shape mismatch");
    }
    if (!u0.all_finite()) throw domain_error("l1fdm: initial value is not finite");
}

} // namespace

L1Weights L1Weights::make(double alpha, int n_steps) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw domain_error("l1fdm: alpha must lie in (0, 1)");
    }
    L1Weights w;
    w.alpha = alpha;
    w.b.resize(n_steps + 1);
    const double e = 1.0 - alpha;
    for (int j = 0; j <= n_steps; ++j) {
        w.b(j) = std::pow(j + 1.0, e) - std::pow(static_cast<double>(j), e);
    }
    return w;
}

ForwardResult solve_forward(const CoupledOperator& op, double alpha,
                            const Field& u0, const SourceSpec* source,
                            const TimeGrid& tg, bool keep_trajectory) {
    check_compatible(op, u0);
    const L1Weights w = L1Weights::make(alpha, tg.n_steps);
    const double tau = tg.tau();
    const double c = 1.0 / (std::tgamma(2.0 - alpha) * std::pow(tau, alpha));
    const int n_dof = op.size();

    Eigen::MatrixXd shifted = op.matrix;
    shifted.diagonal().array() += c;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) {
        throw error("l1fdm: factorization of the shifted operator failed");
    }

    Eigen::MatrixXd history(n_dof, tg.n_steps + 1);
    history.col(0) = u0.flat();

    ForwardResult result{Field(op.grid, op.components), {}};
    for (int n = 1; n <= tg.n_steps; ++n) {
        Eigen::VectorXd rhs = w.b(n - 1) * history.col(0);
        if (n > 1) {
            Eigen::VectorXd coeffs(n - 1);
            for (int j = 1; j < n; ++j) coeffs(j - 1) = history_coeff(w, n, j);
            rhs.noalias() += history.middleCols(1, n - 1) * coeffs;
        }
        rhs *= c;
        if (source && source->sampler) {
            const Field f = source->sampler(n * tau);
            if (f.grid() != op.grid || f.components() != op.components) {
                throw shape_error("l1fdm: source field shape mismatch");
            }
            rhs += f.flat();
        }
        history.col(n) = llt.solve(rhs);
        if (!history.col(n).allFinite()) {
            throw error("l1fdm: non-finite state at step " + std::to_string(n));
        }
        if (keep_trajectory) {
            result.trajectory.push_back(
                Field::from_flat(op.grid, op.components, history.col(n)));
        }
    }
    result.final_state =
        Field::from_flat(op.grid, op.components, history.col(tg.n_steps));
    return result;
}

std::vector<Field> solve_forward_multi(const CoupledOperator& op, double alpha,
                                       const std::vector<Field>& initial_values,
                                       const TimeGrid& tg) {
    if (initial_values.empty()) return {};
    for (const Field& u0 : initial_values) check_compatible(op, u0);

    const L1Weights w = L1Weights::make(alpha, tg.n_steps);
    const double tau = tg.tau();
    const double c = 1.0 / (std::tgamma(2.0 - alpha) * std::pow(tau, alpha));
    const int n_dof = op.size();
    const int total = static_cast<int>(initial_values.size());

    Eigen::MatrixXd shifted = op.matrix;
    shifted.diagonal().array() += c;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) {
        throw error("l1fdm: factorization of the shifted operator failed");
    }

    // Chunk the sample axis so the stored history stays within ~1.5 GB.
    const std::size_t budget = (3u << 27); // doubles
    int chunk = static_cast<int>(
        std::max<std::size_t>(1, budget / (static_cast<std::size_t>(n_dof) *
                                           (tg.n_steps + 1))));
    chunk = std::min(chunk, total);

    std::vector<Field> finals(total, Field(op.grid, op.components));
    for (int start = 0; start < total; start += chunk) {
        const int count = std::min(chunk, total - start);
        std::vector<Eigen::MatrixXd> history(
            tg.n_steps + 1, Eigen::MatrixXd(n_dof, count));
        for (int s = 0; s < count; ++s) {
            history[0].col(s) = initial_values[start + s].flat();
        }
        for (int n = 1; n <= tg.n_steps; ++n) {
            Eigen::MatrixXd rhs = w.b(n - 1) * history[0];
            for (int j = 1; j < n; ++j) {
                rhs.noalias() += history_coeff(w, n, j) * history[j];
            }
            rhs *= c;
            history[n] = llt.solve(rhs);
            if (!history[n].allFinite()) {
                throw error("l1fdm: non-finite state at step " + std::to_string(n));
            }
        }
        for (int s = 0; s < count; ++s) {
            finals[start + s] = Field::from_flat(op.grid, op.components,
                                                 history[tg.n_steps].col(s));
        }
    }
    return finals;
}

double convergence_order(const CoupledOperator& op, double alpha, const Field& u0,
                         double T, const std::vector<int>& step_counts) {
    if (step_counts.size() < 3) {
        throw domain_error("convergence_order: need at least 3 step counts");
    }
    for (std::size_t i = 1; i < step_counts.size(); ++i) {
        if (step_counts[i] <= step_counts[i - 1]) {
            throw domain_error("convergence_order: step counts must ascend");
        }
    }
    check_compatible(op, u0);

    // Boundary compatibility: a u0 incompatible with the zero boundary (e.g.
    // constant in space) has no clean temporal order to fit.
    const Grid& g = op.grid;
    const double max_mag = u0.values().cwiseAbs().maxCoeff();
    double edge_mag = 0.0;
    for (int k = 0; k < u0.components(); ++k) {
        for (int i = 0; i < g.interior_count(); ++i) {
            const bool edge = g.ix(i) == 0 || g.ix(i) == g.nx() - 1 ||
                              (g.dim() == 2 && (g.iy(i) == 0 || g.iy(i) == g.ny() - 1));
            if (edge) edge_mag = std::max(edge_mag, std::abs(u0.at(k, i)));
        }
    }
    const double h = std::min(g.hx(), g.dim() == 2 ? g.hy() : g.hx());
    if (edge_mag > 20.0 * h * max_mag) {
        throw domain_error(
            "convergence_order: u0 is incompatible with the Dirichlet boundary "
            "(boundary-adjacent magnitude " +
            std::to_string(edge_mag) + ")");
    }

    const EigenSystem es = eigendecompose(op);
    const Field reference = propagate_homogeneous(es, alpha, u0, {T}).front();
    const double ref_norm = reference.norm();

    std::vector<double> log_tau, log_err;
    for (int n : step_counts) {
        const Field state =
            solve_forward(op, alpha, u0, nullptr, TimeGrid(T, n)).final_state;
        const double err =
            std::sqrt(g.weight()) * (state.flat() - reference.flat()).norm();
        if (err < 1e-13 * std::max(ref_norm, 1.0)) {
            throw convergence_error(
                "convergence_order: errors at rounding level, no order to fit");
        }
        log_tau.push_back(std::log(T / n));
        log_err.push_back(std::log(err));
    }

    // Least-squares slope of log err against log tau.
    const auto m = static_cast<double>(log_tau.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < log_tau.size(); ++i) {
        sx += log_tau[i];
        sy += log_err[i];
        sxx += log_tau[i] * log_tau[i];
        sxy += log_tau[i] * log_err[i];
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

} // namespace fracback
