#include "fracback/eigensystem.hpp"

#include "fracback/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#if defined(FRACBACK_HAVE_LAPACKE)
#include <lapacke.h>
#endif

namespace fracback {

void jacobi_eigensolver(Eigen::MatrixXd a, Eigen::VectorXd& values,
                        Eigen::MatrixXd& vectors, int max_sweeps) {
    const int n = static_cast<int>(a.rows());
    vectors = Eigen::MatrixXd::Identity(n, n);
    const double norm = a.norm();
    auto off_norm = [&]() {
        double s = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
        return std::sqrt(2.0 * s);
    };

    double off = off_norm();
    double prev_off = std::numeric_limits<double>::infinity();
    int sweeps = 0;
    while (off > 1e-14 * norm && off < prev_off) {
        if (++sweeps > max_sweeps) {
            throw convergence_error(
                "jacobi eigensolver: sweep budget exhausted after " +
                std::to_string(max_sweeps) + " sweeps, off-diagonal norm " +
                std::to_string(off));
        }
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // A <- J^T A J, accumulating J into the eigenvector matrix.
                for (int i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = a(p, i);
                    const double aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = vectors(i, p);
                    const double viq = vectors(i, q);
                    vectors(i, p) = c * vip - s * viq;
                    vectors(i, q) = s * vip + c * viq;
                }
            }
        }
        prev_off = off;
        off = off_norm();
    }

    values.resize(n);
    for (int i = 0; i < n; ++i) values(i) = a(i, i);

    // Ascending order; ties keep the sweep order of the vectors.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return values(i) < values(j); });
    Eigen::VectorXd sorted_values(n);
    Eigen::MatrixXd sorted_vectors(n, n);
    for (int i = 0; i < n; ++i) {
        sorted_values(i) = values(order[i]);
        sorted_vectors.col(i) = vectors.col(order[i]);
    }
    values = std::move(sorted_values);
    vectors = std::move(sorted_vectors);
}

namespace {

#if defined(FRACBACK_HAVE_LAPACKE)
void lapack_eigensolver(const Eigen::MatrixXd& a, Eigen::VectorXd& values,
                        Eigen::MatrixXd& vectors) {
    const int n = static_cast<int>(a.rows());
    vectors = a;
    values.resize(n);
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                    vectors.data(), n, values.data());
    if (info != 0) {
        throw convergence_error("dsyevd failed with info=" + std::to_string(info));
    }
}
#endif

} // namespace

EigenSystem::Defects EigenSystem::measure_defects() const {
    Defects d{0.0, 0.0};
    const Eigen::MatrixXd residual =
        op->matrix * eigenvectors - eigenvectors * eigenvalues.asDiagonal();
    const double w = weight();
    for (int j = 0; j < count(); ++j) {
        const double r = std::sqrt(w) * residual.col(j).norm();
        d.max_residual_ratio = std::max(d.max_residual_ratio, r / eigenvalues(j));
    }
    Eigen::MatrixXd gram = w * (eigenvectors.transpose() * eigenvectors);
    gram.diagonal().array() -= 1.0;
    d.ortho_defect = gram.cwiseAbs().maxCoeff();
    return d;
}

EigenSystem eigendecompose(std::shared_ptr<const CoupledOperator> op,
                           const EigenOptions& opts) {
    const int n = op->size();
    EigenSystem es;
    es.op = std::move(op);

    bool use_jacobi = n <= opts.jacobi_threshold;
#if !defined(FRACBACK_HAVE_LAPACKE)
    use_jacobi = true;
#endif
    if (use_jacobi) {
        if (n > 2500) {
            // Without LAPACK, fall back to Eigen's solver past the point where
            // Jacobi sweeps become impractical.
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(es.op->matrix);
            if (solver.info() != Eigen::Success) {
                throw convergence_error("selfadjoint eigensolver failed");
            }
            es.eigenvalues = solver.eigenvalues();
            es.eigenvectors = solver.eigenvectors();
        } else {
            jacobi_eigensolver(es.op->matrix, es.eigenvalues, es.eigenvectors,
                               opts.max_sweeps);
        }
    } else {
#if defined(FRACBACK_HAVE_LAPACKE)
        lapack_eigensolver(es.op->matrix, es.eigenvalues, es.eigenvectors);
#endif
    }

    // Rescale to h-weighted orthonormality.
    es.eigenvectors *= 1.0 / std::sqrt(es.grid().weight());

    if (es.eigenvalues(0) <= 0.0) {
        throw error("eigendecompose: smallest eigenvalue " +
                    std::to_string(es.eigenvalues(0)) +
                    " is not positive; operator is not positive definite");
    }
    if (opts.verify) {
        const auto defects = es.measure_defects();
        if (defects.max_residual_ratio > 1e-10 || defects.ortho_defect > 1e-12) {
            throw error("eigendecompose: invariant violation, residual ratio " +
                        std::to_string(defects.max_residual_ratio) +
                        ", orthonormality defect " +
                        std::to_string(defects.ortho_defect));
        }
    }
    return es;
}

EigenSystem eigendecompose(const CoupledOperator& op, const EigenOptions& opts) {
    return eigendecompose(std::make_shared<CoupledOperator>(op), opts);
}

} // namespace fracback
