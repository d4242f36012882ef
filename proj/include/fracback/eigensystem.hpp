#pragma once

#include "fracback/operator.hpp"

#include <Eigen/Dense>
#include <memory>

namespace fracback {

struct EigenOptions {
    /// Cyclic Jacobi below this size; LAPACK dsyevd (when available) above.
    int jacobi_threshold = 600;
    int max_sweeps = 40;
    /// Check residual/orthonormality invariants after the solve.
    bool verify = true;
};

/// Eigendecomposition of the discrete operator. Columns of `eigenvectors`
/// are orthonormal under the h-weighted discrete inner product
/// (Phi^T W Phi = I with W = weight * Id), eigenvalues ascending and positive.
struct EigenSystem {
    std::shared_ptr<const CoupledOperator> op;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;

    const Grid& grid() const { return op->grid; }
    int components() const { return op->components; }
    int count() const { return static_cast<int>(eigenvalues.size()); }
    double weight() const { return op->grid.weight(); }

    /// Mode coefficients (f, phi_n) in the weighted inner product.
    Eigen::VectorXd analyze(const Field& f) const {
        if (f.grid() != grid() || f.components() != components()) {
            throw shape_error("eigensystem: field shape mismatch");
        }
        return weight() * (eigenvectors.transpose() * f.flat());
    }

    /// Field with the given mode coefficients.
    Field synthesize(const Eigen::VectorXd& coeffs) const {
        if (coeffs.size() != count()) {
            throw shape_error("eigensystem: coefficient count mismatch");
        }
        return Field::from_flat(grid(), components(), eigenvectors * coeffs);
    }

    /// n-th eigenmode as a Field.
    Field mode(int n) const {
        return Field::from_flat(grid(), components(), eigenvectors.col(n));
    }

    struct Defects {
        double max_residual_ratio; // max_n ||A phi_n - lambda_n phi_n|| / lambda_n
        double ortho_defect;       // max |Phi^T W Phi - I|
    };
    Defects measure_defects() const;
};

/// Full eigendecomposition; throws convergence_error when the Jacobi sweep
/// budget is exhausted, and error when verification fails.
EigenSystem eigendecompose(const CoupledOperator& op, const EigenOptions& opts = {});
EigenSystem eigendecompose(std::shared_ptr<const CoupledOperator> op,
                           const EigenOptions& opts = {});

/// Cyclic Jacobi rotations for a dense symmetric matrix (deterministic sweep
/// order, high relative accuracy for small eigenvalues). Exposed for tests.
void jacobi_eigensolver(Eigen::MatrixXd a, Eigen::VectorXd& values,
                        Eigen::MatrixXd& vectors, int max_sweeps = 40);

} // namespace fracback
