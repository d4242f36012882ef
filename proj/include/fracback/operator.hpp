#pragma once

#include "fracback/coefficients.hpp"
#include "fracback/grid.hpp"

#include <Eigen/Dense>

namespace fracback {

enum class OperatorKind { weak, strong };

/// Assembled discrete elliptic operator of the coupled system, acting on
/// component-major stacked vectors (block k spans rows [k*M, (k+1)*M)).
/// Dense symmetric storage; immutable after assembly.
struct CoupledOperator {
    Grid grid;
    int components;
    OperatorKind kind;
    Eigen::MatrixXd matrix;

    int size() const { return static_cast<int>(matrix.rows()); }

    Field apply(const Field& f) const {
        if (f.grid() != grid || f.components() != components) {
            throw shape_error("operator: field shape mismatch");
        }
        return Field::from_flat(grid, components, matrix * f.flat());
    }

    /// max|M - M^T| (absolute); the assembly paths keep this at rounding level.
    double symmetry_defect() const {
        return (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    }
};

/// Flux-form finite differences for -div(a_k grad u_k) per component plus the
/// constant coupling block. Coefficients are validated first; a failed
/// assumption raises validation_error naming the check and sample point.
CoupledOperator assemble_weak(const Grid& grid, const WeakCoefficients& coeffs);

/// Discretization of -div(A grad u) + C u with the fully symmetric
/// fourth-order tensor (d = K = 2). Same-direction terms use the flux form;
/// cross-derivative terms use centered differences of the node-sampled flux.
CoupledOperator assemble_strong(const Grid& grid, const StrongCoefficients& coeffs);

} // namespace fracback
