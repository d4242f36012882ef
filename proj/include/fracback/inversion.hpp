#pragma once

#include "fracback/eigensystem.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fracback {

enum class ForwardMapProvenance { spectral, fdm_columns };

/// Discrete final-time map u0 -> u(T). The spectral route is exact for the
/// discrete operator (K = sum E_{alpha,1}(-lambda_n T^alpha) phi_n phi_n^T W);
/// the fdm-columns route drives the L1 solver through each canonical basis
/// field and serves as a cross-check oracle on small grids.
struct ForwardMap {
    Eigen::MatrixXd matrix;
    Eigen::MatrixXd normal; // K^T K, precomputed for the Tikhonov solves
    double alpha;
    double T;
    ForwardMapProvenance provenance;
    Grid grid;
    int components;

    Field apply(const Field& u0) const {
        if (u0.grid() != grid || u0.components() != components) {
            throw shape_error("forward map: field shape mismatch");
        }
        return Field::from_flat(grid, components, matrix * u0.flat());
    }
};

ForwardMap build_forward_map(const EigenSystem& es, double alpha, double T,
                             ForwardMapProvenance provenance =
                                 ForwardMapProvenance::spectral);

/// Truncated spectral inversion
///   u0 = sum_{n <= cutoff} (u1, phi_n) / E_{alpha,1}(-lambda_n T^alpha) phi_n;
/// cutoff = nullopt uses every mode (the discrete reconstruction formula).
/// A used mode with amplification 1/E above 1e15 raises convergence_error
/// naming the first offending mode.
Field backward_spectral(const EigenSystem& es, double alpha, double T,
                        const Field& u1, std::optional<int> cutoff = std::nullopt);

struct RegularizationChoice {
    enum class Method { fixed_epsilon, discrepancy };
    Method method = Method::fixed_epsilon;
    double epsilon = 1e-8;          // fixed mode
    double noise_estimate = 0.0;    // discrepancy mode, h-weighted L2
    double discrepancy_factor = 1.1;
};

struct TikhonovResult {
    Field reconstruction;
    double epsilon;    // the chosen regularization parameter
    double residual;   // ||K u0 - u1|| in the h-weighted norm
    int bisections = 0;
};

/// Solves (K^T K + eps I) u0 = K^T u1 by Cholesky factorization. Discrepancy
/// mode bisects log eps until the residual matches
/// discrepancy_factor * noise_estimate; a non-bracketing target raises
/// domain_error reporting both endpoint residuals.
TikhonovResult backward_tikhonov(const ForwardMap& fm, const Field& u1,
                                 const RegularizationChoice& reg);

struct StabilityProbeRow {
    double perturbation; // size in the discrete D(A) norm
    double error;        // response of the truncated reconstruction
    double ratio;        // error / perturbation
};

/// Empirical Lipschitz-stability probe: perturbs u1 = forward(u0) along a
/// seeded random direction normalized in the discrete D(A) norm, reconstructs
/// with a fixed cutoff, and reports error-to-perturbation ratios.
std::vector<StabilityProbeRow> stability_probe(
    const EigenSystem& es, double alpha, double T, const Field& u0,
    const std::vector<double>& perturbation_sizes, int cutoff,
    std::uint64_t seed = 17);

} // namespace fracback
