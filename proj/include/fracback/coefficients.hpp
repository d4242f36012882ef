#pragma once

#include "fracback/grid.hpp"

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace fracback {

/// Scalar diffusion coefficient a(x) or a(x,y), callable anywhere in the
/// closed domain (assembly samples it at nodes and cell midpoints).
using ScalarCoefficient = std::function<double(double, double)>;

/// Fourth-order tensor entry a_{ijkl}(x,y) for the strongly coupled system.
using TensorCoefficient = std::function<double(int, int, int, int, double, double)>;

/// Named built-in coefficient families:
///   constant(c), one_plus_x, one_plus_r2, three_plus_cos
ScalarCoefficient coefficient_family(const std::string& name,
                                     const std::vector<double>& params = {});

/// Coefficient tabulated at the interior nodes of a grid (e.g. loaded from
/// CSV); evaluation interpolates (bi)linearly with constant extension to the
/// closed domain.
ScalarCoefficient tabulated_coefficient(const Grid& grid,
                                        std::vector<double> node_values);

/// Isotropic Lame tensor a_{ijkl} = mu (d_ik d_jl + d_il d_jk) + lambda d_ij d_kl.
TensorCoefficient isotropic_lame_tensor(double mu, double lambda);

/// Coefficients of the weakly coupled system: per-component scalar diffusion
/// plus a constant symmetric PSD coupling matrix.
struct WeakCoefficients {
    std::vector<ScalarCoefficient> diffusion; // size K
    Eigen::MatrixXd coupling;                 // K x K, constant in space

    int components() const { return static_cast<int>(diffusion.size()); }
};

/// Coefficients of the strongly coupled system (d = K = 2): fully symmetric
/// fourth-order tensor plus the same constant coupling matrix.
struct StrongCoefficients {
    TensorCoefficient tensor;
    Eigen::MatrixXd coupling; // 2 x 2

    int components() const { return 2; }
};

struct ValidationCheck {
    std::string name;
    bool pass;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    double kappa_estimate = 0.0; // min of the sampled quadratic forms

    bool all_pass() const;
    std::string first_failure() const;
    std::string to_string() const;
};

ValidationReport validate_coefficients(const Grid& grid, const WeakCoefficients& c);
ValidationReport validate_coefficients(const Grid& grid, const StrongCoefficients& c);

} // namespace fracback
