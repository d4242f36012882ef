#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace fracback {

struct QuadratureOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    int max_subdivisions = 2000;
};

/// Adaptive Gauss-Kronrod 7-15 on a finite interval.
/// Throws convergence_error when the subdivision budget is exhausted
/// before the error estimate drops below max(abs_tol, rel_tol*|I|).
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts = {});

/// Same driver for vector-valued integrands; the error estimate is the
/// max-norm over components.
Eigen::VectorXd integrate_vector(
    const std::function<Eigen::VectorXd(double)>& f, double a, double b,
    const QuadratureOptions& opts = {});

/// Fixed-order Gauss-Legendre rule on [a, b] (n = 8 nodes).
/// Returns nodes and weights; used for composite rules on graded meshes.
void gauss8(double a, double b, std::array<double, 8>& nodes,
            std::array<double, 8>& weights);

} // namespace fracback
