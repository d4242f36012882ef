#pragma once

#include "fracback/operator.hpp"
#include "fracback/spectral.hpp"

#include <optional>
#include <vector>

namespace fracback {

struct TimeGrid {
    double T;
    int n_steps;

    TimeGrid(double final_time, int steps) : T(final_time), n_steps(steps) {
        if (!(T > 0.0)) throw domain_error("time grid: T must be positive");
        if (n_steps < 1) throw domain_error("time grid: n_steps must be >= 1");
    }
    double tau() const { return T / n_steps; }
};

/// L1 quadrature weights b_j = (j+1)^(1-alpha) - j^(1-alpha); b_0 = 1 and the
/// sequence decreases strictly toward 0.
struct L1Weights {
    double alpha;
    Eigen::VectorXd b;

    static L1Weights make(double alpha, int n_steps);
};

struct ForwardResult {
    Field final_state;
    std::vector<Field> trajectory; // states at t_1..t_N when requested
};

/// Implicit L1 time stepping for d_t^alpha(u - u0) + A u = F:
///   (c I + A) u^n = c [ sum_{j=1}^{n-1} (b_{n-j-1} - b_{n-j}) u^j + b_{n-1} u^0 ] + F^n
/// with c = 1/(Gamma(2-alpha) tau^alpha). The shifted matrix is factored once
/// and reused across all steps.
ForwardResult solve_forward(const CoupledOperator& op, double alpha,
                            const Field& u0, const SourceSpec* source,
                            const TimeGrid& tg, bool keep_trajectory = false);

/// Batched homogeneous solves sharing one factorization; states march as a
/// single multi-column matrix. Arithmetic per sample matches solve_forward
/// up to BLAS accumulation order.
std::vector<Field> solve_forward_multi(const CoupledOperator& op, double alpha,
                                       const std::vector<Field>& initial_values,
                                       const TimeGrid& tg);

/// Fits the temporal convergence order of solve_forward at t = T against the
/// spectral propagator over a sequence of step counts. The measured order of
/// the uniform-mesh L1 scheme for initial-value subdiffusion is 1 at fixed
/// positive time.
double convergence_order(const CoupledOperator& op, double alpha, const Field& u0,
                         double T, const std::vector<int>& step_counts);

} // namespace fracback
