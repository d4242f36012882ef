#pragma once

#include "fracback/eigensystem.hpp"
#include "fracback/mlf.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fracback {

/// Time-dependent source term F(., t) on the operator's grid.
struct SourceSpec {
    std::function<Field(double)> sampler;
    std::string description;
};

/// A^gamma f = sum lambda_n^gamma (f, phi_n) phi_n for gamma in [0, 1];
/// gamma = 0 returns f unchanged.
Field frac_power_apply(const EigenSystem& es, double gamma, const Field& f);

/// Evaluates the Balakrishnan integral
///   (sin(pi gamma)/pi) Int_0^inf lambda^(gamma-1) A (lambda I + A)^{-1} f dlambda
/// by adaptive quadrature with direct resolvent solves (independent of the
/// eigenbasis) and returns the relative deviation from frac_power_apply.
double frac_power_integral_check(const EigenSystem& es, double gamma, const Field& f);

/// Homogeneous propagator u(., t) = sum E_{alpha,1}(-lambda_n t^alpha)(u0, phi_n) phi_n.
std::vector<Field> propagate_homogeneous(const EigenSystem& es, double alpha,
                                         const Field& u0,
                                         const std::vector<double>& times);

struct DuhamelOptions {
    int panels = 256;
    /// Mesh grading exponent toward s = 0; <= 0 selects max(2, 2/alpha),
    /// which keeps the s^(alpha-1) endpoint error below the target for
    /// small alpha.
    double grading = 0.0;
};

/// Duhamel propagator for zero initial value:
///   u(., t) = sum_n ( Int_0^t s^(alpha-1) E_{alpha,alpha}(-lambda_n s^alpha)
///                     (F(., t-s), phi_n) ds ) phi_n
/// by composite Gauss quadrature on a graded mesh.
std::vector<Field> propagate_source(const EigenSystem& es, double alpha,
                                    const SourceSpec& source,
                                    const std::vector<double>& times,
                                    const DuhamelOptions& opts = {});

/// ||u(t)||_{D(A^gamma)} profile of the homogeneous solution.
std::vector<double> decay_profile(const EigenSystem& es, double alpha,
                                  const Field& u0, double gamma,
                                  const std::vector<double>& times);

} // namespace fracback
