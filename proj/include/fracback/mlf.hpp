#pragma once

namespace fracback::mlf {

/// Parameter pair of E_{alpha,beta}; requires 0 < alpha <= 1 and beta >= alpha,
/// the range on which the C/(1+x) decay bound holds.
struct MlfParams {
    double alpha;
    double beta = 1.0;

    void validate() const;
};

/// Evaluation-regime boundaries for arguments -x on the negative real axis.
struct MlfRegime {
    double series_cutoff = 5.0;     // power series for x <= series_cutoff
    double asymptotic_cutoff = 50.0; // inverse-power expansion for x >= this
    int asymptotic_terms = 3;       // minimum expansion order p

    void validate() const;
};

/// E_{alpha,beta}(-x) for x >= 0.
///
/// Three regimes: compensated power series (small x, with a cancellation
/// monitor that falls back to quadrature when the alternating terms grow too
/// large relative to the result), adaptive quadrature of the spectral
/// representation (mid range), and the inverse-power asymptotic expansion
/// (large x). Relative accuracy target 1e-8 across the supported range.
double ml_eval(const MlfParams& params, double x, const MlfRegime& regime = {});

/// d/dt E_{alpha,1}(-lambda t^alpha) = -lambda t^(alpha-1) E_{alpha,alpha}(-lambda t^alpha).
double ml_derivative(const MlfParams& params, double lambda, double t,
                     const MlfRegime& regime = {});

/// Integral of s^(alpha-1) E_{alpha,alpha}(-lambda s^alpha) over (0, eta],
/// evaluated through the closed form (1 - E_{alpha,1}(-lambda eta^alpha))/lambda.
/// The result lies in (0, 1/lambda].
double ml_kernel_integral(const MlfParams& params, double lambda, double eta,
                          const MlfRegime& regime = {});

// Individual regimes, exposed for cross-regime consistency checks.
// eval_series reports failure (returns false) instead of returning a value
// polluted by cancellation.
bool eval_series(double alpha, double beta, double x, double& out);
double eval_integral(double alpha, double beta, double x);
double eval_asymptotic(double alpha, double beta, double x, int min_terms);

/// 1/Gamma(y), finite for every real y (zero at the poles of Gamma).
double reciprocal_gamma(double y);

} // namespace fracback::mlf
