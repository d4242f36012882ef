#include "fracback/mlf.hpp"

#include "fracback/errors.hpp"
#include "fracback/quadrature.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace fracback::mlf {
namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

std::string fmt(double v) { return std::to_string(v); }

} // namespace

void MlfParams::validate() const {
    if (!(alpha > 0.0) || !(alpha <= 1.0)) {
        throw domain_error("mlf: alpha must lie in (0,1], got " + fmt(alpha));
    }
    if (!(beta >= alpha)) {
        throw domain_error("mlf: beta must satisfy beta >= alpha, got beta=" +
                           fmt(beta) + " alpha=" + fmt(alpha));
    }
}

void MlfRegime::validate() const {
    if (!(series_cutoff > 0.0) || !(asymptotic_cutoff > series_cutoff)) {
        throw domain_error("mlf: regime cutoffs must satisfy 0 < series < asymptotic");
    }
    if (asymptotic_terms < 1) {
        throw domain_error("mlf: asymptotic_terms must be >= 1");
    }
}

double reciprocal_gamma(double y) {
    if (y <= 0.0 && y == std::floor(y)) return 0.0; // poles of Gamma
    if (y > 0.5) {
        if (y > 170.0) {
            // Gamma overflows double range; its reciprocal underflows to 0.
            const double lg = std::lgamma(y);
            return lg > 700.0 ? 0.0 : std::exp(-lg);
        }
        return 1.0 / std::tgamma(y);
    }
    // Reflection: 1/Gamma(y) = Gamma(1-y) sin(pi y) / pi, stable near the
    // poles at y = 0, -1, -2, ... where sin(pi y) vanishes exactly.
    const double s = std::sin(kPi * y);
    if (s == 0.0) return 0.0;
    const double lg = std::lgamma(1.0 - y);
    if (lg > 700.0) {
        // Underflow: combine in log space with the sign of sin.
        const double mag = lg + std::log(std::abs(s)) - std::log(kPi);
        return mag < -700.0 ? 0.0 : std::copysign(std::exp(mag), s);
    }
    return std::exp(lg) * s / kPi;
}

bool eval_series(double alpha, double beta, double x, double& out) {
    // E(−x) = sum (−x)^m / Gamma(alpha m + beta), Kahan-compensated.
    // Terms advance through the log-gamma ratio so intermediate powers never
    // overflow on their own.
    const double tol = 1e-18;
    const int cap = 500;
    double term = reciprocal_gamma(beta);
    double sum = term;
    double comp = 0.0;
    double abs_sum = std::abs(term);
    for (int m = 0; m < cap; ++m) {
        const double g0 = std::lgamma(alpha * m + beta);
        const double g1 = std::lgamma(alpha * (m + 1) + beta);
        term *= -x * std::exp(g0 - g1);
        if (std::abs(term) > 1e120) return false; // diverging partial sums
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        abs_sum += std::abs(term);
        if (std::abs(term) < tol * std::max(std::abs(sum), 1e-300)) {
            // Cancellation monitor: rounding in the large alternating terms
            // leaves an absolute residue ~ eps * sum|t_m|.
            const double cancel_err =
                std::numeric_limits<double>::epsilon() * abs_sum;
            if (cancel_err > 1e-9 * std::abs(sum)) return false;
            out = sum;
            return true;
        }
    }
    return false;
}

double eval_integral(double alpha, double beta, double x) {
    if (!(x > 0.0)) throw domain_error("mlf: eval_integral requires x > 0");
    if (!(alpha < 1.0)) {
        throw domain_error("mlf: the spectral representation requires alpha < 1");
    }
    if (beta > 1.0) {
        // Reduce beta below 1 through E_{a,b}(z) = (E_{a,b-a}(z) - rgamma(b-a))/z;
        // the integrand is bounded at r = 0 only for beta <= 1.
        return (eval_integral(alpha, beta - alpha, x) -
                reciprocal_gamma(beta - alpha)) /
               (-x);
    }
    const double sin_ab = std::sin(kPi * (1.0 - beta + alpha));
    const double sin_b = std::sin(kPi * (1.0 - beta));
    const double cos_a = std::cos(kPi * alpha);
    auto kernel = [&](double r) {
        const double den = r * r + 2.0 * r * x * cos_a + x * x;
        const double num = r * sin_b + x * sin_ab;
        const double power =
            (beta == 1.0) ? 1.0 : std::pow(r, (1.0 - beta) / alpha);
        return power * std::exp(-std::pow(r, 1.0 / alpha)) * num /
               (kPi * alpha * den);
    };
    // exp(-r^(1/alpha)) is negligible past r = 48^alpha; split at the
    // denominator minimum r ~ x|cos(pi alpha)| where the integrand peaks.
    const double r_end = std::pow(48.0, alpha);
    QuadratureOptions opts;
    opts.abs_tol = 1e-12;
    opts.rel_tol = 1e-13;
    const double r_peak = std::abs(cos_a) * x;
    double total = 0.0;
    if (r_peak > 0.0 && r_peak < r_end) {
        total += integrate(kernel, 0.0, r_peak, opts);
        total += integrate(kernel, r_peak, r_end, opts);
    } else {
        total = integrate(kernel, 0.0, r_end, opts);
    }
    return total;
}

double eval_asymptotic(double alpha, double beta, double x, int min_terms) {
    // Lemma-type inverse-power expansion: E(-x) = -sum_k (-x)^{-k}/Gamma(beta-alpha k).
    // Terms are appended past min_terms while they keep shrinking, down to
    // relative 1e-16; the expansion is asymptotic, so growth stops the sum.
    double sum = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    const int cap = 80;
    for (int k = 1; k <= cap; ++k) {
        const double term =
            -std::pow(-x, -static_cast<double>(k)) * reciprocal_gamma(beta - alpha * k);
        const double mag = std::abs(term);
        // Structural zeros (poles of Gamma(beta - alpha k)) carry no
        // convergence information; skip them.
        if (mag == 0.0) continue;
        if (k > min_terms) {
            if (mag >= prev) break; // asymptotic divergence sets in
            if (mag < 1e-16 * std::abs(sum)) {
                sum += term;
                break;
            }
        }
        sum += term;
        prev = mag;
    }
    return sum;
}

double ml_eval(const MlfParams& params, double x, const MlfRegime& regime) {
    params.validate();
    regime.validate();
    if (!(x >= 0.0)) {
        throw domain_error("mlf: ml_eval requires x >= 0, got " + fmt(x));
    }
    const double alpha = params.alpha;
    const double beta = params.beta;
    if (x == 0.0) return reciprocal_gamma(beta);
    if (alpha == 1.0 && beta == 1.0) return std::exp(-x);

    if (x <= regime.series_cutoff) {
        double value;
        if (eval_series(alpha, beta, x, value)) return value;
        if (alpha < 1.0) return eval_integral(alpha, beta, x);
        throw convergence_error(
            "mlf: series regime failed for alpha=1, beta=" + fmt(beta) +
            ", x=" + fmt(x) + " and no alternative regime applies");
    }
    if (x >= regime.asymptotic_cutoff) {
        return eval_asymptotic(alpha, beta, x, regime.asymptotic_terms);
    }
    if (alpha < 1.0) return eval_integral(alpha, beta, x);
    throw convergence_error("mlf: no regime reaches tolerance for alpha=1, beta=" +
                            fmt(beta) + ", x=" + fmt(x));
}

double ml_derivative(const MlfParams& params, double lambda, double t,
                     const MlfRegime& regime) {
    params.validate();
    if (params.beta != 1.0) {
        throw domain_error("mlf: ml_derivative is defined for beta = 1");
    }
    if (!(lambda > 0.0)) throw domain_error("mlf: ml_derivative requires lambda > 0");
    if (!(t > 0.0)) {
        throw domain_error(
            "mlf: ml_derivative requires t > 0 (the closed form is singular at 0)");
    }
    const MlfParams inner{params.alpha, params.alpha};
    const double e = ml_eval(inner, lambda * std::pow(t, params.alpha), regime);
    return -lambda * std::pow(t, params.alpha - 1.0) * e;
}

double ml_kernel_integral(const MlfParams& params, double lambda, double eta,
                          const MlfRegime& regime) {
    params.validate();
    if (params.beta != 1.0) {
        throw domain_error("mlf: ml_kernel_integral is defined for beta = 1");
    }
    if (!(lambda > 0.0) || !(eta > 0.0)) {
        throw domain_error("mlf: ml_kernel_integral requires lambda > 0 and eta > 0");
    }
    const double e = ml_eval(params, lambda * std::pow(eta, params.alpha), regime);
    return (1.0 - e) / lambda;
}

} // namespace fracback::mlf
