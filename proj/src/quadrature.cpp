#include "fracback/quadrature.hpp"

#include "fracback/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>

namespace fracback {
namespace {

// QUADPACK dqk15 nodes/weights on [-1, 1].
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Segment {
    double a, b;
    double value;
    double error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double result_g = kWg[3] * fc;
    double result_k = kWgk[7] * fc;
    for (int j = 0; j < 7; ++j) {
        const double x = h * kXgk[j];
        const double fsum = f(c - x) + f(c + x);
        result_k += kWgk[j] * fsum;
        if (j % 2 == 1) result_g += kWg[j / 2] * fsum;
    }
    Segment s;
    s.a = a;
    s.b = b;
    s.value = result_k * h;
    s.error = std::abs((result_k - result_g) * h);
    return s;
}

} // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts) {
    if (!(b > a)) return 0.0;
    std::priority_queue<Segment> queue;
    Segment whole = gk15(f, a, b);
    double total = whole.value;
    double total_err = whole.error;
    queue.push(whole);
    int subdivisions = 0;
    while (total_err > std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) {
        if (++subdivisions > opts.max_subdivisions) {
            throw convergence_error(
                "adaptive quadrature: subdivision budget exhausted, error "
                "estimate " +
                std::to_string(total_err));
        }
        Segment worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Segment left = gk15(f, worst.a, mid);
        Segment right = gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
    }
    return total;
}

Eigen::VectorXd integrate_vector(
    const std::function<Eigen::VectorXd(double)>& f, double a, double b,
    const QuadratureOptions& opts) {
    struct VSegment {
        double a, b;
        Eigen::VectorXd value;
        double error;
        bool operator<(const VSegment& o) const { return error < o.error; }
    };
    auto vgk15 = [&](double lo, double hi) {
        const double c = 0.5 * (lo + hi);
        const double h = 0.5 * (hi - lo);
        Eigen::VectorXd fc = f(c);
        Eigen::VectorXd rg = kWg[3] * fc;
        Eigen::VectorXd rk = kWgk[7] * fc;
        for (int j = 0; j < 7; ++j) {
            const double x = h * kXgk[j];
            Eigen::VectorXd fsum = f(c - x) + f(c + x);
            rk += kWgk[j] * fsum;
            if (j % 2 == 1) rg += kWg[j / 2] * fsum;
        }
        VSegment s;
        s.a = lo;
        s.b = hi;
        s.value = rk * h;
        s.error = ((rk - rg) * h).cwiseAbs().maxCoeff();
        return s;
    };

    if (!(b > a)) return Eigen::VectorXd();
    std::priority_queue<VSegment> queue;
    VSegment whole = vgk15(a, b);
    Eigen::VectorXd total = whole.value;
    double total_err = whole.error;
    queue.push(std::move(whole));
    int subdivisions = 0;
    while (total_err >
           std::max(opts.abs_tol, opts.rel_tol * total.cwiseAbs().maxCoeff())) {
        if (++subdivisions > opts.max_subdivisions) {
            throw convergence_error(
                "adaptive vector quadrature: subdivision budget exhausted");
        }
        VSegment worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        VSegment left = vgk15(worst.a, mid);
        VSegment right = vgk15(mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        queue.push(std::move(left));
        queue.push(std::move(right));
    }
    return total;
}

void gauss8(double a, double b, std::array<double, 8>& nodes,
            std::array<double, 8>& weights) {
    static constexpr std::array<double, 4> x = {
        0.183434642495649804939476142360184,
        0.525532409916328985817739049189246,
        0.796666477413626739591553936475830,
        0.960289856497536231683560868569473};
    static constexpr std::array<double, 4> w = {
        0.362683783378361982965150449277196,
        0.313706645877887287337962201986601,
        0.222381034453374470544355994426241,
        0.101228536290376259152531354309962};
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    for (int i = 0; i < 4; ++i) {
        nodes[2 * i] = c - h * x[i];
        nodes[2 * i + 1] = c + h * x[i];
        weights[2 * i] = w[i] * h;
        weights[2 * i + 1] = w[i] * h;
    }
}

} // namespace fracback
