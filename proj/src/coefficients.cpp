#include "fracback/coefficients.hpp"

#include "fracback/errors.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace fracback {
namespace {

std::string point_str(double x, double y, int dim) {
    std::ostringstream os;
    os << "(" << x;
    if (dim == 2) os << ", " << y;
    os << ")";
    return os.str();
}

// Symmetric 2x2 basis for sampling the stability condition.
const double kSymBasis[3][2][2] = {
    {{1, 0}, {0, 0}},
    {{0, 0}, {0, 1}},
    {{0, 1.0 / std::sqrt(2.0)}, {1.0 / std::sqrt(2.0), 0}},
};

} // namespace

ScalarCoefficient coefficient_family(const std::string& name,
                                     const std::vector<double>& params) {
    if (name == "constant") {
        const double c = params.empty() ? 1.0 : params[0];
        return [c](double, double) { return c; };
    }
    if (name == "one_plus_x") {
        return [](double x, double) { return 1.0 + x; };
    }
    if (name == "one_plus_r2") {
        return [](double x, double y) { return 1.0 + x * x + y * y; };
    }
    if (name == "three_plus_cos") {
        return [](double x, double y) { return 3.0 + std::cos(x) + std::cos(y); };
    }
    throw domain_error("unknown coefficient family '" + name + "'");
}

ScalarCoefficient tabulated_coefficient(const Grid& grid,
                                        std::vector<double> node_values) {
    if (static_cast<int>(node_values.size()) != grid.interior_count()) {
        throw shape_error("tabulated coefficient: expected " +
                          std::to_string(grid.interior_count()) + " values, got " +
                          std::to_string(node_values.size()));
    }
    auto values = std::make_shared<std::vector<double>>(std::move(node_values));
    const int nx = grid.nx();
    const int ny = grid.dim() == 2 ? grid.ny() : 1;
    const double hx = grid.hx();
    const double hy = grid.hy();
    const int dim = grid.dim();
    return [=](double x, double y) {
        // node j holds the value at (j+1)h; clamp to the interior range so
        // boundary-adjacent midpoints extend the nearest node.
        const double fx = std::clamp(x / hx - 1.0, 0.0, static_cast<double>(nx - 1));
        const int ix0 = std::min(static_cast<int>(fx), nx - 2 >= 0 ? nx - 2 : 0);
        const double tx = fx - ix0;
        if (dim == 1) {
            return (1.0 - tx) * (*values)[ix0] + tx * (*values)[std::min(ix0 + 1, nx - 1)];
        }
        const double fy = std::clamp(y / hy - 1.0, 0.0, static_cast<double>(ny - 1));
        const int iy0 = std::min(static_cast<int>(fy), ny - 2 >= 0 ? ny - 2 : 0);
        const double ty = fy - iy0;
        auto at = [&](int ix, int iy) { return (*values)[iy * nx + ix]; };
        const int ix1 = std::min(ix0 + 1, nx - 1);
        const int iy1 = std::min(iy0 + 1, ny - 1);
        return (1.0 - tx) * (1.0 - ty) * at(ix0, iy0) + tx * (1.0 - ty) * at(ix1, iy0) +
               (1.0 - tx) * ty * at(ix0, iy1) + tx * ty * at(ix1, iy1);
    };
}

TensorCoefficient isotropic_lame_tensor(double mu, double lambda) {
    return [mu, lambda](int i, int j, int k, int l, double, double) {
        const double dik = i == k ? 1.0 : 0.0;
        const double djl = j == l ? 1.0 : 0.0;
        const double dil = i == l ? 1.0 : 0.0;
        const double djk = j == k ? 1.0 : 0.0;
        const double dij = i == j ? 1.0 : 0.0;
        const double dkl = k == l ? 1.0 : 0.0;
        return mu * (dik * djl + dil * djk) + lambda * dij * dkl;
    };
}

bool ValidationReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const ValidationCheck& c) { return c.pass; });
}

std::string ValidationReport::first_failure() const {
    for (const auto& c : checks) {
        if (!c.pass) return c.name + ": " + c.detail;
    }
    return {};
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        os << (c.pass ? "[pass] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
    }
    os << "kappa estimate: " << kappa_estimate << "\n";
    return os.str();
}

namespace {

void check_coupling(const Eigen::MatrixXd& c, ValidationReport& report) {
    ValidationCheck sym{"coupling symmetry", true, ""};
    const double scale = std::max(c.cwiseAbs().maxCoeff(), 1.0);
    const double defect = (c - c.transpose()).cwiseAbs().maxCoeff();
    if (defect > 1e-13 * scale) {
        sym.pass = false;
        sym.detail = "max |C - C^T| = " + std::to_string(defect);
    } else {
        sym.detail = "max |C - C^T| = " + std::to_string(defect);
    }
    report.checks.push_back(sym);

    ValidationCheck psd{"coupling positive semidefinite", true, ""};
    if (sym.pass) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
        const double min_ev = es.eigenvalues().minCoeff();
        psd.pass = min_ev >= -1e-12 * scale;
        psd.detail = "min eigenvalue = " + std::to_string(min_ev);
    } else {
        psd.pass = false;
        psd.detail = "skipped: coupling not symmetric";
    }
    report.checks.push_back(psd);
}

// Sample points for coefficient checks: nodes plus axis midpoints.
template <typename Fn>
void for_sample_points(const Grid& grid, Fn&& fn) {
    const int m = grid.interior_count();
    for (int i = 0; i < m; ++i) {
        const double x = grid.x(i);
        const double y = grid.y(i);
        fn(x, y);
        fn(x - 0.5 * grid.hx(), y);
        fn(x + 0.5 * grid.hx(), y);
        if (grid.dim() == 2) {
            fn(x, y - 0.5 * grid.hy());
            fn(x, y + 0.5 * grid.hy());
        }
    }
}

} // namespace

ValidationReport validate_coefficients(const Grid& grid, const WeakCoefficients& c) {
    ValidationReport report;
    if (c.components() < 1) {
        report.checks.push_back({"component count", false, "no diffusion coefficients"});
        return report;
    }
    double kappa = std::numeric_limits<double>::infinity();
    for (int k = 0; k < c.components(); ++k) {
        ValidationCheck ell{"ellipticity a_" + std::to_string(k + 1), true, ""};
        double min_val = std::numeric_limits<double>::infinity();
        double min_x = 0.0, min_y = 0.0;
        for_sample_points(grid, [&](double x, double y) {
            const double v = c.diffusion[k](x, y);
            if (v < min_val) {
                min_val = v;
                min_x = x;
                min_y = y;
            }
        });
        ell.pass = min_val > 0.0;
        ell.detail = "min sampled value " + std::to_string(min_val) + " at " +
                     point_str(min_x, min_y, grid.dim());
        report.checks.push_back(ell);
        kappa = std::min(kappa, min_val);
    }
    if (static_cast<int>(c.coupling.rows()) != c.components() ||
        static_cast<int>(c.coupling.cols()) != c.components()) {
        report.checks.push_back({"coupling shape", false,
                                 "expected " + std::to_string(c.components()) + "x" +
                                     std::to_string(c.components())});
    } else {
        check_coupling(c.coupling, report);
    }
    report.kappa_estimate = kappa;
    return report;
}

ValidationReport validate_coefficients(const Grid& grid, const StrongCoefficients& c) {
    ValidationReport report;
    if (grid.dim() != 2) {
        report.checks.push_back({"dimension", false, "strong coupling requires d = 2"});
        return report;
    }

    ValidationCheck sym{"tensor full symmetry", true, ""};
    double max_defect = 0.0;
    std::string where;
    for_sample_points(grid, [&](double x, double y) {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    for (int l = 0; l < 2; ++l) {
                        const double a = c.tensor(i, j, k, l, x, y);
                        const double d1 = std::abs(a - c.tensor(j, i, k, l, x, y));
                        const double d2 = std::abs(a - c.tensor(k, l, i, j, x, y));
                        const double d = std::max(d1, d2);
                        if (d > max_defect) {
                            max_defect = d;
                            where = point_str(x, y, 2);
                        }
                    }
    });
    sym.pass = max_defect <= 1e-13;
    sym.detail = "max symmetry defect " + std::to_string(max_defect) +
                 (where.empty() ? "" : " at " + where);
    report.checks.push_back(sym);

    ValidationCheck stab{"stability condition", true, ""};
    double kappa = std::numeric_limits<double>::infinity();
    std::string stab_where;
    for_sample_points(grid, [&](double x, double y) {
        // Quadratic form on the 3-dimensional space of symmetric 2x2 matrices;
        // kappa is its smallest eigenvalue minimized over sample points.
        Eigen::Matrix3d q;
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                double s = 0.0;
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        for (int k = 0; k < 2; ++k)
                            for (int l = 0; l < 2; ++l) {
                                s += c.tensor(i, j, k, l, x, y) * kSymBasis[a][i][j] *
                                     kSymBasis[b][k][l];
                            }
                q(a, b) = s;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (q + q.transpose()));
        const double min_ev = es.eigenvalues().minCoeff();
        if (min_ev < kappa) {
            kappa = min_ev;
            stab_where = point_str(x, y, 2);
        }
    });
    stab.pass = kappa > 0.0;
    stab.detail = "min quadratic-form eigenvalue " + std::to_string(kappa) + " at " +
                  stab_where;
    report.checks.push_back(stab);
    report.kappa_estimate = kappa;

    check_coupling(c.coupling, report);
    return report;
}

} // namespace fracback
