#include "fracback/operator.hpp"

#include "fracback/errors.hpp"

namespace fracback {
namespace {

// Interior node p +/- unit step in direction dir (0=x, 1=y); -1 if the
// neighbor is a boundary node.
int neighbor(const Grid& g, int p, int dir, int step) {
    if (dir == 0) {
        const int ix = g.ix(p) + step;
        return (ix < 0 || ix >= g.nx()) ? -1 : p + step;
    }
    const int iy = g.iy(p) + step;
    return (iy < 0 || iy >= g.ny()) ? -1 : p + step * g.nx();
}

// Adds the flux-form stencil of -d_dir(a d_dir u) acting from component
// block `bk` into block `bi`, with midpoint-sampled coefficient.
void add_flux(Eigen::MatrixXd& m, const Grid& g, int bi, int bk, int dir,
              const ScalarCoefficient& a) {
    const int M = g.interior_count();
    const double h = dir == 0 ? g.hx() : g.hy();
    const double inv_h2 = 1.0 / (h * h);
    for (int p = 0; p < M; ++p) {
        const double x = g.x(p);
        const double y = g.y(p);
        const double a_minus =
            dir == 0 ? a(x - 0.5 * h, y) : a(x, y - 0.5 * h);
        const double a_plus =
            dir == 0 ? a(x + 0.5 * h, y) : a(x, y + 0.5 * h);
        m(bi * M + p, bk * M + p) += (a_minus + a_plus) * inv_h2;
        const int pm = neighbor(g, p, dir, -1);
        const int pp = neighbor(g, p, dir, +1);
        if (pm >= 0) m(bi * M + p, bk * M + pm) -= a_minus * inv_h2;
        if (pp >= 0) m(bi * M + p, bk * M + pp) -= a_plus * inv_h2;
    }
}

// Adds D_j^T diag(a) D_l (centered differences, node-sampled coefficient)
// for the cross-derivative term -d_j(a d_l u), j != l. Row p touches the
// four diagonal neighbors p -+ e_j +- e_l through the fluxes at p -+ e_j.
void add_cross(Eigen::MatrixXd& m, const Grid& g, int bi, int bk, int dj, int dl,
               const ScalarCoefficient& a) {
    const int M = g.interior_count();
    const double hj = dj == 0 ? g.hx() : g.hy();
    const double hl = dl == 0 ? g.hx() : g.hy();
    const double scale = 1.0 / (4.0 * hj * hl);
    for (int p = 0; p < M; ++p) {
        for (int sj : {-1, +1}) {
            const int r = neighbor(g, p, dj, sj);
            if (r < 0) continue; // flux at a tangential boundary node vanishes
            const double ar = a(g.x(r), g.y(r));
            for (int sl : {-1, +1}) {
                const int q = neighbor(g, r, dl, sl);
                if (q < 0) continue;
                // (D_j^T X)_p = (X_{p-ej} - X_{p+ej})/(2hj), X_r = ar*(u_{r+el}-u_{r-el})/(2hl)
                m(bi * M + p, bk * M + q) -= sj * sl * ar * scale;
            }
        }
    }
}

} // namespace

CoupledOperator assemble_weak(const Grid& grid, const WeakCoefficients& coeffs) {
    const ValidationReport report = validate_coefficients(grid, coeffs);
    if (!report.all_pass()) {
        throw validation_error("assemble_weak: " + report.first_failure());
    }
    const int K = coeffs.components();
    const int M = grid.interior_count();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(K * M, K * M);
    for (int k = 0; k < K; ++k) {
        add_flux(m, grid, k, k, 0, coeffs.diffusion[k]);
        if (grid.dim() == 2) add_flux(m, grid, k, k, 1, coeffs.diffusion[k]);
    }
    for (int i = 0; i < K; ++i) {
        for (int k = 0; k < K; ++k) {
            const double c = coeffs.coupling(i, k);
            if (c == 0.0) continue;
            for (int p = 0; p < M; ++p) m(i * M + p, k * M + p) += c;
        }
    }
    return CoupledOperator{grid, K, OperatorKind::weak, std::move(m)};
}

CoupledOperator assemble_strong(const Grid& grid, const StrongCoefficients& coeffs) {
    if (grid.dim() != 2) {
        throw domain_error("assemble_strong: requires a 2D grid (d = K = 2)");
    }
    const ValidationReport report = validate_coefficients(grid, coeffs);
    if (!report.all_pass()) {
        throw validation_error("assemble_strong: " + report.first_failure());
    }
    const int K = 2;
    const int M = grid.interior_count();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(K * M, K * M);
    for (int i = 0; i < K; ++i) {
        for (int k = 0; k < K; ++k) {
            for (int j = 0; j < 2; ++j) {
                for (int l = 0; l < 2; ++l) {
                    ScalarCoefficient a = [&coeffs, i, j, k, l](double x, double y) {
                        return coeffs.tensor(i, j, k, l, x, y);
                    };
                    if (j == l) {
                        add_flux(m, grid, i, k, j, a);
                    } else {
                        add_cross(m, grid, i, k, j, l, a);
                    }
                }
            }
        }
    }
    for (int i = 0; i < K; ++i) {
        for (int k = 0; k < K; ++k) {
            const double c = coeffs.coupling(i, k);
            if (c == 0.0) continue;
            for (int p = 0; p < M; ++p) m(i * M + p, k * M + p) += c;
        }
    }
    return CoupledOperator{grid, K, OperatorKind::strong, std::move(m)};
}

} // namespace fracback
