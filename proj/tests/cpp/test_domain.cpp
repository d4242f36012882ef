#include "fracback/operator.hpp"

#include "fracback/eigensystem.hpp"
#include "fracback/errors.hpp"
#include "fracback/rng.hpp"

#include <cmath>
#include <doctest.h>

using namespace fracback;

namespace {
constexpr double kPi = 3.14159265358979323846;

WeakCoefficients paper_1d_coefficients() {
    WeakCoefficients c;
    c.diffusion = {coefficient_family("one_plus_x"), coefficient_family("one_plus_x")};
    c.coupling.resize(2, 2);
    c.coupling << 1.0, -1.0, -1.0, 1.0;
    return c;
}
} // namespace

TEST_SUITE("domain") {

TEST_CASE("grid basics and invariants") {
    const Grid g = Grid::line(150);
    CHECK(g.interior_count() == 150);
    CHECK(g.hx() == doctest::Approx(1.0 / 151.0));
    CHECK(g.x(0) == doctest::Approx(1.0 / 151.0));

    const Grid q = Grid::square(8, 6);
    CHECK(q.interior_count() == 48);
    CHECK(q.weight() == doctest::Approx(1.0 / (9.0 * 7.0)));
    CHECK(q.y(8) == doctest::Approx(2.0 / 7.0));

    CHECK_THROWS_AS(Grid::line(2), domain_error);
    CHECK_THROWS_AS(Grid::square(10, 1), domain_error);
}

TEST_CASE("field flat view is component-major") {
    const Grid g = Grid::line(4);
    Field f(g, 2);
    f.at(0, 1) = 3.0;
    f.at(1, 0) = -2.0;
    CHECK(f.flat()(1) == 3.0);
    CHECK(f.flat()(4) == -2.0);
    const Field g2 = Field::from_flat(g, 2, f.flat());
    CHECK(g2.at(1, 0) == -2.0);
}

TEST_CASE("hand-assembled 1D Laplacian: 3 points, h = 1/4") {
    WeakCoefficients c;
    c.diffusion = {coefficient_family("constant", {1.0})};
    c.coupling = Eigen::MatrixXd::Zero(1, 1);
    const CoupledOperator op = assemble_weak(Grid::line(3), c);
    Eigen::MatrixXd expected(3, 3);
    expected << 32, -16, 0, -16, 32, -16, 0, -16, 32;
    CHECK((op.matrix - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("paper coupling matrix is accepted, non-symmetric coupling rejected") {
    const Grid g = Grid::line(10);
    WeakCoefficients c = paper_1d_coefficients();
    const ValidationReport report = validate_coefficients(g, c);
    CHECK(report.all_pass());

    c.coupling << 0.0, 1.0, 0.0, 0.0;
    CHECK_FALSE(validate_coefficients(g, c).all_pass());
    CHECK_THROWS_AS(assemble_weak(g, c), validation_error);
    try {
        assemble_weak(g, c);
    } catch (const validation_error& e) {
        CHECK(std::string(e.what()).find("symmetry") != std::string::npos);
    }
}

TEST_CASE("negative-definite coupling rejected with the eigenvalue named") {
    const Grid g = Grid::line(10);
    WeakCoefficients c = paper_1d_coefficients();
    c.coupling << -1.0, 0.0, 0.0, -1.0;
    const ValidationReport report = validate_coefficients(g, c);
    CHECK_FALSE(report.all_pass());
    CHECK(report.first_failure().find("positive semidefinite") != std::string::npos);
}

TEST_CASE("kappa estimates for the paper coefficient families") {
    {
        WeakCoefficients c;
        c.diffusion = {coefficient_family("one_plus_x")};
        c.coupling = Eigen::MatrixXd::Zero(1, 1);
        const ValidationReport r = validate_coefficients(Grid::line(50), c);
        CHECK(r.all_pass());
        // infimum of 1 + x at the left boundary midpoint
        CHECK(r.kappa_estimate == doctest::Approx(1.0).epsilon(0.02));
    }
    {
        WeakCoefficients c;
        c.diffusion = {coefficient_family("one_plus_r2"),
                       coefficient_family("three_plus_cos")};
        c.coupling.resize(2, 2);
        c.coupling << 1.0, -1.0, -1.0, 1.0;
        const ValidationReport r = validate_coefficients(Grid::square(16, 16), c);
        CHECK(r.all_pass());
        CHECK(r.kappa_estimate == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("ellipticity violation names the sample point") {
    WeakCoefficients c;
    c.diffusion = {[](double x, double) { return x - 0.5; }}; // negative for x < 0.5
    c.coupling = Eigen::MatrixXd::Zero(1, 1);
    const ValidationReport r = validate_coefficients(Grid::line(9), c);
    CHECK_FALSE(r.all_pass());
    CHECK(r.first_failure().find("ellipticity") != std::string::npos);
    CHECK(r.first_failure().find("(0.0") != std::string::npos);
}

TEST_CASE("assembled operators are symmetric") {
    const CoupledOperator weak =
        assemble_weak(Grid::line(40), paper_1d_coefficients());
    CHECK(weak.symmetry_defect() <=
          1e-13 * weak.matrix.cwiseAbs().maxCoeff());

    StrongCoefficients strong{isotropic_lame_tensor(1.0, 1.0),
                              Eigen::MatrixXd::Zero(2, 2)};
    const CoupledOperator s = assemble_strong(Grid::square(7, 7), strong);
    CHECK(s.symmetry_defect() <= 1e-12 * s.matrix.cwiseAbs().maxCoeff());
}

TEST_CASE("weak assembly decouples block-diagonally when C = 0") {
    const Grid g = Grid::line(12);
    WeakCoefficients c = paper_1d_coefficients();
    c.coupling.setZero();
    const CoupledOperator op = assemble_weak(g, c);
    const int m = g.interior_count();
    CHECK(op.matrix.block(0, m, m, m).cwiseAbs().maxCoeff() == 0.0);
    CHECK(op.matrix.block(m, 0, m, m).cwiseAbs().maxCoeff() == 0.0);

    WeakCoefficients single;
    single.diffusion = {coefficient_family("one_plus_x")};
    single.coupling = Eigen::MatrixXd::Zero(1, 1);
    const CoupledOperator one = assemble_weak(g, single);
    CHECK((op.matrix.block(0, 0, m, m) - one.matrix).cwiseAbs().maxCoeff() == 0.0);
    CHECK((op.matrix.block(m, m, m, m) - one.matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mesh refinement: O(h^2) convergence applying the 1D operator") {
    WeakCoefficients c;
    c.diffusion = {coefficient_family("constant", {1.0})};
    c.coupling = Eigen::MatrixXd::Zero(1, 1);
    double prev_err = 0.0;
    for (int n : {16, 32, 64, 128}) {
        const Grid g = Grid::line(n);
        const Field u = Field::from_function(
            g, 1, [](int, double x, double) { return std::sin(kPi * x); });
        const Field au = assemble_weak(g, c).apply(u);
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            err = std::max(err, std::abs(au.at(0, i) -
                                         kPi * kPi * std::sin(kPi * g.x(i))));
        }
        if (prev_err > 0.0) {
            const double rate = prev_err / err;
            CHECK(rate > 3.5); // h halves, error should drop ~4x
            CHECK(rate < 4.5);
        }
        prev_err = err;
    }
}

TEST_CASE("discrete quadratic form positivity on random vectors") {
    const CoupledOperator op =
        assemble_weak(Grid::line(30), paper_1d_coefficients());
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd v(op.size());
        for (int i = 0; i < op.size(); ++i) v(i) = rng.normal();
        const double form = v.dot(op.matrix * v);
        CHECK(form > 0.0);
        // kappa_discrete * |v|^2 with kappa at least the continuum pi^2 scale
        CHECK(form >= 8.0 * v.squaredNorm());
    }
}

TEST_CASE("strong coupling: isotropic tensor passes, symmetry violation rejected") {
    const Grid g = Grid::square(6, 6);
    StrongCoefficients ok{isotropic_lame_tensor(1.0, 1.0),
                          Eigen::MatrixXd::Zero(2, 2)};
    CHECK(validate_coefficients(g, ok).all_pass());
    // quadratic form 2 mu |e|^2 + lambda (tr e)^2 >= 2 |e|^2
    CHECK(validate_coefficients(g, ok).kappa_estimate ==
          doctest::Approx(2.0).epsilon(1e-10));

    StrongCoefficients bad = ok;
    bad.tensor = [](int i, int j, int k, int l, double, double) {
        if (i == 0 && j == 1 && k == 0 && l == 1) return 1.5; // a_1212
        if (i == 1 && j == 0 && k == 0 && l == 1) return 1.0; // a_2112 differs
        const auto base = isotropic_lame_tensor(1.0, 0.0);
        return base(i, j, k, l, 0.0, 0.0);
    };
    CHECK_FALSE(validate_coefficients(g, bad).all_pass());
    CHECK_THROWS_AS(assemble_strong(g, bad), validation_error);
}

TEST_CASE("strong assembly requires d = 2") {
    StrongCoefficients c{isotropic_lame_tensor(1.0, 0.0),
                         Eigen::MatrixXd::Zero(2, 2)};
    CHECK_THROWS_AS(assemble_strong(Grid::line(8), c), domain_error);
}

TEST_CASE("strong operator on 8x8 grid is positive definite") {
    StrongCoefficients c{isotropic_lame_tensor(1.0, 0.0),
                         Eigen::MatrixXd::Zero(2, 2)};
    const CoupledOperator op = assemble_strong(Grid::square(8, 8), c);
    const EigenSystem es = eigendecompose(op);
    CHECK(es.eigenvalues(0) > 0.0);
}

TEST_CASE("tabulated coefficient interpolates node values") {
    const Grid g = Grid::line(5);
    std::vector<double> values;
    for (int i = 0; i < 5; ++i) values.push_back(1.0 + g.x(i));
    const ScalarCoefficient a = tabulated_coefficient(g, values);
    CHECK(a(g.x(2), 0.0) == doctest::Approx(1.0 + g.x(2)).epsilon(1e-12));
    // midpoint between nodes 1 and 2
    const double mid = 0.5 * (g.x(1) + g.x(2));
    CHECK(a(mid, 0.0) == doctest::Approx(1.0 + mid).epsilon(1e-12));
    CHECK_THROWS_AS(tabulated_coefficient(g, {1.0, 2.0}), shape_error);
}

TEST_CASE("unknown coefficient family raises") {
    CHECK_THROWS_AS(coefficient_family("does_not_exist"), domain_error);
}

} // TEST_SUITE
