#include "fracback/l1fdm.hpp"

#include "fracback/errors.hpp"
#include "fracback/mlf.hpp"

#include <cmath>
#include <doctest.h>

using namespace fracback;

namespace {
constexpr double kPi = 3.14159265358979323846;

CoupledOperator paper_1d_operator(int nx = 150) {
    WeakCoefficients c;
    c.diffusion = {coefficient_family("one_plus_x"),
                   coefficient_family("one_plus_x")};
    c.coupling.resize(2, 2);
    c.coupling << 1.0, -1.0, -1.0, 1.0;
    return assemble_weak(Grid::line(nx), c);
}

Field paper_initial(const Grid& g, int i, int j) {
    return Field::from_function(g, 2, [i, j](int k, double x, double) {
        return std::sin((k == 0 ? i : j) * kPi * x);
    });
}
} // namespace

TEST_SUITE("l1fdm") {

TEST_CASE("weights: b0 = 1, strictly decreasing toward zero") {
    for (double alpha : {0.2, 0.5, 0.8}) {
        const L1Weights w = L1Weights::make(alpha, 200);
        CHECK(w.b(0) == 1.0);
        for (int j = 1; j <= 200; ++j) {
            CHECK(w.b(j) < w.b(j - 1));
            CHECK(w.b(j) > 0.0);
        }
    }
    CHECK_THROWS_AS(L1Weights::make(1.0, 10), domain_error);
}

TEST_CASE("telescoping weights reproduce (n)^{1-alpha}") {
    const L1Weights w = L1Weights::make(0.3, 50);
    double sum = 0.0;
    for (int j = 0; j < 50; ++j) sum += w.b(j);
    CHECK(sum == doctest::Approx(std::pow(50.0, 0.7)).epsilon(1e-12));
}

TEST_CASE("zero initial value and zero source give the zero trajectory") {
    const CoupledOperator op = paper_1d_operator(20);
    const Field zero(op.grid, 2);
    const ForwardResult r =
        solve_forward(op, 0.5, zero, nullptr, TimeGrid(1.0, 16), true);
    CHECK(r.final_state.flat().cwiseAbs().maxCoeff() == 0.0);
    for (const Field& s : r.trajectory) {
        CHECK(s.flat().cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("single-mode decay matches the discrete eigenvalue profile") {
    // K = 1, a = 1: sin(pi x) is an exact discrete eigenvector
    WeakCoefficients c;
    c.diffusion = {coefficient_family("constant", {1.0})};
    c.coupling = Eigen::MatrixXd::Zero(1, 1);
    const int nx = 150;
    const CoupledOperator op = assemble_weak(Grid::line(nx), c);
    const Field u0 = Field::from_function(
        op.grid, 1, [](int, double x, double) { return std::sin(kPi * x); });

    const double alpha = 0.5;
    const Field uT =
        solve_forward(op, alpha, u0, nullptr, TimeGrid(1.0, 2048)).final_state;

    const double h = 1.0 / (nx + 1);
    const double lambda1 = 4.0 / (h * h) * std::pow(std::sin(kPi * h / 2.0), 2);
    const double factor = mlf::ml_eval({alpha, 1.0}, lambda1);
    CHECK((uT.flat() - factor * u0.flat()).norm() <=
          5e-3 * factor * u0.flat().norm());
}

TEST_CASE("paper 1D system: L1 agrees with the spectral propagator") {
    const CoupledOperator op = paper_1d_operator(150);
    const double alpha = 0.2;
    const Field u0 = paper_initial(op.grid, 5, 3);

    const Field fdm =
        solve_forward(op, alpha, u0, nullptr, TimeGrid(1.0, 2048)).final_state;
    const EigenSystem es = eigendecompose(op);
    const Field spectral = propagate_homogeneous(es, alpha, u0, {1.0}).front();

    CHECK((fdm.flat() - spectral.flat()).norm() <= 1e-2 * spectral.flat().norm());
}

TEST_CASE("norm non-expansion for the homogeneous problem") {
    const CoupledOperator op = paper_1d_operator(40);
    const Field u0 = paper_initial(op.grid, 2, 4);
    for (double alpha : {0.2, 0.5, 0.8}) {
        const Field uT =
            solve_forward(op, alpha, u0, nullptr, TimeGrid(1.0, 64)).final_state;
        CHECK(uT.norm() <= u0.norm() * (1.0 + 1e-12));
    }
}

TEST_CASE("batched solves match individual solves") {
    const CoupledOperator op = paper_1d_operator(30);
    std::vector<Field> inits = {paper_initial(op.grid, 1, 2),
                                paper_initial(op.grid, 3, 1),
                                paper_initial(op.grid, 2, 5)};
    const auto multi = solve_forward_multi(op, 0.4, inits, TimeGrid(1.0, 64));
    for (std::size_t s = 0; s < inits.size(); ++s) {
        const Field single =
            solve_forward(op, 0.4, inits[s], nullptr, TimeGrid(1.0, 64))
                .final_state;
        CHECK((multi[s].flat() - single.flat()).cwiseAbs().maxCoeff() <
              1e-12 * single.flat().cwiseAbs().maxCoeff());
    }
}

TEST_CASE("temporal order at T is first order for initial-value runs") {
    // The uniform-mesh L1 scheme is O(tau) at fixed positive time for the
    // homogeneous problem; the classical 2-alpha rate needs solution
    // smoothness this data class does not have.
    WeakCoefficients c;
    c.diffusion = {coefficient_family("constant", {1.0})};
    c.coupling = Eigen::MatrixXd::Zero(1, 1);
    const CoupledOperator op = assemble_weak(Grid::line(40), c);
    const Field u0 = Field::from_function(
        op.grid, 1, [](int, double x, double) { return std::sin(kPi * x); });
    for (double alpha : {0.2, 0.5}) {
        const double order =
            convergence_order(op, alpha, u0, 1.0, {64, 128, 256, 512});
        CAPTURE(alpha);
        CHECK(order == doctest::Approx(1.0).epsilon(0.12));
    }
}

TEST_CASE("boundary-incompatible initial value is rejected") {
    const CoupledOperator op = paper_1d_operator(40);
    const Field ones = Field::from_function(
        op.grid, 2, [](int, double, double) { return 1.0; });
    CHECK_THROWS_AS(convergence_order(op, 0.5, ones, 1.0, {16, 32, 64}),
                    domain_error);
}

TEST_CASE("convergence_order argument validation") {
    const CoupledOperator op = paper_1d_operator(20);
    const Field u0 = paper_initial(op.grid, 1, 1);
    CHECK_THROWS_AS(convergence_order(op, 0.5, u0, 1.0, {16, 32}), domain_error);
    CHECK_THROWS_AS(convergence_order(op, 0.5, u0, 1.0, {32, 16, 64}),
                    domain_error);
}

TEST_CASE("alpha outside (0,1) is rejected") {
    const CoupledOperator op = paper_1d_operator(20);
    const Field u0 = paper_initial(op.grid, 1, 1);
    CHECK_THROWS_AS(solve_forward(op, 1.0, u0, nullptr, TimeGrid(1.0, 8)),
                    domain_error);
    CHECK_THROWS_AS(solve_forward(op, 0.0, u0, nullptr, TimeGrid(1.0, 8)),
                    domain_error);
}

TEST_CASE("time grid validation") {
    CHECK_THROWS_AS(TimeGrid(0.0, 8), domain_error);
    CHECK_THROWS_AS(TimeGrid(1.0, 0), domain_error);
}

} // TEST_SUITE
