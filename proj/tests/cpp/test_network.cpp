#include "fracback/network.hpp"

#include "fracback/errors.hpp"
#include "fracback/rng.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <doctest.h>
#include <filesystem>

using namespace fracback;

namespace {

NetworkConfig toy_config_1d(int nx = 8, int channels = 2) {
    NetworkConfig cfg;
    cfg.channels = channels;
    cfg.nx = nx;
    cfg.fc_hidden = 6;
    cfg.seed = 42;
    return cfg;
}

Field random_field(const Grid& g, int components, std::uint64_t seed) {
    Rng rng(seed);
    Field f(g, components);
    for (int k = 0; k < components; ++k)
        for (int i = 0; i < g.interior_count(); ++i) f.at(k, i) = rng.normal();
    return f;
}

// Finite-difference check of d loss / d theta on selected coordinates.
void check_gradients(const NetworkConfig& cfg, std::uint64_t seed) {
    const Grid grid = cfg.is_2d() ? Grid::square(cfg.nx, cfg.ny) : Grid::line(cfg.nx);
    NetworkParams params = NetworkParams::initialize(cfg);
    const TrainingSample sample{random_field(grid, cfg.channels, seed),
                                random_field(grid, cfg.channels, seed + 1)};
    NetworkParams grads = backprop(cfg, params, sample);

    Rng pick(seed + 2);
    std::vector<std::pair<double*, double>> coords; // pointer, analytic gradient
    grads.for_each_tensor([&](const std::string&, double* gdata, Eigen::Index n) {
        // every layer contributes; sample up to 20 coordinates per tensor
        for (int trial = 0; trial < std::min<Eigen::Index>(20, n); ++trial) {
            const Eigen::Index idx =
                static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(n)));
            coords.emplace_back(gdata + idx, 0.0);
        }
    });
    // map gradient pointers to parameter pointers via the shared layout
    std::vector<std::pair<double*, double*>> mapping;
    {
        std::vector<double*> param_ptrs, grad_ptrs;
        std::vector<Eigen::Index> sizes;
        params.for_each_tensor([&](const std::string&, double* p, Eigen::Index n) {
            param_ptrs.push_back(p);
            sizes.push_back(n);
        });
        grads.for_each_tensor([&](const std::string&, double* g, Eigen::Index) {
            grad_ptrs.push_back(g);
        });
        for (auto& [gptr, unused] : coords) {
            (void)unused;
            for (std::size_t t = 0; t < grad_ptrs.size(); ++t) {
                if (gptr >= grad_ptrs[t] && gptr < grad_ptrs[t] + sizes[t]) {
                    mapping.emplace_back(param_ptrs[t] + (gptr - grad_ptrs[t]), gptr);
                    break;
                }
            }
        }
    }

    const double h = 1e-6;
    for (auto [wptr, gptr] : mapping) {
        const double saved = *wptr;
        *wptr = saved + h;
        const double up = loss_mse(forward_pass(cfg, params, sample.input),
                                   sample.target);
        *wptr = saved - h;
        const double down = loss_mse(forward_pass(cfg, params, sample.input),
                                     sample.target);
        *wptr = saved;
        const double fd = (up - down) / (2.0 * h);
        const double analytic = *gptr;
        const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-8});
        CHECK(std::abs(fd - analytic) / scale < 1e-4);
    }
}

} // namespace

TEST_SUITE("network") {

TEST_CASE("all-zero parameters map everything to zero") {
    const NetworkConfig cfg = toy_config_1d();
    const NetworkParams zeros = NetworkParams::zeros(cfg);
    const Field input = random_field(Grid::line(cfg.nx), cfg.channels, 3);
    const Field out = forward_pass(cfg, zeros, input);
    CHECK(out.flat().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("output shape equals input shape (paper 1D contract)") {
    NetworkConfig cfg;
    cfg.channels = 2;
    cfg.nx = 150;
    cfg.seed = 1;
    const NetworkParams params = NetworkParams::initialize(cfg);
    const Field input = random_field(Grid::line(150), 2, 9);
    const Field out = forward_pass(cfg, params, input);
    CHECK(out.components() == 2);
    CHECK(out.grid().nx() == 150);
}

TEST_CASE("delta kernels reduce the network to the per-channel FC composition") {
    NetworkConfig cfg = toy_config_1d(6, 2);
    NetworkParams p = NetworkParams::initialize(cfg);
    for (auto& w : p.conv1_w) {
        w.setZero();
        w(1) = 1.0; // identity tap
    }
    p.conv1_b.setZero();
    for (int o = 0; o < 2; ++o) {
        for (int c = 0; c < 2; ++c) {
            p.conv2_w[o][c].setZero();
            if (o == c) p.conv2_w[o][c](1) = 1.0;
        }
    }
    p.conv2_b.setZero();

    const Field input = random_field(Grid::line(6), 2, 17);
    const Field out = forward_pass(cfg, p, input);

    // independent dense-algebra evaluation of sin(W2 tanh(W1 x + b1) + b2)
    for (int c = 0; c < 2; ++c) {
        const Eigen::VectorXd x = input.values().col(c);
        const Eigen::VectorXd z1 = p.fc1_w[c] * x + p.fc1_b[c];
        const Eigen::VectorXd a1 = z1.array().tanh();
        const Eigen::VectorXd z2 = p.fc2_w[c] * a1 + p.fc2_b[c];
        const Eigen::VectorXd expected = z2.array().sin();
        CHECK((out.values().col(c) - expected).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("channel-diagonal final conv keeps channels independent") {
    NetworkConfig cfg = toy_config_1d(10, 2);
    NetworkParams p = NetworkParams::initialize(cfg);
    for (auto& w : p.conv1_w) {
        w.setZero();
        w(1) = 1.0;
    }
    for (int o = 0; o < 2; ++o)
        for (int c = 0; c < 2; ++c)
            if (o != c) p.conv2_w[o][c].setZero();

    const Field base = random_field(Grid::line(10), 2, 23);
    Field bumped = base;
    for (int i = 0; i < 10; ++i) bumped.at(1, i) += 0.5; // perturb channel 2 only

    const Field out_base = forward_pass(cfg, p, base);
    const Field out_bumped = forward_pass(cfg, p, bumped);
    // channel 1 output must not move
    CHECK((out_base.values().col(0) - out_bumped.values().col(0))
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((out_base.values().col(1) - out_bumped.values().col(1))
              .cwiseAbs()
              .maxCoeff() > 0.0);
}

TEST_CASE("loss_mse basics and naive-oracle agreement") {
    const Grid g = Grid::line(16);
    const Field a = random_field(g, 2, 5);
    CHECK(loss_mse(a, a) == 0.0);

    Field shifted = a;
    shifted.values().array() += 2.0;
    CHECK(loss_mse(shifted, a) == doctest::Approx(4.0).epsilon(1e-14));

    const Field b = random_field(g, 2, 6);
    const double naive = oracles::naive_mse(a.flat(), b.flat(), a.size());
    CHECK(loss_mse(a, b) == doctest::Approx(naive).epsilon(1e-13));

    const Field c = random_field(Grid::line(8), 2, 1);
    CHECK_THROWS_AS(loss_mse(a, c), shape_error);
}

TEST_CASE("zero-residual sample has all-zero gradients") {
    const NetworkConfig cfg = toy_config_1d();
    const NetworkParams params = NetworkParams::initialize(cfg);
    const Field input = random_field(Grid::line(cfg.nx), cfg.channels, 31);
    const Field pred = forward_pass(cfg, params, input);
    NetworkParams grads = backprop(cfg, params, {input, pred});
    grads.for_each_tensor([&](const std::string&, double* data, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) CHECK(std::abs(data[i]) < 1e-14);
    });
}

TEST_CASE("gradients match central finite differences (1D)") {
    check_gradients(toy_config_1d(8, 2), 100);
}

TEST_CASE("gradients match central finite differences (2D)") {
    NetworkConfig cfg;
    cfg.channels = 2;
    cfg.nx = 5;
    cfg.ny = 4;
    cfg.fc_hidden = 7;
    cfg.seed = 9;
    check_gradients(cfg, 200);
}

TEST_CASE("sinusoid layer gradient is cos of the pre-activation") {
    // single neuron: flat=1 via nx=1? minimum grid is 3, so isolate by zeroing
    NetworkConfig cfg = toy_config_1d(3, 1);
    cfg.fc_hidden = 1;
    NetworkParams p = NetworkParams::zeros(cfg);
    p.conv1_w[0](1) = 1.0;
    p.fc1_w[0].setZero();
    p.fc1_w[0](0, 0) = 1.0;
    p.fc2_w[0].setZero();
    p.fc2_w[0](0, 0) = 1.0;
    p.fc2_b[0](0) = 0.7; // pre-activation offset
    p.conv2_w[0][0](1) = 1.0; // delta kernel passes the sinusoid output through

    const Grid g = Grid::line(3);
    Field input(g, 1);
    input.at(0, 0) = 0.0;
    Field target(g, 1);

    // loss = (1/3) sin(b)^2 -> d loss / d b = (2/3) sin(b) cos(b)
    NetworkParams grads = backprop(cfg, p, {input, target});
    const double b = 0.7;
    CHECK(grads.fc2_b[0](0) ==
          doctest::Approx(2.0 / 3.0 * std::sin(b) * std::cos(b)).epsilon(1e-12));
}

TEST_CASE("training is deterministic for a fixed seed") {
    const NetworkConfig cfg = toy_config_1d(8, 2);
    const Grid g = Grid::line(8);
    std::vector<TrainingSample> data;
    for (int s = 0; s < 4; ++s) {
        data.push_back({random_field(g, 2, 50 + s), random_field(g, 2, 60 + s)});
    }
    const TrainResult a = train(cfg, data, 25, 2, 7);
    const TrainResult b = train(cfg, data, 25, 2, 7);
    REQUIRE(a.loss_history.size() == b.loss_history.size());
    for (std::size_t e = 0; e < a.loss_history.size(); ++e) {
        CHECK(a.loss_history[e] == b.loss_history[e]); // bitwise
    }
    const TrainResult c = train(cfg, data, 25, 2, 8);
    CHECK(a.loss_history.back() != c.loss_history.back());
}

TEST_CASE("single-sample overfit drives the loss below 1e-6 within 5000 epochs") {
    NetworkConfig cfg = toy_config_1d(16, 2);
    cfg.fc_hidden = 32;
    const Grid g = Grid::line(16);
    const Field input = Field::from_function(g, 2, [](int k, double x, double) {
        return 0.3 * std::sin((k + 1) * 3.14159265358979 * x);
    });
    const Field target = Field::from_function(g, 2, [](int k, double x, double) {
        return std::sin((k + 2) * 3.14159265358979 * x);
    });
    std::vector<TrainingSample> data{{input, target}};
    const TrainResult result = train(cfg, data, 5000, 1, 3);
    // constant-rate Nadam oscillates around the minimum; the overfit claim
    // is about reaching it within the budget
    const double best =
        *std::min_element(result.loss_history.begin(), result.loss_history.end());
    CHECK(best < 1e-6);
}

TEST_CASE("train argument validation") {
    const NetworkConfig cfg = toy_config_1d();
    const Grid g = Grid::line(cfg.nx);
    std::vector<TrainingSample> data{
        {random_field(g, 2, 1), random_field(g, 2, 2)}};
    CHECK_THROWS_AS(train(cfg, {}, 10, 1, 1), domain_error);
    CHECK_THROWS_AS(train(cfg, data, 0, 1, 1), domain_error);
    CHECK_THROWS_AS(train(cfg, data, 10, 0, 1), domain_error);
}

TEST_CASE("checkpoint round trip preserves parameters bitwise") {
    const NetworkConfig cfg = toy_config_1d(8, 2);
    NetworkParams params = NetworkParams::initialize(cfg);
    const std::string path =
        (std::filesystem::temp_directory_path() / "fracback_ckpt_test.bin").string();
    save_checkpoint(path, cfg, params, 123);
    const Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.epochs == 123);
    CHECK(loaded.config.nx == cfg.nx);
    CHECK(loaded.config.fc_hidden == cfg.fc_hidden);

    bool identical = true;
    std::vector<std::pair<double*, Eigen::Index>> orig;
    params.for_each_tensor([&](const std::string&, double* d, Eigen::Index n) {
        orig.emplace_back(d, n);
    });
    std::size_t t = 0;
    const_cast<NetworkParams&>(loaded.params)
        .for_each_tensor([&](const std::string&, double* d, Eigen::Index n) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (d[i] != orig[t].first[i]) identical = false;
            }
            ++t;
        });
    CHECK(identical);
    std::filesystem::remove(path);
}

TEST_CASE("untrained network is far worse than a trained one") {
    NetworkConfig cfg = toy_config_1d(12, 2);
    const Grid g = Grid::line(12);
    std::vector<TrainingSample> data;
    for (int s = 0; s < 3; ++s) {
        data.push_back({random_field(g, 2, 80 + s), random_field(g, 2, 90 + s)});
    }
    const TrainResult trained = train(cfg, data, 2000, 3, 5);
    const NetworkParams fresh = NetworkParams::initialize(cfg);
    const double trained_loss =
        loss_mse(forward_pass(cfg, trained.params, data[0].input), data[0].target);
    const double fresh_loss =
        loss_mse(forward_pass(cfg, fresh, data[0].input), data[0].target);
    CHECK(trained_loss < 0.1 * fresh_loss);
}

} // TEST_SUITE
