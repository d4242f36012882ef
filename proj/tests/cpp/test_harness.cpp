#include "fracback/experiment.hpp"

#include "fracback/errors.hpp"
#include "fracback/io.hpp"
#include "fracback/rng.hpp"

#include <cmath>
#include <doctest.h>
#include <filesystem>
#include <fstream>

using namespace fracback;

namespace {

std::string temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("fracback_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

const char* kMiniConfig = R"(
[system]
kind = weak
components = 2
dim = 1
diffusion_1 = one_plus_x
diffusion_2 = one_plus_x
coupling = 1 -1 -1 1

[discretization]
nx = 24
alpha = 0.2
T = 1.0
time_steps = 96

[dataset]
recipe = sines_1d
seed = 11

[noise]
levels = 0.05
repetitions = 1
seed = 99

[network]
epochs = 120
fc_hidden = 48
seed = 5
shuffle_seed = 6

[inversion]
cutoff = 12
method = fixed
epsilon = 1e-8

[evaluate]
cases = train:2,1 gen:parabola
)";

CoupledOperator mini_operator() {
    return ExperimentConfig::from_config(Config::parse_string(kMiniConfig))
        .make_operator();
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("config parsing: sections, lists, comments, errors") {
    const Config c = Config::parse_string(
        "[a]\nx = 1.5 # trailing comment\nnames = u v w\n\n[b]\nflag = true\n");
    CHECK(c.get_double("a", "x") == 1.5);
    CHECK(c.get_strings("a", "names").size() == 3);
    CHECK(c.get_bool("b", "flag", false));
    CHECK(c.get_int("b", "missing", 7) == 7);
    CHECK_THROWS_AS(c.get_string("a", "missing"), io_error);
    CHECK_THROWS_AS(Config::parse_string("[a\nx=1\n"), io_error);
    CHECK_THROWS_AS(Config::parse_string("[a]\njust a line\n"), io_error);
}

TEST_CASE("add_noise: delta = 0 is the identity, fixed seed is reproducible") {
    const Grid g = Grid::line(10);
    Rng rng(4);
    Field f(g, 2);
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 10; ++i) f.at(k, i) = rng.normal();

    const Field same = add_noise(f, 0.0, 123);
    CHECK((same.flat() - f.flat()).cwiseAbs().maxCoeff() == 0.0);

    const Field a = add_noise(f, 0.05, 123);
    const Field b = add_noise(f, 0.05, 123);
    CHECK((a.flat() - b.flat()).cwiseAbs().maxCoeff() == 0.0);
    const Field c = add_noise(f, 0.05, 124);
    CHECK((a.flat() - c.flat()).cwiseAbs().maxCoeff() > 0.0);

    CHECK_THROWS_AS(add_noise(f, -0.1, 1), domain_error);
}

TEST_CASE("add_noise: sample standard deviation matches the level") {
    const Grid g = Grid::square(100, 100); // 10^4 entries per component
    Field f(g, 1);
    f.values().setOnes();
    const Field noisy = add_noise(f, 0.1, 2024);
    const Eigen::VectorXd diff = noisy.flat() - f.flat();
    const double mean = diff.mean();
    const double sd = std::sqrt((diff.array() - mean).square().sum() /
                                (diff.size() - 1));
    CHECK(sd >= 0.097);
    CHECK(sd <= 0.103);
}

TEST_CASE("add_noise: absolute scaling ignores the field magnitude") {
    const Grid g = Grid::line(50);
    Field f(g, 1);
    f.values().setConstant(100.0);
    const Field rel = add_noise(f, 0.1, 7, NoiseScaling::relative);
    const Field abs = add_noise(f, 0.1, 7, NoiseScaling::absolute);
    const double rel_sd = (rel.flat() - f.flat()).norm();
    const double abs_sd = (abs.flat() - f.flat()).norm();
    CHECK(rel_sd > 50.0 * abs_sd); // s = 100 vs s = 1
}

TEST_CASE("relative_rmse: trivial values and zero-truth error") {
    const Grid g = Grid::line(10);
    Rng rng(8);
    Field truth(g, 2);
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 10; ++i) truth.at(k, i) = rng.normal();

    CHECK(relative_rmse(truth, truth) == 0.0);
    Field doubled = truth;
    doubled.values() *= 2.0;
    CHECK(relative_rmse(doubled, truth) == doctest::Approx(1.0).epsilon(1e-14));

    const Field zero(g, 2);
    CHECK_THROWS_AS(relative_rmse(truth, zero), domain_error);
}

TEST_CASE("1D recipe yields 25 deterministic samples") {
    const CoupledOperator op = mini_operator();
    const Dataset a = gen_dataset(op, 0.2, 1.0, 32, "sines_1d", 11);
    CHECK(a.samples.size() == 25);
    CHECK(a.manifest.at("solver") == "l1fdm");
    CHECK(a.manifest.at("count") == "25");

    const Dataset b = gen_dataset(op, 0.2, 1.0, 32, "sines_1d", 11);
    for (std::size_t s = 0; s < a.samples.size(); ++s) {
        CHECK((a.samples[s].input.flat() - b.samples[s].input.flat())
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
    CHECK_THROWS_AS(gen_dataset(op, 0.2, 1.0, 32, "unknown", 1), domain_error);
}

TEST_CASE("2D recipe yields 625 samples") {
    const auto inits = recipe_initial_values("sines_2d", Grid::square(6, 6));
    CHECK(inits.size() == 625);
    CHECK_THROWS_AS(recipe_initial_values("sines_2d", Grid::line(6)), domain_error);
}

TEST_CASE("dataset save/load round trip") {
    const std::string dir = temp_dir("dataset");
    const CoupledOperator op = mini_operator();
    const Dataset saved = gen_dataset(op, 0.2, 1.0, 16, "sines_1d", 3);
    save_dataset(dir, saved);
    const Dataset loaded = load_dataset(dir);
    REQUIRE(loaded.samples.size() == saved.samples.size());
    for (std::size_t s = 0; s < saved.samples.size(); ++s) {
        CHECK((loaded.samples[s].input.flat() - saved.samples[s].input.flat())
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        CHECK((loaded.samples[s].target.flat() - saved.samples[s].target.flat())
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
    CHECK(loaded.manifest.at("recipe") == "sines_1d");
    std::filesystem::remove_all(dir);
}

TEST_CASE("CSV round trip with quoting") {
    const std::string path = temp_dir("csv") + "/table.csv";
    io::write_csv(path, {"name", "value"},
                  {{"plain", "1.5"},
                   {"with,comma", "2.5"},
                   {"with\"quote", "3.5"},
                   {"multi\nline", "4.5"}});
    const io::CsvTable table = io::read_csv(path);
    REQUIRE(table.rows.size() == 4);
    CHECK(table.rows[1][0] == "with,comma");
    CHECK(table.rows[2][0] == "with\"quote");
    CHECK(table.rows[3][0] == "multi\nline");
    CHECK(table.column("value") == 1);
    CHECK_THROWS_AS(table.column("missing"), io_error);
}

TEST_CASE("field CSV round trip") {
    const std::string path = temp_dir("fieldcsv") + "/field.csv";
    const Grid g = Grid::line(12);
    Rng rng(5);
    Field f(g, 2);
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 12; ++i) f.at(k, i) = rng.normal();
    io::write_field_csv(path, f);
    const Field back = io::read_field_csv(path, g, 2);
    CHECK((back.flat() - f.flat()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("array file round trip (1D and 2D grids)") {
    const std::string dir = temp_dir("arrays");
    {
        const Grid g = Grid::line(9);
        Rng rng(6);
        Field f(g, 2);
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 9; ++i) f.at(k, i) = rng.normal();
        io::write_array_file(dir + "/a.bin", g, {io::field_to_block(f, "state")});
        const io::ArrayFile file = io::read_array_file(dir + "/a.bin");
        CHECK(file.grid == g);
        const Field back = io::block_to_field(file.grid, file.block("state"));
        CHECK((back.flat() - f.flat()).cwiseAbs().maxCoeff() == 0.0);
        CHECK_THROWS_AS(file.block("missing"), io_error);
    }
    {
        const Grid g = Grid::square(4, 5);
        Field f(g, 1);
        f.values().setRandom();
        io::write_array_file(dir + "/b.bin", g, {io::field_to_block(f, "state")});
        const io::ArrayFile file = io::read_array_file(dir + "/b.bin");
        CHECK(file.grid == g);
        const Field back = io::block_to_field(file.grid, file.block("state"));
        CHECK((back.flat() - f.flat()).cwiseAbs().maxCoeff() == 0.0);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest round trip") {
    const std::string path = temp_dir("manifest") + "/m.txt";
    io::write_manifest(path, {{"alpha", "0.2"}, {"grid", "line 150"}});
    const auto m = io::read_manifest(path);
    CHECK(m.at("alpha") == "0.2");
    CHECK(m.at("grid") == "line 150");
}

TEST_CASE("experiment config defaults and case construction") {
    const ExperimentConfig e =
        ExperimentConfig::from_config(Config::parse_string(kMiniConfig));
    CHECK(e.nx == 24);
    CHECK(e.noise_levels == std::vector<double>{0.05});
    CHECK(e.cases.size() == 2);

    const Grid g = e.make_grid();
    const Field train_case = e.make_case("train:2,1", g);
    CHECK(train_case.at(0, 0) ==
          doctest::Approx(std::sin(2.0 * 3.14159265358979 * g.x(0))));
    const Field gen_case = e.make_case("gen:parabola", g);
    CHECK(gen_case.at(0, 0) == doctest::Approx(g.x(0) * (1.0 - g.x(0))));
    CHECK(gen_case.at(1, 0) == gen_case.at(0, 0));
    CHECK_THROWS_AS(e.make_case("gen:unknown", g), domain_error);
    CHECK(e.case_in_training_family("train:2,1"));
    CHECK_FALSE(e.case_in_training_family("gen:parabola"));
}

TEST_CASE("invalid noise level is rejected at parse time") {
    std::string bad(kMiniConfig);
    bad.replace(bad.find("levels = 0.05"), 13, "levels = 1.50");
    CHECK_THROWS_AS(ExperimentConfig::from_config(Config::parse_string(bad)),
                    io_error);
}

TEST_CASE("mini end-to-end experiment produces a complete summary") {
    const std::string dir = temp_dir("experiment");
    const ExperimentConfig e =
        ExperimentConfig::from_config(Config::parse_string(kMiniConfig));
    const EvaluationSummary summary = run_experiment(e, dir);

    // every (method, noise, case) cell present: 3 methods x 2 levels x 2 cases
    CHECK(summary.cells.size() == 12);
    for (const auto& cell : summary.cells) {
        CAPTURE(cell.method);
        CAPTURE(cell.case_name);
        CAPTURE(cell.noise_level);
        CHECK(cell.error.empty());
        CHECK(std::isfinite(cell.rmse));
    }

    CHECK(std::filesystem::exists(dir + "/summary.csv"));
    CHECK(std::filesystem::exists(dir + "/model.ckpt"));
    CHECK(std::filesystem::exists(dir + "/run_manifest.txt"));
    CHECK(std::filesystem::exists(dir + "/dataset/manifest.txt"));
    CHECK(std::filesystem::exists(dir + "/loss_history.csv"));

    const io::CsvTable table = io::read_csv(dir + "/summary.csv");
    CHECK(table.rows.size() >= 12); // cells + average rows
    // training converged enough that exact inversion beats noise-free neural
    const auto truncated = summary.average("truncated", 0.0);
    const auto tikhonov = summary.average("tikhonov", 0.0);
    REQUIRE(truncated.has_value());
    REQUIRE(tikhonov.has_value());
    CHECK(*truncated < 0.05);

    std::filesystem::remove_all(dir);
}

TEST_CASE("empty noise list evaluates clean data only") {
    std::string clean(kMiniConfig);
    clean.replace(clean.find("levels = 0.05"), 13, "#levels");
    const ExperimentConfig e =
        ExperimentConfig::from_config(Config::parse_string(clean));
    CHECK(e.noise_levels.empty());
}

} // TEST_SUITE
