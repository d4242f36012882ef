#include "fracback/experiment.hpp"

#include "fracback/errors.hpp"
#include "fracback/io.hpp"
#include "fracback/l1fdm.hpp"
#include "fracback/threads.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fracback {
namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    // splitmix-style mixing of the cell coordinates into the base seed
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (a + 1) + 0xbf58476d1ce4e5b9ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace

ScalarCoefficient parse_coefficient(const std::string& spec, const Grid& grid) {
    std::istringstream is(spec);
    std::string head;
    is >> head;
    if (head == "constant") {
        double v = 1.0;
        is >> v;
        return coefficient_family("constant", {v});
    }
    if (head.rfind("csv:", 0) == 0) {
        const std::string path = head.substr(4);
        const io::CsvTable table = io::read_csv(path);
        const int col = table.column("a");
        std::vector<double> values;
        values.reserve(table.rows.size());
        for (const auto& row : table.rows) values.push_back(std::stod(row[col]));
        return tabulated_coefficient(grid, std::move(values));
    }
    return coefficient_family(head);
}

ExperimentConfig ExperimentConfig::from_config(const Config& c) {
    ExperimentConfig e;
    e.kind = c.get_string("system", "kind", "weak");
    e.components = c.get_int("system", "components", 2);
    e.dim = c.get_int("system", "dim", 1);
    for (int k = 0; k < e.components; ++k) {
        e.diffusion.push_back(c.get_string(
            "system", "diffusion_" + std::to_string(k + 1), "constant 1"));
    }
    const std::vector<double> coupling =
        c.has("system", "coupling") ? c.get_doubles("system", "coupling")
                                    : std::vector<double>();
    e.coupling = Eigen::MatrixXd::Zero(e.components, e.components);
    if (!coupling.empty()) {
        if (static_cast<int>(coupling.size()) != e.components * e.components) {
            throw io_error("config: coupling needs K*K entries");
        }
        for (int i = 0; i < e.components; ++i)
            for (int j = 0; j < e.components; ++j)
                e.coupling(i, j) = coupling[i * e.components + j];
    }

    e.nx = c.get_int("discretization", "nx", 150);
    e.ny = c.get_int("discretization", "ny", e.dim == 2 ? e.nx : 0);
    e.alpha = c.get_double("discretization", "alpha", 0.2);
    e.T = c.get_double("discretization", "T", 1.0);
    e.time_steps = c.get_int("discretization", "time_steps", 2048);

    e.recipe = c.get_string("dataset", "recipe", e.dim == 2 ? "sines_2d" : "sines_1d");
    e.dataset_seed = static_cast<std::uint64_t>(c.get_int("dataset", "seed", 1));

    if (c.has("noise", "levels")) {
        e.noise_levels = c.get_doubles("noise", "levels");
    }
    for (double d : e.noise_levels) {
        if (!(d >= 0.0 && d < 1.0)) {
            throw io_error("config: noise levels must lie in [0, 1)");
        }
    }
    const std::string scaling = c.get_string("noise", "scaling", "relative");
    if (scaling == "relative") {
        e.noise_scaling = NoiseScaling::relative;
    } else if (scaling == "absolute") {
        e.noise_scaling = NoiseScaling::absolute;
    } else {
        throw io_error("config: noise scaling must be relative or absolute");
    }
    e.noise_repetitions = c.get_int("noise", "repetitions", 1);
    e.noise_seed = static_cast<std::uint64_t>(c.get_int("noise", "seed", 1234));

    e.epochs = c.get_int("network", "epochs", e.dim == 2 ? 1500 : 3000);
    e.batch_size = c.get_int("network", "batch_size", e.dim == 2 ? 32 : 0);
    e.network.channels = e.components;
    e.network.nx = e.nx;
    e.network.ny = e.dim == 2 ? e.ny : 0;
    e.network.conv1_kernel = c.get_int("network", "conv1_kernel", 3);
    e.network.conv2_kernel = c.get_int("network", "conv2_kernel", 3);
    e.network.fc_hidden = c.get_int("network", "fc_hidden", 0);
    e.network.seed = static_cast<std::uint64_t>(c.get_int("network", "seed", 7));
    e.shuffle_seed = static_cast<std::uint64_t>(c.get_int("network", "shuffle_seed", 2));

    e.cutoff = c.get_int("inversion", "cutoff", 30);
    const std::string method = c.get_string("inversion", "method", "discrepancy");
    if (method == "fixed") {
        e.regularization.method = RegularizationChoice::Method::fixed_epsilon;
    } else if (method == "discrepancy") {
        e.regularization.method = RegularizationChoice::Method::discrepancy;
    } else {
        throw io_error("config: inversion method must be fixed or discrepancy");
    }
    e.regularization.epsilon = c.get_double("inversion", "epsilon", 1e-8);
    e.regularization.discrepancy_factor =
        c.get_double("inversion", "discrepancy_factor", 1.1);

    if (c.has("evaluate", "cases")) {
        e.cases = c.get_strings("evaluate", "cases");
    } else {
        e.cases = e.dim == 2 ? std::vector<std::string>{"train:5,4,1,3", "gen:poly2d"}
                             : std::vector<std::string>{"train:5,3", "train:3,4",
                                                        "gen:parabola"};
    }
    return e;
}

Grid ExperimentConfig::make_grid() const {
    return dim == 2 ? Grid::square(nx, ny) : Grid::line(nx);
}

CoupledOperator ExperimentConfig::make_operator() const {
    const Grid grid = make_grid();
    if (kind == "weak") {
        WeakCoefficients coeffs;
        for (const std::string& spec : diffusion) {
            coeffs.diffusion.push_back(parse_coefficient(spec, grid));
        }
        coeffs.coupling = coupling;
        return assemble_weak(grid, coeffs);
    }
    if (kind == "strong") {
        if (diffusion.empty()) throw io_error("config: strong system needs a tensor");
        std::istringstream is(diffusion[0]);
        std::string head;
        double mu = 1.0, lambda = 1.0;
        is >> head >> mu >> lambda;
        if (head != "isotropic_lame") {
            throw io_error("config: strong tensor family must be isotropic_lame");
        }
        StrongCoefficients coeffs{isotropic_lame_tensor(mu, lambda), coupling};
        return assemble_strong(grid, coeffs);
    }
    throw io_error("config: system kind must be weak or strong");
}

Field ExperimentConfig::make_case(const std::string& name, const Grid& grid) const {
    if (name.rfind("train:", 0) == 0) {
        std::vector<int> idx;
        std::istringstream is(name.substr(6));
        std::string part;
        while (std::getline(is, part, ',')) idx.push_back(std::stoi(part));
        if (grid.dim() == 1) {
            if (idx.size() != 2) throw domain_error("case '" + name + "': need i,j");
            return Field::from_function(grid, 2, [&](int k, double x, double) {
                return std::sin(idx[k] * kPi * x);
            });
        }
        if (idx.size() != 4) throw domain_error("case '" + name + "': need i,j,k,l");
        return Field::from_function(grid, 2, [&](int c, double x, double y) {
            return c == 0 ? std::sin(idx[0] * kPi * x) * std::sin(idx[1] * kPi * y)
                          : std::sin(idx[2] * kPi * x) * std::sin(idx[3] * kPi * y);
        });
    }
    if (name == "gen:parabola") {
        if (grid.dim() != 1) throw domain_error("case gen:parabola is 1D");
        return Field::from_function(
            grid, 2, [](int, double x, double) { return x * (1.0 - x); });
    }
    if (name == "gen:poly2d") {
        if (grid.dim() != 2) throw domain_error("case gen:poly2d is 2D");
        return Field::from_function(grid, 2, [](int c, double x, double y) {
            if (c == 0) return std::sin(3.0 * kPi * x) * std::sin(3.0 * kPi * y);
            const double px = x * (1.0 - x);
            const double py = y * (1.0 - y);
            return 256.0 * px * px * py * py;
        });
    }
    throw domain_error("unknown evaluation case '" + name + "'");
}

bool ExperimentConfig::case_in_training_family(const std::string& name) const {
    return name.rfind("train:", 0) == 0;
}

std::optional<double> EvaluationSummary::average(const std::string& method,
                                                 double noise) const {
    double sum = 0.0;
    int count = 0;
    for (const auto& cell : cells) {
        if (cell.method == method && cell.noise_level == noise && cell.error.empty()) {
            sum += cell.rmse;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

EvaluationSummary evaluate(const ExperimentConfig& config,
                           const CoupledOperator& op, const EigenSystem& es,
                           const ForwardMap& fm, const NetworkParams& net,
                           const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    EvaluationSummary summary;

    std::vector<double> levels{0.0};
    levels.insert(levels.end(), config.noise_levels.begin(),
                  config.noise_levels.end());

    const std::vector<std::string> methods{"truncated", "tikhonov", "neural"};
    for (std::size_t case_idx = 0; case_idx < config.cases.size(); ++case_idx) {
        const std::string& case_name = config.cases[case_idx];
        const Field u0_true = config.make_case(case_name, op.grid);
        const Field uT = solve_forward(op, config.alpha, u0_true, nullptr,
                                       TimeGrid(config.T, config.time_steps))
                             .final_state;
        for (double delta : levels) {
            const int reps = delta == 0.0 ? 1 : config.noise_repetitions;
            for (int rep = 0; rep < reps; ++rep) {
                const Field observed =
                    add_noise(uT, delta, mix_seed(config.noise_seed, case_idx, rep),
                              config.noise_scaling);
                const double noise_norm = std::sqrt(op.grid.weight()) *
                                          (observed.flat() - uT.flat()).norm();
                for (const std::string& method : methods) {
                    EvaluationCell cell{case_name, delta, rep, method,
                                        std::numeric_limits<double>::quiet_NaN(), ""};
                    try {
                        Field rec(op.grid, op.components);
                        if (method == "truncated") {
                            rec = backward_spectral(es, config.alpha, config.T,
                                                    observed, config.cutoff);
                        } else if (method == "tikhonov") {
                            RegularizationChoice reg = config.regularization;
                            if (reg.method ==
                                RegularizationChoice::Method::discrepancy) {
                                reg.noise_estimate = noise_norm;
                                if (noise_norm == 0.0) {
                                    // clean data: fall back to a tiny fixed epsilon
                                    reg.method =
                                        RegularizationChoice::Method::fixed_epsilon;
                                    reg.epsilon = 1e-12;
                                }
                            }
                            rec = backward_tikhonov(fm, observed, reg).reconstruction;
                        } else {
                            rec = reconstruct(config.network, net, observed);
                        }
                        cell.rmse = relative_rmse(rec, u0_true);
                        if (rep == 0) {
                            std::ostringstream name;
                            name << "recon_case" << case_idx << "_noise"
                                 << static_cast<int>(std::lround(delta * 100)) << "_"
                                 << method << ".csv";
                            io::write_field_csv(out_dir + "/" + name.str(), rec);
                        }
                    } catch (const std::exception& e) {
                        cell.error = e.what();
                    }
                    summary.cells.push_back(std::move(cell));
                }
            }
        }
    }
    return summary;
}

void write_summary_csv(const std::string& path, const ExperimentConfig& config,
                       const EvaluationSummary& summary) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& cell : summary.cells) {
        rows.push_back({cell.method, io::format_double(cell.noise_level),
                        cell.case_name, std::to_string(cell.repetition),
                        cell.error.empty() ? io::format_double(cell.rmse) : "error",
                        cell.error});
    }
    std::vector<double> levels{0.0};
    levels.insert(levels.end(), config.noise_levels.begin(),
                  config.noise_levels.end());
    for (const std::string& method : {"truncated", "tikhonov", "neural"}) {
        for (double delta : levels) {
            const auto avg = summary.average(method, delta);
            rows.push_back({method, io::format_double(delta), "average", "",
                            avg ? io::format_double(*avg) : "error", ""});
        }
    }
    io::write_csv(path, {"method", "noise", "case", "repetition", "rmse", "detail"},
                  rows);
}

EvaluationSummary run_experiment(const ExperimentConfig& config,
                                 const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&t_start]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t_start)
            .count();
    };

    auto op = std::make_shared<const CoupledOperator>(config.make_operator());
    std::cerr << "[run] operator assembled (" << op->size() << " dof, "
              << elapsed() << "s)\n";

    Dataset dataset = gen_dataset(*op, config.alpha, config.T, config.time_steps,
                                  config.recipe, config.dataset_seed);
    save_dataset(out_dir + "/dataset", dataset);
    std::cerr << "[run] dataset generated (" << dataset.samples.size()
              << " samples, " << elapsed() << "s)\n";

    const int batch = config.batch_size > 0
                          ? config.batch_size
                          : static_cast<int>(dataset.samples.size());
    TrainResult trained = train(config.network, dataset.samples, config.epochs,
                                batch, config.shuffle_seed);
    save_checkpoint(out_dir + "/model.ckpt", config.network, trained.params,
                    config.epochs);
    {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t e = 0; e < trained.loss_history.size(); ++e) {
            rows.push_back({std::to_string(e + 1),
                            io::format_double(trained.loss_history[e])});
        }
        io::write_csv(out_dir + "/loss_history.csv", {"epoch", "loss"}, rows);
    }
    std::cerr << "[run] network trained (" << config.epochs << " epochs, "
              << elapsed() << "s)\n";

    const EigenSystem es = eigendecompose(op);
    std::cerr << "[run] eigensystem ready (" << elapsed() << "s)\n";
    const ForwardMap fm = build_forward_map(es, config.alpha, config.T);
    std::cerr << "[run] forward map ready (" << elapsed() << "s)\n";

    EvaluationSummary summary =
        evaluate(config, *op, es, fm, trained.params, out_dir);
    write_summary_csv(out_dir + "/summary.csv", config, summary);

    std::vector<std::pair<std::string, std::string>> manifest;
    manifest.emplace_back("format", "fracback-run 1");
    manifest.emplace_back("kind", config.kind);
    manifest.emplace_back("grid", op->grid.describe());
    manifest.emplace_back("alpha", io::format_double(config.alpha));
    manifest.emplace_back("T", io::format_double(config.T));
    manifest.emplace_back("time_steps", std::to_string(config.time_steps));
    manifest.emplace_back("recipe", config.recipe);
    manifest.emplace_back("dataset_seed", std::to_string(config.dataset_seed));
    manifest.emplace_back("network_seed", std::to_string(config.network.seed));
    manifest.emplace_back("shuffle_seed", std::to_string(config.shuffle_seed));
    manifest.emplace_back("noise_seed", std::to_string(config.noise_seed));
    manifest.emplace_back("epochs", std::to_string(config.epochs));
    manifest.emplace_back("batch_size", std::to_string(batch));
    manifest.emplace_back("fc_hidden", std::to_string(config.network.hidden()));
    manifest.emplace_back("cutoff", std::to_string(config.cutoff));
    manifest.emplace_back(
        "noise_scaling",
        config.noise_scaling == NoiseScaling::relative ? "relative" : "absolute");
    manifest.emplace_back("threads", std::to_string(max_threads()));
    manifest.emplace_back("runtime_seconds", io::format_double(elapsed()));
    io::write_manifest(out_dir + "/run_manifest.txt", manifest);
    std::cerr << "[run] done (" << elapsed() << "s)\n";
    return summary;
}

} // namespace fracback
