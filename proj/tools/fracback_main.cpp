#include "fracback/experiment.hpp"
#include "fracback/io.hpp"
#include "fracback/l1fdm.hpp"
#include "fracback/mlf.hpp"
#include "fracback/threads.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <filesystem>
#include <iostream>

#if defined(FRACBACK_HAVE_LAPACKE)
extern "C" void openblas_set_num_threads(int);
#endif

namespace {

using namespace fracback;

ExperimentConfig load_experiment(const std::string& config_path, int seed_override) {
    ExperimentConfig config =
        ExperimentConfig::from_config(Config::parse_file(config_path));
    if (seed_override >= 0) {
        const auto base = static_cast<std::uint64_t>(seed_override);
        config.dataset_seed = base;
        config.network.seed = base + 1;
        config.shuffle_seed = base + 2;
        config.noise_seed = base + 3;
    }
    return config;
}

Field load_initial_value(const ExperimentConfig& config, const Grid& grid,
                         const std::string& case_name, const std::string& csv) {
    if (!case_name.empty()) return config.make_case(case_name, grid);
    if (!csv.empty()) return io::read_field_csv(csv, grid, config.components);
    throw domain_error("provide --case or an input CSV");
}

} // namespace

int main(int argc, char** argv) {
    Eigen::setNbThreads(max_threads());
#if defined(FRACBACK_HAVE_LAPACKE)
    openblas_set_num_threads(max_threads());
#endif

    CLI::App app{"fracback: forward and backward solvers for coupled "
                 "time-fractional diffusion systems"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path = "out";
    int seed_override = -1;

    // mlf
    auto* mlf_cmd = app.add_subcommand("mlf", "evaluate E_{alpha,beta}(-x)");
    double mlf_alpha = 0.5, mlf_beta = 1.0, mlf_x = 1.0;
    mlf_cmd->add_option("--alpha", mlf_alpha)->required();
    mlf_cmd->add_option("--beta", mlf_beta);
    mlf_cmd->add_option("--x", mlf_x)->required();

    // eigen
    auto* eigen_cmd = app.add_subcommand("eigen", "eigendecomposition of the operator");
    std::string vectors_path;
    eigen_cmd->add_option("--config", config_path)->required();
    eigen_cmd->add_option("--out", out_path, "eigenvalue CSV path");
    eigen_cmd->add_option("--vectors", vectors_path, "eigenvector array file");

    // forward
    auto* forward_cmd = app.add_subcommand("forward", "L1 forward solve to t = T");
    std::string case_name, input_csv, trajectory_path;
    forward_cmd->add_option("--config", config_path)->required();
    forward_cmd->add_option("--case", case_name, "named initial value");
    forward_cmd->add_option("--u0", input_csv, "initial value CSV");
    forward_cmd->add_option("--out", out_path, "final state CSV");
    forward_cmd->add_option("--trajectory", trajectory_path, "trajectory array file");

    // backward
    auto* backward_cmd = app.add_subcommand("backward", "reconstruct the initial value");
    std::string method = "tikhonov", obs_csv, truth_csv;
    double epsilon = -1.0, noise_estimate = -1.0;
    int cutoff = 0;
    backward_cmd->add_option("--config", config_path)->required();
    backward_cmd->add_option("--method", method, "spectral|truncated|tikhonov");
    backward_cmd->add_option("--obs", obs_csv, "observation CSV")->required();
    backward_cmd->add_option("--out", out_path, "reconstruction CSV");
    backward_cmd->add_option("--epsilon", epsilon, "fixed regularization parameter");
    backward_cmd->add_option("--cutoff", cutoff, "spectral truncation index");
    backward_cmd->add_option("--noise-estimate", noise_estimate,
                             "discrepancy-mode noise estimate");
    backward_cmd->add_option("--truth", truth_csv, "true initial value CSV");

    // dataset / training / evaluation pipelines
    auto* gen_cmd = app.add_subcommand("gen-dataset", "generate the training set");
    gen_cmd->add_option("--config", config_path)->required();
    gen_cmd->add_option("--out", out_path, "dataset directory");
    gen_cmd->add_option("--seed", seed_override);

    auto* train_cmd = app.add_subcommand("train", "train the inversion network");
    std::string dataset_dir;
    train_cmd->add_option("--config", config_path)->required();
    train_cmd->add_option("--dataset", dataset_dir, "pre-generated dataset directory");
    train_cmd->add_option("--out", out_path, "output directory");
    train_cmd->add_option("--seed", seed_override);

    auto* rec_cmd = app.add_subcommand("reconstruct", "apply a trained network");
    std::string model_path;
    rec_cmd->add_option("--config", config_path)->required();
    rec_cmd->add_option("--model", model_path)->required();
    rec_cmd->add_option("--obs", obs_csv, "observation CSV")->required();
    rec_cmd->add_option("--out", out_path, "reconstruction CSV");

    auto* eval_cmd = app.add_subcommand("evaluate", "classical + neural evaluation matrix");
    eval_cmd->add_option("--config", config_path)->required();
    eval_cmd->add_option("--model", model_path)->required();
    eval_cmd->add_option("--out", out_path, "output directory");
    eval_cmd->add_option("--seed", seed_override);

    auto* run_cmd = app.add_subcommand("run-experiment", "full pipeline");
    run_cmd->add_option("--config", config_path)->required();
    run_cmd->add_option("--out", out_path, "output directory");
    run_cmd->add_option("--seed", seed_override);

    CLI11_PARSE(app, argc, argv);

    try {
        if (mlf_cmd->parsed()) {
            const mlf::MlfParams params{mlf_alpha, mlf_beta};
            std::cout << io::format_double(mlf::ml_eval(params, mlf_x)) << "\n";
            return 0;
        }

        const ExperimentConfig config = load_experiment(config_path, seed_override);

        if (eigen_cmd->parsed()) {
            const EigenSystem es = eigendecompose(config.make_operator());
            std::vector<std::vector<std::string>> rows;
            for (int n = 0; n < es.count(); ++n) {
                rows.push_back({std::to_string(n + 1),
                                io::format_double(es.eigenvalues(n))});
            }
            io::write_csv(out_path, {"n", "lambda"}, rows);
            if (!vectors_path.empty()) {
                io::ArrayBlock block;
                block.name = "eigenvectors";
                block.shape = {es.count(), es.count()};
                block.data.resize(static_cast<std::size_t>(es.count()) * es.count());
                // row n holds mode n, row-major
                for (int n = 0; n < es.count(); ++n)
                    for (int i = 0; i < es.count(); ++i)
                        block.data[static_cast<std::size_t>(n) * es.count() + i] =
                            es.eigenvectors(i, n);
                io::write_array_file(vectors_path, es.grid(), {block});
            }
            std::cout << "wrote " << es.count() << " eigenvalues to " << out_path
                      << "\n";
            return 0;
        }

        if (forward_cmd->parsed()) {
            const CoupledOperator op = config.make_operator();
            const Field u0 = load_initial_value(config, op.grid, case_name, input_csv);
            const bool keep = !trajectory_path.empty();
            const ForwardResult result =
                solve_forward(op, config.alpha, u0, nullptr,
                              TimeGrid(config.T, config.time_steps), keep);
            io::write_field_csv(out_path, result.final_state);
            if (keep) {
                std::vector<io::ArrayBlock> blocks;
                for (std::size_t n = 0; n < result.trajectory.size(); ++n) {
                    blocks.push_back(io::field_to_block(
                        result.trajectory[n], "step_" + std::to_string(n + 1)));
                }
                io::write_array_file(trajectory_path, op.grid, blocks);
            }
            std::cout << "wrote final state to " << out_path << "\n";
            return 0;
        }

        if (backward_cmd->parsed()) {
            auto op = std::make_shared<const CoupledOperator>(config.make_operator());
            const Field obs = io::read_field_csv(obs_csv, op->grid, config.components);
            const EigenSystem es = eigendecompose(op);
            Field rec(op->grid, config.components);
            std::string report;
            if (method == "spectral" || method == "truncated") {
                std::optional<int> used;
                if (method == "truncated") {
                    used = cutoff > 0 ? cutoff : config.cutoff;
                }
                rec = backward_spectral(es, config.alpha, config.T, obs, used);
                report = "method " + method +
                         (used ? " cutoff " + std::to_string(*used) : "");
            } else if (method == "tikhonov") {
                const ForwardMap fm = build_forward_map(es, config.alpha, config.T);
                RegularizationChoice reg = config.regularization;
                if (epsilon > 0.0) {
                    reg.method = RegularizationChoice::Method::fixed_epsilon;
                    reg.epsilon = epsilon;
                }
                if (noise_estimate >= 0.0) {
                    reg.method = RegularizationChoice::Method::discrepancy;
                    reg.noise_estimate = noise_estimate;
                }
                const TikhonovResult result = backward_tikhonov(fm, obs, reg);
                rec = result.reconstruction;
                report = "epsilon " + io::format_double(result.epsilon) +
                         " residual " + io::format_double(result.residual);
            } else {
                throw domain_error("unknown backward method '" + method + "'");
            }
            io::write_field_csv(out_path, rec);
            if (!truth_csv.empty()) {
                const Field truth =
                    io::read_field_csv(truth_csv, op->grid, config.components);
                report += " rmse " + io::format_double(relative_rmse(rec, truth));
            }
            std::cout << report << "\n";
            return 0;
        }

        if (gen_cmd->parsed()) {
            const CoupledOperator op = config.make_operator();
            const Dataset dataset =
                gen_dataset(op, config.alpha, config.T, config.time_steps,
                            config.recipe, config.dataset_seed);
            save_dataset(out_path, dataset);
            std::cout << "wrote " << dataset.samples.size() << " samples to "
                      << out_path << "\n";
            return 0;
        }

        if (train_cmd->parsed()) {
            Dataset dataset;
            if (!dataset_dir.empty()) {
                dataset = load_dataset(dataset_dir);
            } else {
                dataset = gen_dataset(config.make_operator(), config.alpha, config.T,
                                      config.time_steps, config.recipe,
                                      config.dataset_seed);
            }
            const int batch = config.batch_size > 0
                                  ? config.batch_size
                                  : static_cast<int>(dataset.samples.size());
            const TrainResult result = train(config.network, dataset.samples,
                                             config.epochs, batch,
                                             config.shuffle_seed);
            std::filesystem::create_directories(out_path);
            save_checkpoint(out_path + "/model.ckpt", config.network, result.params,
                            config.epochs);
            std::vector<std::vector<std::string>> rows;
            for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
                rows.push_back({std::to_string(e + 1),
                                io::format_double(result.loss_history[e])});
            }
            io::write_csv(out_path + "/loss_history.csv", {"epoch", "loss"}, rows);
            std::cout << "final loss " << result.loss_history.back() << ", model in "
                      << out_path << "\n";
            return 0;
        }

        if (rec_cmd->parsed()) {
            const Checkpoint ckpt = load_checkpoint(model_path);
            const Grid grid = config.make_grid();
            const Field obs = io::read_field_csv(obs_csv, grid, config.components);
            const Field rec = reconstruct(ckpt.config, ckpt.params, obs);
            io::write_field_csv(out_path, rec);
            std::cout << "wrote reconstruction to " << out_path << "\n";
            return 0;
        }

        if (eval_cmd->parsed()) {
            const Checkpoint ckpt = load_checkpoint(model_path);
            auto op = std::make_shared<const CoupledOperator>(config.make_operator());
            const EigenSystem es = eigendecompose(op);
            const ForwardMap fm = build_forward_map(es, config.alpha, config.T);
            const EvaluationSummary summary =
                evaluate(config, *op, es, fm, ckpt.params, out_path);
            write_summary_csv(out_path + "/summary.csv", config, summary);
            std::cout << "wrote " << summary.cells.size() << " cells to " << out_path
                      << "/summary.csv\n";
            return 0;
        }

        if (run_cmd->parsed()) {
            run_experiment(config, out_path);
            std::cout << "experiment complete; outputs in " << out_path << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
