#pragma once

#include "fracback/config.hpp"
#include "fracback/dataset.hpp"
#include "fracback/inversion.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fracback {

/// Parsed experiment description: system, discretization, dataset recipe,
/// noise model, network hyperparameters, inversion settings, evaluation
/// cases, and outputs.
struct ExperimentConfig {
    // [system]
    std::string kind = "weak";
    int components = 2;
    int dim = 1;
    std::vector<std::string> diffusion; // family spec per component
    Eigen::MatrixXd coupling;

    // [discretization]
    int nx = 150;
    int ny = 0;
    double alpha = 0.2;
    double T = 1.0;
    int time_steps = 2048;

    // [dataset]
    std::string recipe = "sines_1d";
    std::uint64_t dataset_seed = 1;

    // [noise]
    std::vector<double> noise_levels; // excluding the clean level
    NoiseScaling noise_scaling = NoiseScaling::relative;
    int noise_repetitions = 1;
    std::uint64_t noise_seed = 1234;

    // [network]
    int epochs = 3000;
    int batch_size = 0; // 0 = full batch
    NetworkConfig network;
    std::uint64_t shuffle_seed = 2;

    // [inversion]
    int cutoff = 30;
    RegularizationChoice regularization;

    // [evaluate]
    std::vector<std::string> cases;

    static ExperimentConfig from_config(const Config& config);

    Grid make_grid() const;
    CoupledOperator make_operator() const;
    /// Named evaluation initial values: "train:i,j" / "train:i,j,k,l"
    /// (training-family sines) and built-in generalization cases
    /// "gen:parabola" (1D) and "gen:poly2d".
    Field make_case(const std::string& name, const Grid& grid) const;
    bool case_in_training_family(const std::string& name) const;
};

/// Builds the diffusion coefficient from a spec string:
/// a family name, "constant <v>", or "csv:<path>".
ScalarCoefficient parse_coefficient(const std::string& spec, const Grid& grid);

struct EvaluationCell {
    std::string case_name;
    double noise_level;
    int repetition;
    std::string method; // tikhonov | truncated | neural
    double rmse;        // NaN when the cell failed
    std::string error;  // failure message, empty on success
};

struct EvaluationSummary {
    std::vector<EvaluationCell> cells;

    /// Mean RMSE over cases and repetitions for one (method, noise) pair;
    /// empty when every contributing cell failed.
    std::optional<double> average(const std::string& method, double noise) const;
};

/// Full pipeline: dataset -> training -> eigensystem/forward map ->
/// evaluation matrix -> CSV reports and run manifest under out_dir.
/// A failing evaluation cell is recorded as an error row; remaining cells
/// still run.
EvaluationSummary run_experiment(const ExperimentConfig& config,
                                 const std::string& out_dir);

/// Evaluation matrix against an already trained network.
EvaluationSummary evaluate(const ExperimentConfig& config,
                           const CoupledOperator& op, const EigenSystem& es,
                           const ForwardMap& fm, const NetworkParams& net,
                           const std::string& out_dir);

void write_summary_csv(const std::string& path, const ExperimentConfig& config,
                       const EvaluationSummary& summary);

} // namespace fracback
