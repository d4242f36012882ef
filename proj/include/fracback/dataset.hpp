#pragma once

#include "fracback/network.hpp"
#include "fracback/operator.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fracback {

enum class NoiseScaling { relative, absolute };

/// u^delta = u + delta * s * xi with xi i.i.d. standard normal per entry and
/// s the max magnitude of the clean field (relative) or 1 (absolute).
/// delta = 0 returns the input unchanged.
Field add_noise(const Field& field, double delta, std::uint64_t seed,
                NoiseScaling scaling = NoiseScaling::relative);

/// ||estimate - truth||_2 / ||truth||_2 over all channels and grid points.
double relative_rmse(const Field& estimate, const Field& truth);

struct Dataset {
    std::vector<TrainingSample> samples;
    std::map<std::string, std::string> manifest;
};

/// Training-family initial values. 1D recipe "sines_1d": u0 = sin(i pi x),
/// v0 = sin(j pi x), i,j in 1..5 (25 samples). 2D recipe "sines_2d":
/// u0 = sin(i pi x) sin(j pi y), v0 = sin(k pi x) sin(l pi y) (625 samples).
std::vector<Field> recipe_initial_values(const std::string& recipe, const Grid& grid);

/// Generates the training set by running the L1 solver to T for every recipe
/// initial value; deterministic given its arguments.
Dataset gen_dataset(const CoupledOperator& op, double alpha, double T,
                    int time_steps, const std::string& recipe, std::uint64_t seed);

/// Dataset persistence: manifest.txt plus one binary array file per sample
/// pair (blocks "u0" and "uT").
void save_dataset(const std::string& dir, const Dataset& dataset);
Dataset load_dataset(const std::string& dir);

} // namespace fracback
