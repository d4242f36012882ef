#pragma once

#include "fracback/grid.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace fracback {

/// Multi-channel inversion network:
///   per-channel conv -> split -> FC(tanh) -> FC(sin) -> concat ->
///   cross-channel conv.
/// Same padding everywhere, so every layer keeps the grid shape. The two FC
/// stages act independently per channel; the final convolution is the only
/// cross-channel mixing stage.
struct NetworkConfig {
    int channels = 2;
    int nx = 0;
    int ny = 0; // 0 selects the 1D layout
    int conv1_kernel = 3;
    int conv2_kernel = 3;
    int fc_hidden = 0; // 0 selects min(256, 2 * flat_size())
    std::uint64_t seed = 1;

    bool is_2d() const { return ny > 0; }
    int flat_size() const { return is_2d() ? nx * ny : nx; }
    int hidden() const {
        return fc_hidden > 0 ? fc_hidden : std::min(256, 2 * flat_size());
    }
    void validate() const;
    bool matches(const Field& f) const;
};

struct NetworkParams {
    std::vector<Eigen::VectorXd> conv1_w; // per channel, kernel taps
    Eigen::VectorXd conv1_b;              // per channel
    std::vector<Eigen::MatrixXd> fc1_w;   // per channel, hidden x flat
    std::vector<Eigen::VectorXd> fc1_b;
    std::vector<Eigen::MatrixXd> fc2_w;   // per channel, flat x hidden
    std::vector<Eigen::VectorXd> fc2_b;
    std::vector<std::vector<Eigen::VectorXd>> conv2_w; // [out][in] kernels
    Eigen::VectorXd conv2_b;                           // per output channel

    static NetworkParams zeros(const NetworkConfig& config);
    /// Seeded symmetric fan-scaled uniform initialization; biases zero.
    static NetworkParams initialize(const NetworkConfig& config);

    bool all_finite() const;

    /// Visits every tensor as (name, data pointer, length), in the
    /// declaration order used by the checkpoint format.
    template <typename Fn>
    void for_each_tensor(Fn&& fn) {
        for (std::size_t c = 0; c < conv1_w.size(); ++c)
            fn("conv1_w[" + std::to_string(c) + "]", conv1_w[c].data(), conv1_w[c].size());
        fn("conv1_b", conv1_b.data(), conv1_b.size());
        for (std::size_t c = 0; c < fc1_w.size(); ++c)
            fn("fc1_w[" + std::to_string(c) + "]", fc1_w[c].data(), fc1_w[c].size());
        for (std::size_t c = 0; c < fc1_b.size(); ++c)
            fn("fc1_b[" + std::to_string(c) + "]", fc1_b[c].data(), fc1_b[c].size());
        for (std::size_t c = 0; c < fc2_w.size(); ++c)
            fn("fc2_w[" + std::to_string(c) + "]", fc2_w[c].data(), fc2_w[c].size());
        for (std::size_t c = 0; c < fc2_b.size(); ++c)
            fn("fc2_b[" + std::to_string(c) + "]", fc2_b[c].data(), fc2_b[c].size());
        for (std::size_t o = 0; o < conv2_w.size(); ++o)
            for (std::size_t i = 0; i < conv2_w[o].size(); ++i)
                fn("conv2_w[" + std::to_string(o) + "][" + std::to_string(i) + "]",
                   conv2_w[o][i].data(), conv2_w[o][i].size());
        fn("conv2_b", conv2_b.data(), conv2_b.size());
    }
};

struct TrainingSample {
    Field input;  // observation u_T
    Field target; // initial value u_0
};

/// Deterministic map (params, input) -> estimated initial value.
Field forward_pass(const NetworkConfig& config, const NetworkParams& params,
                   const Field& input);

/// Mean squared error over all K*M entries.
double loss_mse(const Field& prediction, const Field& target);

/// Reverse-mode gradients of loss_mse(forward_pass(input), target) with
/// respect to every parameter.
NetworkParams backprop(const NetworkConfig& config, const NetworkParams& params,
                       const TrainingSample& sample);

struct TrainResult {
    NetworkParams params;
    std::vector<double> loss_history; // per epoch
};

/// Nadam mini-batch training with a seeded shuffle each epoch. Deterministic
/// for a fixed (seed, config, dataset, thread setting); aborts when the loss
/// exceeds 1e6x the initial epoch loss or turns non-finite.
TrainResult train(const NetworkConfig& config,
                  const std::vector<TrainingSample>& dataset, int epochs,
                  int batch_size, std::uint64_t seed);

/// Inference wrapper around forward_pass.
Field reconstruct(const NetworkConfig& config, const NetworkParams& params,
                  const Field& observation);

/// Checkpoint: plain-text header (config, seed, epochs) followed by
/// little-endian float64 parameter blocks in declaration order.
void save_checkpoint(const std::string& path, const NetworkConfig& config,
                     const NetworkParams& params, int epochs);
struct Checkpoint {
    NetworkConfig config;
    NetworkParams params;
    int epochs = 0;
};
Checkpoint load_checkpoint(const std::string& path);

} // namespace fracback
