#include "fracback/network.hpp"

#include "fracback/errors.hpp"
#include "fracback/io.hpp"
#include "fracback/rng.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace fracback {
namespace {

void conv_same(const Eigen::Ref<const Eigen::VectorXd>& x,
               const Eigen::VectorXd& w, Eigen::Ref<Eigen::VectorXd> out,
               int nx, int ny, bool accumulate) {
    const int r = ny > 0 ? (static_cast<int>(std::sqrt(double(w.size()))) - 1) / 2
                         : (static_cast<int>(w.size()) - 1) / 2;
    if (!accumulate) out.setZero();
    if (ny == 0) {
        const int n = nx;
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            const int lo = std::max(-r, -i);
            const int hi = std::min(r, n - 1 - i);
            for (int u = lo; u <= hi; ++u) s += w(u + r) * x(i + u);
            out(i) += s;
        }
        return;
    }
    const int kk = 2 * r + 1;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            double s = 0.0;
            for (int uy = std::max(-r, -iy); uy <= std::min(r, ny - 1 - iy); ++uy) {
                const int row = (iy + uy) * nx;
                const int wrow = (uy + r) * kk;
                for (int ux = std::max(-r, -ix); ux <= std::min(r, nx - 1 - ix);
                     ++ux) {
                    s += w(wrow + ux + r) * x(row + ix + ux);
                }
            }
            out(iy * nx + ix) += s;
        }
    }
}

// Adjoint of conv_same with respect to the input: correlation with the
// flipped kernel.
void conv_same_adjoint_input(const Eigen::Ref<const Eigen::VectorXd>& dy,
                             const Eigen::VectorXd& w,
                             Eigen::Ref<Eigen::VectorXd> dx, int nx, int ny) {
    Eigen::VectorXd flipped = w.reverse();
    conv_same(dy, flipped, dx, nx, ny, true);
}

// Gradient of conv_same with respect to the kernel taps.
void conv_same_kernel_grad(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& dy,
                           Eigen::Ref<Eigen::VectorXd> dw, int nx, int ny) {
    const int r = ny > 0 ? (static_cast<int>(std::sqrt(double(dw.size()))) - 1) / 2
                         : (static_cast<int>(dw.size()) - 1) / 2;
    if (ny == 0) {
        const int n = nx;
        for (int u = -r; u <= r; ++u) {
            double s = 0.0;
            for (int i = std::max(0, -u); i < std::min(n, n - u); ++i) {
                s += x(i + u) * dy(i);
            }
            dw(u + r) += s;
        }
        return;
    }
    const int kk = 2 * r + 1;
    for (int uy = -r; uy <= r; ++uy) {
        for (int ux = -r; ux <= r; ++ux) {
            double s = 0.0;
            for (int iy = std::max(0, -uy); iy < std::min(ny, ny - uy); ++iy) {
                for (int ix = std::max(0, -ux); ix < std::min(nx, nx - ux); ++ix) {
                    s += x((iy + uy) * nx + ix + ux) * dy(iy * nx + ix);
                }
            }
            dw((uy + r) * kk + ux + r) += s;
        }
    }
}

struct BatchCache {
    // Per channel, columns are samples.
    std::vector<Eigen::MatrixXd> conv1_out;
    std::vector<Eigen::MatrixXd> fc1_act; // tanh(z1)
    std::vector<Eigen::MatrixXd> fc2_pre; // z2
    std::vector<Eigen::MatrixXd> fc2_act; // sin(z2)
    std::vector<Eigen::MatrixXd> output;  // per output channel
};

BatchCache forward_batch(const NetworkConfig& cfg, const NetworkParams& p,
                         const std::vector<Eigen::MatrixXd>& input) {
    const int K = cfg.channels;
    const int nx = cfg.nx;
    const int ny = cfg.is_2d() ? cfg.ny : 0;
    const auto batch = input[0].cols();

    BatchCache cache;
    cache.conv1_out.resize(K);
    cache.fc1_act.resize(K);
    cache.fc2_pre.resize(K);
    cache.fc2_act.resize(K);
    cache.output.resize(K);

    for (int c = 0; c < K; ++c) {
        cache.conv1_out[c].resize(cfg.flat_size(), batch);
        for (Eigen::Index s = 0; s < batch; ++s) {
            conv_same(input[c].col(s), p.conv1_w[c], cache.conv1_out[c].col(s), nx,
                      ny, false);
        }
        cache.conv1_out[c].array() += p.conv1_b(c);

        Eigen::MatrixXd z1 = p.fc1_w[c] * cache.conv1_out[c];
        z1.colwise() += p.fc1_b[c];
        cache.fc1_act[c] = z1.array().tanh();

        cache.fc2_pre[c] = p.fc2_w[c] * cache.fc1_act[c];
        cache.fc2_pre[c].colwise() += p.fc2_b[c];
        cache.fc2_act[c] = cache.fc2_pre[c].array().sin();
    }
    for (int o = 0; o < K; ++o) {
        cache.output[o].resize(cfg.flat_size(), batch);
        for (Eigen::Index s = 0; s < batch; ++s) {
            for (int c = 0; c < K; ++c) {
                conv_same(cache.fc2_act[c].col(s), p.conv2_w[o][c],
                          cache.output[o].col(s), nx, ny, c > 0);
            }
        }
        cache.output[o].array() += p.conv2_b(o);
    }
    return cache;
}

// Gradients for a batch; returns the mean loss over all entries.
double backward_batch(const NetworkConfig& cfg, const NetworkParams& p,
                      const std::vector<Eigen::MatrixXd>& input,
                      const std::vector<Eigen::MatrixXd>& target,
                      NetworkParams& grads) {
    const int K = cfg.channels;
    const int nx = cfg.nx;
    const int ny = cfg.is_2d() ? cfg.ny : 0;
    const auto batch = input[0].cols();
    const double scale = 1.0 / (double(K) * cfg.flat_size() * double(batch));

    BatchCache cache = forward_batch(cfg, p, input);

    double loss = 0.0;
    std::vector<Eigen::MatrixXd> d_out(K);
    for (int o = 0; o < K; ++o) {
        d_out[o] = cache.output[o] - target[o];
        loss += d_out[o].squaredNorm();
        d_out[o] *= 2.0 * scale;
    }
    loss *= scale;

    std::vector<Eigen::MatrixXd> d_fc2_act(K);
    for (int c = 0; c < K; ++c) {
        d_fc2_act[c] = Eigen::MatrixXd::Zero(cfg.flat_size(), batch);
    }
    for (int o = 0; o < K; ++o) {
        grads.conv2_b(o) += d_out[o].sum();
        for (int c = 0; c < K; ++c) {
            for (Eigen::Index s = 0; s < batch; ++s) {
                conv_same_kernel_grad(cache.fc2_act[c].col(s), d_out[o].col(s),
                                      grads.conv2_w[o][c], nx, ny);
                conv_same_adjoint_input(d_out[o].col(s), p.conv2_w[o][c],
                                        d_fc2_act[c].col(s), nx, ny);
            }
        }
    }

    for (int c = 0; c < K; ++c) {
        // sinusoid layer: d z2 = d act * cos(z2)
        Eigen::MatrixXd d_z2 =
            d_fc2_act[c].array() * cache.fc2_pre[c].array().cos();
        grads.fc2_w[c].noalias() += d_z2 * cache.fc1_act[c].transpose();
        grads.fc2_b[c] += d_z2.rowwise().sum();

        Eigen::MatrixXd d_a1 = p.fc2_w[c].transpose() * d_z2;
        // tanh layer: d z1 = d act * (1 - tanh^2)
        Eigen::MatrixXd d_z1 =
            d_a1.array() * (1.0 - cache.fc1_act[c].array().square());
        grads.fc1_w[c].noalias() += d_z1 * cache.conv1_out[c].transpose();
        grads.fc1_b[c] += d_z1.rowwise().sum();

        Eigen::MatrixXd d_conv1 = p.fc1_w[c].transpose() * d_z1;
        grads.conv1_b(c) += d_conv1.sum();
        for (Eigen::Index s = 0; s < batch; ++s) {
            conv_same_kernel_grad(input[c].col(s), d_conv1.col(s), grads.conv1_w[c],
                                  nx, ny);
        }
    }
    return loss;
}

std::vector<Eigen::MatrixXd> split_channels(const NetworkConfig& cfg,
                                            const std::vector<const Field*>& fields) {
    std::vector<Eigen::MatrixXd> channels(cfg.channels);
    for (int c = 0; c < cfg.channels; ++c) {
        channels[c].resize(cfg.flat_size(), fields.size());
        for (std::size_t s = 0; s < fields.size(); ++s) {
            channels[c].col(s) = fields[s]->values().col(c);
        }
    }
    return channels;
}

// Keras-style Nadam with the momentum schedule mu_t = beta1 (1 - 0.5 * 0.96^(t/250)).
struct Nadam {
    NetworkParams m, v;
    double m_schedule = 1.0;
    long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit Nadam(const NetworkConfig& cfg)
        : m(NetworkParams::zeros(cfg)), v(NetworkParams::zeros(cfg)) {}

    void update(NetworkParams& params, NetworkParams& grads) {
        ++step;
        const double t = static_cast<double>(step);
        const double mu_t = beta1 * (1.0 - 0.5 * std::pow(0.96, t * 0.004));
        const double mu_next = beta1 * (1.0 - 0.5 * std::pow(0.96, (t + 1.0) * 0.004));
        const double m_sched_new = m_schedule * mu_t;
        const double m_sched_next = m_sched_new * mu_next;
        m_schedule = m_sched_new;
        const double v_corr = 1.0 - std::pow(beta2, t);

        struct Cursor {
            double* g;
            double* m;
            double* v;
        };
        std::vector<Cursor> cursors;
        grads.for_each_tensor([&](const std::string&, double* g, Eigen::Index n) {
            cursors.push_back({g, nullptr, nullptr});
            (void)n;
        });
        std::size_t idx = 0;
        m.for_each_tensor([&](const std::string&, double* ptr, Eigen::Index) {
            cursors[idx++].m = ptr;
        });
        idx = 0;
        v.for_each_tensor([&](const std::string&, double* ptr, Eigen::Index) {
            cursors[idx++].v = ptr;
        });

        idx = 0;
        params.for_each_tensor([&](const std::string& name, double* w,
                                   Eigen::Index n) {
            Cursor cur = cursors[idx++];
            for (Eigen::Index i = 0; i < n; ++i) {
                const double g = cur.g[i];
                const double g_prime = g / (1.0 - m_sched_new);
                cur.m[i] = beta1 * cur.m[i] + (1.0 - beta1) * g;
                const double m_prime = cur.m[i] / (1.0 - m_sched_next);
                cur.v[i] = beta2 * cur.v[i] + (1.0 - beta2) * g * g;
                const double v_prime = cur.v[i] / v_corr;
                const double m_bar = (1.0 - mu_t) * g_prime + mu_next * m_prime;
                w[i] -= lr * m_bar / (std::sqrt(v_prime) + eps);
                if (!std::isfinite(w[i])) {
                    throw convergence_error("train: non-finite parameter in " + name);
                }
            }
        });
    }
};

} // namespace

void NetworkConfig::validate() const {
    if (channels < 1) throw domain_error("network: channels must be >= 1");
    if (nx < 1 || (is_2d() && ny < 1)) {
        throw domain_error("network: grid extents must be positive");
    }
    if (conv1_kernel < 1 || conv1_kernel % 2 == 0 || conv2_kernel < 1 ||
        conv2_kernel % 2 == 0) {
        throw domain_error("network: conv kernels must be odd (same padding)");
    }
    if (hidden() < 1) throw domain_error("network: hidden width must be >= 1");
}

bool NetworkConfig::matches(const Field& f) const {
    if (f.components() != channels) return false;
    if (is_2d()) {
        return f.grid().dim() == 2 && f.grid().nx() == nx && f.grid().ny() == ny;
    }
    return f.grid().dim() == 1 && f.grid().nx() == nx;
}

NetworkParams NetworkParams::zeros(const NetworkConfig& cfg) {
    cfg.validate();
    const int K = cfg.channels;
    const int flat = cfg.flat_size();
    const int hidden = cfg.hidden();
    const int k1 = cfg.is_2d() ? cfg.conv1_kernel * cfg.conv1_kernel : cfg.conv1_kernel;
    const int k2 = cfg.is_2d() ? cfg.conv2_kernel * cfg.conv2_kernel : cfg.conv2_kernel;

    NetworkParams p;
    p.conv1_w.assign(K, Eigen::VectorXd::Zero(k1));
    p.conv1_b = Eigen::VectorXd::Zero(K);
    p.fc1_w.assign(K, Eigen::MatrixXd::Zero(hidden, flat));
    p.fc1_b.assign(K, Eigen::VectorXd::Zero(hidden));
    p.fc2_w.assign(K, Eigen::MatrixXd::Zero(flat, hidden));
    p.fc2_b.assign(K, Eigen::VectorXd::Zero(flat));
    p.conv2_w.assign(K, std::vector<Eigen::VectorXd>(K, Eigen::VectorXd::Zero(k2)));
    p.conv2_b = Eigen::VectorXd::Zero(K);
    return p;
}

NetworkParams NetworkParams::initialize(const NetworkConfig& cfg) {
    NetworkParams p = zeros(cfg);
    Rng rng(cfg.seed);
    auto fill = [&](Eigen::Ref<Eigen::VectorXd> v, double fan_in, double fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            v(i) = rng.uniform(-limit, limit);
        }
    };
    const int K = cfg.channels;
    for (int c = 0; c < K; ++c) {
        fill(p.conv1_w[c], p.conv1_w[c].size(), p.conv1_w[c].size());
    }
    for (int c = 0; c < K; ++c) {
        Eigen::Map<Eigen::VectorXd> w1(p.fc1_w[c].data(), p.fc1_w[c].size());
        fill(w1, cfg.flat_size(), cfg.hidden());
        Eigen::Map<Eigen::VectorXd> w2(p.fc2_w[c].data(), p.fc2_w[c].size());
        fill(w2, cfg.hidden(), cfg.flat_size());
    }
    for (int o = 0; o < K; ++o) {
        for (int c = 0; c < K; ++c) {
            fill(p.conv2_w[o][c], p.conv2_w[o][c].size() * K,
                 p.conv2_w[o][c].size() * K);
        }
    }
    return p;
}

bool NetworkParams::all_finite() const {
    bool ok = true;
    const_cast<NetworkParams*>(this)->for_each_tensor(
        [&](const std::string&, double* data, Eigen::Index n) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!std::isfinite(data[i])) ok = false;
            }
        });
    return ok;
}

Field forward_pass(const NetworkConfig& cfg, const NetworkParams& params,
                   const Field& input) {
    cfg.validate();
    if (!cfg.matches(input)) {
        throw shape_error("forward_pass: input does not match the network shape");
    }
    std::vector<const Field*> one{&input};
    const BatchCache cache = forward_batch(cfg, params, split_channels(cfg, one));
    Field out(input.grid(), cfg.channels);
    for (int c = 0; c < cfg.channels; ++c) {
        out.values().col(c) = cache.output[c].col(0);
    }
    return out;
}

double loss_mse(const Field& prediction, const Field& target) {
    prediction.check_same_shape(target);
    const auto diff = prediction.flat() - target.flat();
    return diff.squaredNorm() / static_cast<double>(diff.size());
}

NetworkParams backprop(const NetworkConfig& cfg, const NetworkParams& params,
                       const TrainingSample& sample) {
    cfg.validate();
    if (!cfg.matches(sample.input) || !cfg.matches(sample.target)) {
        throw shape_error("backprop: sample does not match the network shape");
    }
    if (!params.all_finite()) throw domain_error("backprop: non-finite parameters");
    NetworkParams grads = NetworkParams::zeros(cfg);
    std::vector<const Field*> in{&sample.input};
    std::vector<const Field*> tg{&sample.target};
    backward_batch(cfg, params, split_channels(cfg, in), split_channels(cfg, tg),
                   grads);
    if (!grads.all_finite()) {
        throw convergence_error("backprop: non-finite gradients");
    }
    return grads;
}

TrainResult train(const NetworkConfig& cfg,
                  const std::vector<TrainingSample>& dataset, int epochs,
                  int batch_size, std::uint64_t seed) {
    cfg.validate();
    if (dataset.empty()) throw domain_error("train: dataset is empty");
    if (epochs < 1) throw domain_error("train: epochs must be >= 1");
    if (batch_size < 1) throw domain_error("train: batch_size must be >= 1");
    for (const auto& s : dataset) {
        if (!cfg.matches(s.input) || !cfg.matches(s.target)) {
            throw shape_error("train: sample does not match the network shape");
        }
    }

    TrainResult result{NetworkParams::initialize(cfg), {}};
    Nadam optimizer(cfg);
    Rng rng(seed);

    const int n = static_cast<int>(dataset.size());
    const int bs = std::min(batch_size, n);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    double initial_loss = -1.0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        int seen = 0;
        for (int start = 0; start < n; start += bs) {
            const int count = std::min(bs, n - start);
            std::vector<const Field*> in(count), tg(count);
            for (int i = 0; i < count; ++i) {
                in[i] = &dataset[order[start + i]].input;
                tg[i] = &dataset[order[start + i]].target;
            }
            NetworkParams grads = NetworkParams::zeros(cfg);
            const double batch_loss =
                backward_batch(cfg, result.params, split_channels(cfg, in),
                               split_channels(cfg, tg), grads);
            optimizer.update(result.params, grads);
            epoch_loss += batch_loss * count;
            seen += count;
        }
        epoch_loss /= seen;
        result.loss_history.push_back(epoch_loss);
        if (initial_loss < 0.0) initial_loss = std::max(epoch_loss, 1e-300);
        if (!std::isfinite(epoch_loss) || epoch_loss > 1e6 * initial_loss) {
            throw convergence_error("train: diverged at epoch " +
                                    std::to_string(epoch + 1) + " with loss " +
                                    std::to_string(epoch_loss));
        }
    }
    return result;
}

Field reconstruct(const NetworkConfig& cfg, const NetworkParams& params,
                  const Field& observation) {
    return forward_pass(cfg, params, observation);
}

void save_checkpoint(const std::string& path, const NetworkConfig& cfg,
                     const NetworkParams& params, int epochs) {
    io::AtomicFile file(path);
    std::ostream& os = file.stream();
    os << "fracback-checkpoint 1\n";
    os << "channels " << cfg.channels << "\n";
    os << "nx " << cfg.nx << "\n";
    os << "ny " << cfg.ny << "\n";
    os << "conv1_kernel " << cfg.conv1_kernel << "\n";
    os << "conv2_kernel " << cfg.conv2_kernel << "\n";
    os << "fc_hidden " << cfg.fc_hidden << "\n";
    os << "seed " << cfg.seed << "\n";
    os << "epochs " << epochs << "\n";
    os << "endheader\n";
    const_cast<NetworkParams&>(params).for_each_tensor(
        [&](const std::string&, double* data, Eigen::Index n) {
            io::write_f64_le(os, data, static_cast<std::size_t>(n));
        });
    file.commit();
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open checkpoint '" + path + "'");
    auto header = io::read_header(is, "fracback-checkpoint 1");
    Checkpoint ckpt;
    ckpt.config.channels = io::header_int(header, "channels");
    ckpt.config.nx = io::header_int(header, "nx");
    ckpt.config.ny = io::header_int(header, "ny");
    ckpt.config.conv1_kernel = io::header_int(header, "conv1_kernel");
    ckpt.config.conv2_kernel = io::header_int(header, "conv2_kernel");
    ckpt.config.fc_hidden = io::header_int(header, "fc_hidden");
    ckpt.config.seed = static_cast<std::uint64_t>(io::header_int(header, "seed"));
    ckpt.epochs = io::header_int(header, "epochs");
    ckpt.params = NetworkParams::zeros(ckpt.config);
    ckpt.params.for_each_tensor(
        [&](const std::string& name, double* data, Eigen::Index n) {
            io::read_f64_le(is, data, static_cast<std::size_t>(n));
            if (!is) throw io_error("checkpoint truncated in block " + name);
        });
    return ckpt;
}

} // namespace fracback
