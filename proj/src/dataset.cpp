#include "fracback/dataset.hpp"

#include "fracback/errors.hpp"
#include "fracback/io.hpp"
#include "fracback/l1fdm.hpp"
#include "fracback/rng.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

namespace fracback {
namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

} // namespace

Field add_noise(const Field& field, double delta, std::uint64_t seed,
                NoiseScaling scaling) {
    if (!(delta >= 0.0)) throw domain_error("add_noise: delta must be >= 0");
    if (delta == 0.0) return field;
    const double s = scaling == NoiseScaling::relative
                         ? field.values().cwiseAbs().maxCoeff()
                         : 1.0;
    Rng rng(seed);
    Field noisy = field;
    for (int k = 0; k < field.components(); ++k) {
        for (int i = 0; i < field.grid().interior_count(); ++i) {
            noisy.at(k, i) += delta * s * rng.normal();
        }
    }
    return noisy;
}

double relative_rmse(const Field& estimate, const Field& truth) {
    estimate.check_same_shape(truth);
    const double denom = truth.flat().norm();
    if (denom == 0.0) {
        throw domain_error("relative_rmse: truth field is identically zero");
    }
    return (estimate.flat() - truth.flat()).norm() / denom;
}

std::vector<Field> recipe_initial_values(const std::string& recipe,
                                         const Grid& grid) {
    std::vector<Field> out;
    if (recipe == "sines_1d") {
        if (grid.dim() != 1) throw domain_error("recipe sines_1d needs a 1D grid");
        for (int i = 1; i <= 5; ++i) {
            for (int j = 1; j <= 5; ++j) {
                out.push_back(Field::from_function(
                    grid, 2, [i, j](int k, double x, double) {
                        return std::sin((k == 0 ? i : j) * kPi * x);
                    }));
            }
        }
        return out;
    }
    if (recipe == "sines_2d") {
        if (grid.dim() != 2) throw domain_error("recipe sines_2d needs a 2D grid");
        for (int i = 1; i <= 5; ++i)
            for (int j = 1; j <= 5; ++j)
                for (int k = 1; k <= 5; ++k)
                    for (int l = 1; l <= 5; ++l) {
                        out.push_back(Field::from_function(
                            grid, 2, [=](int c, double x, double y) {
                                return c == 0 ? std::sin(i * kPi * x) *
                                                    std::sin(j * kPi * y)
                                              : std::sin(k * kPi * x) *
                                                    std::sin(l * kPi * y);
                            }));
                    }
        return out;
    }
    throw domain_error("unknown dataset recipe '" + recipe + "'");
}

Dataset gen_dataset(const CoupledOperator& op, double alpha, double T,
                    int time_steps, const std::string& recipe,
                    std::uint64_t seed) {
    const std::vector<Field> initial_values = recipe_initial_values(recipe, op.grid);
    const TimeGrid tg(T, time_steps);
    std::vector<Field> finals;
    try {
        finals = solve_forward_multi(op, alpha, initial_values, tg);
    } catch (const error& e) {
        throw error(std::string("gen_dataset: forward solve failed: ") + e.what());
    }

    Dataset dataset;
    dataset.samples.reserve(initial_values.size());
    for (std::size_t s = 0; s < initial_values.size(); ++s) {
        dataset.samples.push_back({finals[s], initial_values[s]});
    }
    dataset.manifest["format"] = "fracback-dataset 1";
    dataset.manifest["recipe"] = recipe;
    dataset.manifest["solver"] = "l1fdm";
    dataset.manifest["time_steps"] = std::to_string(time_steps);
    dataset.manifest["grid"] = op.grid.describe();
    dataset.manifest["components"] = std::to_string(op.components);
    dataset.manifest["alpha"] = io::format_double(alpha);
    dataset.manifest["T"] = io::format_double(T);
    dataset.manifest["seed"] = std::to_string(seed);
    dataset.manifest["count"] = std::to_string(dataset.samples.size());
    return dataset;
}

namespace {

std::string sample_file(std::size_t index) {
    std::ostringstream os;
    os << "sample_" << index << ".bin";
    return os.str();
}

} // namespace

void save_dataset(const std::string& dir, const Dataset& dataset) {
    std::filesystem::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> entries(
        dataset.manifest.begin(), dataset.manifest.end());
    io::write_manifest(dir + "/manifest.txt", entries);
    for (std::size_t s = 0; s < dataset.samples.size(); ++s) {
        const TrainingSample& sample = dataset.samples[s];
        io::write_array_file(dir + "/" + sample_file(s), sample.input.grid(),
                             {io::field_to_block(sample.target, "u0"),
                              io::field_to_block(sample.input, "uT")});
    }
}

Dataset load_dataset(const std::string& dir) {
    Dataset dataset;
    dataset.manifest = io::read_manifest(dir + "/manifest.txt");
    const auto count_it = dataset.manifest.find("count");
    if (count_it == dataset.manifest.end()) {
        throw io_error("dataset manifest lacks a sample count");
    }
    const std::size_t count = std::stoul(count_it->second);
    for (std::size_t s = 0; s < count; ++s) {
        const io::ArrayFile file = io::read_array_file(dir + "/" + sample_file(s));
        dataset.samples.push_back(
            {io::block_to_field(file.grid, file.block("uT")),
             io::block_to_field(file.grid, file.block("u0"))});
    }
    return dataset;
}

} // namespace fracback
