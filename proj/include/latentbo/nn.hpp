#pragma once

#include <latentbo/common.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace latentbo::nn {

/// Numerically safe softplus, max(x,0) + log1p(exp(-|x|)).
double softplus(double x);
double sigmoid(double x);

/// Activations cached by Mlp::forward for the matching backward pass.
struct Tape {
    std::uint64_t revision = 0;
    std::vector<Matrix> activations; // layer inputs a_0..a_{L-1}, then the output
    std::vector<Matrix> pre;         // pre-activations of every affine layer

    const Matrix& output() const { return activations.back(); }
};

struct MlpGradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    Matrix input; // d(objective)/d(input), same shape as the forward input

    Vector flat() const;
};

/// Dense feedforward network: softplus on hidden layers, identity output.
/// Samples are columns throughout.
class Mlp {
public:
    Mlp() = default;
    /// Uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    Mlp(std::vector<int> layer_sizes, std::uint64_t seed);

    static Mlp zeros(std::vector<int> layer_sizes);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    std::size_t num_layers() const { return weights_.size(); }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    const Matrix& weight(std::size_t layer) const { return weights_.at(layer); }
    const Vector& bias(std::size_t layer) const { return biases_.at(layer); }
    void set_layer(std::size_t layer, Matrix weight, Vector bias);

    Eigen::Index parameter_count() const;
    /// Layer by layer: row-major weights, then biases.
    Vector parameters() const;
    void set_parameters(const Vector& flat);

    /// Changes whenever parameters are mutated; tapes record it.
    std::uint64_t revision() const { return revision_; }

    Tape forward(const Matrix& x) const;
    Vector operator()(const Vector& x) const;

    /// Reverse-mode gradients of sum(output_grad .* output) for the tape's batch.
    /// Throws std::logic_error for a tape recorded before a parameter change.
    MlpGradients backward(const Tape& tape, const Matrix& output_grad) const;

    nlohmann::json to_json() const;
    static Mlp from_json(const nlohmann::json& j);

private:
    void bump();

    std::vector<int> sizes_;
    std::vector<Matrix> weights_;
    std::vector<Vector> biases_;
    std::uint64_t revision_ = 0;
};

struct AdamState {
    Vector first_moment;
    Vector second_moment;
    long step_count = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(Vector& params, const Vector& grads, AdamState& state);

void save_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json load_json(const std::filesystem::path& path);

} // namespace latentbo::nn
