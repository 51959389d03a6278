#include <latentbo/nn.hpp>

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

namespace latentbo::nn {
namespace {

std::atomic<std::uint64_t> g_revision{1};

Matrix softplus(const Matrix& z) { return z.unaryExpr([](double v) { return nn::softplus(v); }); }
Matrix sigmoid(const Matrix& z) { return z.unaryExpr([](double v) { return nn::sigmoid(v); }); }

void check_sizes(const std::vector<int>& sizes) {
    if (sizes.size() < 2) {
        throw InputError("Mlp: need at least an input and an output layer");
    }
    for (int s : sizes) {
        if (s < 1) {
            throw InputError("Mlp: layer sizes must be positive");
        }
    }
}

} // namespace

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Vector MlpGradients::flat() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        n += weights[l].size() + biases[l].size();
    }
    Vector out(n);
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < weights[l].cols(); ++c) {
                out[k++] = weights[l](r, c);
            }
        }
        out.segment(k, biases[l].size()) = biases[l];
        k += biases[l].size();
    }
    return out;
}

Mlp::Mlp(std::vector<int> layer_sizes, std::uint64_t seed) : sizes_(std::move(layer_sizes)) {
    check_sizes(sizes_);
    Rng rng = make_rng(seed, 0x22);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const int fan_in = sizes_[l];
        const int fan_out = sizes_[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Matrix w(fan_out, fan_in);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                w(r, c) = dist(rng);
            }
        }
        weights_.push_back(std::move(w));
        biases_.push_back(Vector::Zero(fan_out));
    }
    bump();
}

Mlp Mlp::zeros(std::vector<int> layer_sizes) {
    check_sizes(layer_sizes);
    Mlp net;
    net.sizes_ = std::move(layer_sizes);
    for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
        net.weights_.push_back(Matrix::Zero(net.sizes_[l + 1], net.sizes_[l]));
        net.biases_.push_back(Vector::Zero(net.sizes_[l + 1]));
    }
    net.bump();
    return net;
}

void Mlp::bump() { revision_ = g_revision.fetch_add(1); }

void Mlp::set_layer(std::size_t layer, Matrix weight, Vector bias) {
    if (weight.rows() != weights_.at(layer).rows() || weight.cols() != weights_[layer].cols() ||
        bias.size() != biases_[layer].size()) {
        throw InputError("Mlp::set_layer: shape mismatch");
    }
    weights_[layer] = std::move(weight);
    biases_[layer] = std::move(bias);
    bump();
}

Eigen::Index Mlp::parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        n += weights_[l].size() + biases_[l].size();
    }
    return n;
}

Vector Mlp::parameters() const {
    MlpGradients view{weights_, biases_, Matrix()};
    return view.flat();
}

void Mlp::set_parameters(const Vector& flat) {
    if (flat.size() != parameter_count()) {
        throw InputError("Mlp::set_parameters: wrong parameter count");
    }
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        for (Eigen::Index r = 0; r < weights_[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) {
                weights_[l](r, c) = flat[k++];
            }
        }
        biases_[l] = flat.segment(k, biases_[l].size());
        k += biases_[l].size();
    }
    bump();
}

Tape Mlp::forward(const Matrix& x) const {
    if (x.rows() != input_size()) {
        throw InputError("Mlp::forward: input has " + std::to_string(x.rows()) +
                         " rows, expected " + std::to_string(input_size()));
    }
    Tape tape;
    tape.revision = revision_;
    tape.activations.reserve(weights_.size() + 1);
    tape.activations.push_back(x);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Matrix z = weights_[l] * tape.activations.back();
        z.colwise() += biases_[l];
        const bool last = l + 1 == weights_.size();
        tape.activations.push_back(last ? z : softplus(z));
        tape.pre.push_back(std::move(z));
    }
    return tape;
}

Vector Mlp::operator()(const Vector& x) const {
    return forward(Matrix(x)).output().col(0);
}

MlpGradients Mlp::backward(const Tape& tape, const Matrix& output_grad) const {
    if (tape.revision != revision_ || tape.pre.size() != weights_.size()) {
        throw std::logic_error("Mlp::backward: tape was recorded against different parameters");
    }
    if (output_grad.rows() != output_size() || output_grad.cols() != tape.output().cols()) {
        throw InputError("Mlp::backward: output gradient shape mismatch");
    }
    const std::size_t n_layers = weights_.size();
    MlpGradients g;
    g.weights.resize(n_layers);
    g.biases.resize(n_layers);
    Matrix delta = output_grad;
    for (std::size_t l = n_layers; l-- > 0;) {
        g.weights[l] = delta * tape.activations[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        Matrix upstream = weights_[l].transpose() * delta;
        if (l == 0) {
            g.input = std::move(upstream);
        } else {
            delta = upstream.cwiseProduct(sigmoid(tape.pre[l - 1]));
        }
    }
    return g;
}

nlohmann::json Mlp::to_json() const {
    nlohmann::json j;
    j["layer_sizes"] = sizes_;
    const Vector flat = parameters();
    j["parameters"] = std::vector<double>(flat.data(), flat.data() + flat.size());
    return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
    Mlp net = zeros(j.at("layer_sizes").get<std::vector<int>>());
    const auto flat = j.at("parameters").get<std::vector<double>>();
    net.set_parameters(Eigen::Map<const Vector>(flat.data(), static_cast<Eigen::Index>(flat.size())));
    return net;
}

void adam_step(Vector& params, const Vector& grads, AdamState& state) {
    if (params.size() != grads.size()) {
        throw InputError("adam_step: parameter and gradient sizes differ");
    }
    if (state.first_moment.size() == 0) {
        state.first_moment = Vector::Zero(params.size());
        state.second_moment = Vector::Zero(params.size());
    }
    if (state.first_moment.size() != params.size()) {
        throw InputError("adam_step: optimiser state shaped for a different model");
    }
    ++state.step_count;
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
    state.second_moment =
        state.beta2 * state.second_moment + (1.0 - state.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    params.array() -= state.lr * (state.first_moment.array() / c1) /
                      ((state.second_moment.array() / c2).sqrt() + state.eps);
}

void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << j.dump();
}

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot read " + path.string());
    }
    return nlohmann::json::parse(in);
}

} // namespace latentbo::nn
