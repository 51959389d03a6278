#pragma once

#include <latentbo/common.hpp>
#include <latentbo/nn.hpp>
#include <latentbo/testbed.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace latentbo::vae {

struct Encoding {
    Matrix mu;     // latent_dim x batch
    Matrix logvar; // latent_dim x batch
};

/// Gaussian-encoder VAE. The encoder trunk emits [mu; logvar] (2d outputs);
/// the decoder emits the mean of a unit-variance Gaussian likelihood.
class VaeModel {
public:
    VaeModel() = default;
    /// Encoder [D, hidden, 2d], decoder [d, hidden, D].
    VaeModel(int ambient_dim, int hidden, int latent_dim, std::uint64_t seed);
    VaeModel(nn::Mlp encoder, nn::Mlp decoder);

    int ambient_dim() const { return decoder_.output_size(); }
    int latent_dim() const { return decoder_.input_size(); }
    const nn::Mlp& encoder() const { return encoder_; }
    const nn::Mlp& decoder() const { return decoder_; }

    Encoding encode(const Matrix& xs) const;
    /// Latent mean of a single point.
    Vector encode_mean(const Vector& x) const;
    /// Decoder means clipped into [-3,3]^D.
    Matrix decode(const Matrix& zs) const;
    Vector decode(const Vector& z) const;

    /// Encoder parameters followed by decoder parameters.
    Vector parameters() const;
    void set_parameters(const Vector& flat);

    nlohmann::json to_json() const;
    static VaeModel from_json(const nlohmann::json& j);

private:
    nn::Mlp encoder_;
    nn::Mlp decoder_;
};

/// z = mu + exp(logvar / 2) * xi with seeded standard-normal xi.
Vector reparam_sample(const Vector& mu, const Vector& logvar, std::uint64_t seed);

/// KL(N(mu, diag exp(logvar)) || N(0, I)).
double kl_divergence(const Vector& mu, const Vector& logvar);

struct LossResult {
    double loss = 0.0;           // batch mean, to be minimised
    double reconstruction = 0.0; // batch mean of 0.5 * ||x - x_hat||^2
    double kl = 0.0;             // batch mean
    double triplet = 0.0;        // summed triplet terms divided by batch size
    Vector gradient;             // d loss / d parameters()
};

/// Negative beta-ELBO for a batch (columns) with fixed reparameterisation noise.
LossResult elbo_loss(const VaeModel& vae, const Matrix& batch, double beta, const Matrix& noise);
LossResult elbo_loss(const VaeModel& vae, const Matrix& batch, double beta, std::uint64_t seed);

struct TripletParams {
    double eta_threshold = 0.01;
    double nu = 0.2;
    double norm_p = 2.0;
};

/// Soft triplet loss for base i, candidate positive j and candidate negative k.
double soft_triplet_loss(const Vector& z_i, const Vector& z_j, const Vector& z_k, double f_i,
                         double f_j, double f_k, const TripletParams& params);

struct Triplet {
    int base;
    int positive;
    int negative;
};

/// Every point of the batch serves as base; up to `cap` (positive, negative)
/// pairs are drawn from its threshold sets without replacement.
std::vector<Triplet> mine_triplets(std::span<const double> values, const TripletParams& params,
                                   std::uint64_t seed, int cap = 10);

/// Negative beta=1 ELBO plus the mean soft-triplet penalty over `triplets`.
LossResult dml_elbo_loss(const VaeModel& vae, const Matrix& batch, std::span<const double> values,
                         const TripletParams& params, const Matrix& noise,
                         const std::vector<Triplet>& triplets);
LossResult dml_elbo_loss(const VaeModel& vae, const Matrix& batch, std::span<const double> values,
                         const TripletParams& params, std::uint64_t seed);

struct AnnealSchedule {
    double beta_init = 0.0;
    double beta_final = 1.0;
    int step_epochs = 10;
    double beta_add = 0.1;

    /// KL weight in use during (0-based) `epoch`.
    double beta_at(int epoch) const;
};

struct TrainOptions {
    int epochs = 300;
    int batch_size = 1024;
    double lr = 1e-3;
};

inline TrainOptions pretrain_defaults() { return {300, 1024, 1e-3}; }
inline TrainOptions retrain_defaults() { return {2, 256, 1e-3}; }

/// Annealed-beta training on unlabelled columns of `data`.
VaeModel pretrain(const VaeModel& vae, const Matrix& data, const AnnealSchedule& schedule,
                  const TrainOptions& options, std::uint64_t seed);

/// Fine-tuning on a labelled set with beta = 1. With `use_dml` the values are
/// min-max normalised over the whole set and the soft-triplet loss is added.
VaeModel retrain(const VaeModel& vae, const testbed::LabelledDataset& labelled, bool use_dml,
                 const TripletParams& params, const TrainOptions& options, std::uint64_t seed);

} // namespace latentbo::vae
