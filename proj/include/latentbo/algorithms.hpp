#pragma once

#include <latentbo/common.hpp>
#include <latentbo/sdr.hpp>
#include <latentbo/testbed.hpp>
#include <latentbo/trace.hpp>
#include <latentbo/vae.hpp>

#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace latentbo::algorithms {

/// Settings of a single optimisation run.
struct RunConfig {
    std::string problem = "ackley";
    std::string algorithm = "v_bovae";
    int dim = 20;
    int budget = 100;              // B: acquisition steps after the initial design
    int retrain_period = 20;       // q
    int latent_dim = 2;            // d
    int hidden = 30;               // VAE hidden width
    std::uint64_t seed = 0;
    std::uint64_t problem_seed = 0; // rotation of low-rank problems
    sdr::SdrParams sdr;
    vae::TripletParams triplet;
    double latent_bound = 5.0;     // R0 = [-b, b]^d
    int unlabelled = 5000;         // M
    double labelled_fraction = 0.01;
    int initial_points = 10;       // ambient designs (BO-SDR, REMBO)
    vae::AnnealSchedule anneal;
    vae::TrainOptions pretrain = vae::pretrain_defaults();
    vae::TrainOptions retrain = vae::retrain_defaults();
    std::uint64_t vae_seed = 0;    // shared pre-training seed

    /// Number of outer retraining cycles, ceil(B / q).
    int cycles() const { return (budget + retrain_period - 1) / retrain_period; }
    Box latent_box() const { return Box::cube(latent_dim, -latent_bound, latent_bound); }
};

/// Algorithm names accepted by run().
const std::vector<std::string>& algorithm_names();
bool is_known_algorithm(const std::string& name);

/// Throws ConfigError naming the offending field.
void validate(const RunConfig& cfg);

/// A pre-trained VAE together with the unlabelled set it was trained on.
struct Pretrained {
    Matrix unlabelled; // D x M, in [-3,3]^D
    vae::VaeModel model;
};

/// Pre-trained VAEs shared by every run with the same data and network
/// settings. Thread safe; concurrent requests for one key train once.
/// With a checkpoint directory, models are also persisted and reloaded.
class PretrainCache {
public:
    PretrainCache() = default;
    explicit PretrainCache(std::filesystem::path checkpoint_dir);

    std::shared_ptr<const Pretrained> get(const RunConfig& cfg);

    /// Global instance used when a driver is given no cache.
    static PretrainCache& shared();

private:
    std::shared_ptr<const Pretrained> build(const RunConfig& cfg, const std::string& key) const;

    std::optional<std::filesystem::path> dir_;
    std::mutex mutex_;
    std::map<std::string, std::shared_future<std::shared_ptr<const Pretrained>>> entries_;
};

/// Ambient-space BO with sequential domain reduction.
Trace run_bo_sdr(const RunConfig& cfg);

/// One-time pre-trained VAE, GP in latent space, optional latent SDR.
Trace run_vanilla_bovae(const RunConfig& cfg, bool with_sdr, PretrainCache* cache = nullptr);

struct RetrainVariant {
    bool use_dml = false;
    bool with_sdr = true;
};

/// Periodic VAE retraining every q steps; plain ELBO with SDR (R-BOVAE) or
/// soft-triplet ELBO without SDR (S-BOVAE), or any other combination.
Trace run_retraining_bovae(const RunConfig& cfg, RetrainVariant variant,
                           PretrainCache* cache = nullptr);

inline Trace run_retrain_bovae(const RunConfig& cfg, PretrainCache* cache = nullptr) {
    return run_retraining_bovae(cfg, {false, true}, cache);
}

inline Trace run_dml_bovae(const RunConfig& cfg, PretrainCache* cache = nullptr) {
    return run_retraining_bovae(cfg, {true, false}, cache);
}

/// Dispatches on cfg.algorithm (bo_sdr, v_bovae, v_bovae_nosdr, r_bovae,
/// s_bovae, rembo).
Trace run(const RunConfig& cfg, PretrainCache* cache = nullptr);

} // namespace latentbo::algorithms
