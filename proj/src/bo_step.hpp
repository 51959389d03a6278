#pragma once

#include <latentbo/acquisition.hpp>
#include <latentbo/gp.hpp>

#include <algorithm>
#include <optional>
#include <vector>

namespace latentbo::detail {

/// GP fit + EI maximisation over a region. Hyperparameters carry over between
/// calls as the warm start until reset() is called.
class Surrogate {
public:
    explicit Surrogate(gp::FitOptions options = {}) : options_(std::move(options)) {}

    void reset() { warm_.reset(); }

    acquisition::Proposal propose(const std::vector<Vector>& inputs,
                                  const std::vector<double>& values, const Box& region,
                                  std::uint64_t seed) {
        const Matrix xs = gp::to_matrix(inputs);
        const Vector ys = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
        gp::FitOptions opts = options_;
        opts.warm_start = warm_;
        std::optional<gp::GpModel> model;
        try {
            model.emplace(gp::fit(xs, ys, opts, seed));
        } catch (const NumericalError&) {
            // Warm start may sit in a bad basin; one cold retry before giving up.
            if (!warm_) {
                throw;
            }
            opts.warm_start.reset();
            model.emplace(gp::fit(xs, ys, opts, seed));
        }
        warm_ = model->params();
        const double best = *std::min_element(values.begin(), values.end());
        return acquisition::maximize(*model, best, region, seed ^ 0x5eedULL);
    }

private:
    gp::FitOptions options_;
    std::optional<gp::KernelParams> warm_;
};

/// Independent per-step seeds derived from a run seed.
class SeedStream {
public:
    SeedStream(std::uint64_t seed, std::uint64_t stream) : rng_(make_rng(seed, stream)) {}
    std::uint64_t next() { return rng_(); }

private:
    Rng rng_;
};

inline std::size_t argmin(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

} // namespace latentbo::detail
