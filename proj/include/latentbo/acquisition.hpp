#pragma once

#include <latentbo/common.hpp>
#include <latentbo/gp.hpp>

#include <cstdint>

namespace latentbo::acquisition {

/// Expected improvement below `best` for a Gaussian N(mean, std^2).
double ei(double mean, double std, double best);

struct MaximizeOptions {
    int candidates = 1024;
    int refine_starts = 8;
    int sweeps = 20;
};

struct Proposal {
    Vector point;
    double value = 0.0;
    /// The EI landscape was flat zero; `point` is the first random candidate.
    bool fallback = false;
};

/// Maximises EI over `region`: seeded uniform candidates, then coordinate
/// refinement with a halving step from the best few.
Proposal maximize(const gp::GpModel& model, double best_value, const Box& region,
                  std::uint64_t seed, const MaximizeOptions& options = {});

} // namespace latentbo::acquisition
