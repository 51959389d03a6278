#pragma once

#include <latentbo/common.hpp>
#include <latentbo/testbed.hpp>
#include <latentbo/trace.hpp>

#include <cstdint>

namespace latentbo::rembo {

/// Random linear embedding x = clip(A y) with y in [-delta, delta]^d.
struct Embedding {
    Matrix matrix_a; // D x d, i.i.d. standard normal
    double delta = 0.0;
    int reduced_dim = 0;

    Box search_box() const { return Box::cube(reduced_dim, -delta, delta); }
};

/// d = d_e + 1 and delta = 2.2 sqrt(d_e).
Embedding draw_embedding(int ambient_dim, int effective_dim, std::uint64_t seed);

Vector project_up(const Embedding& embedding, const Vector& y, const Box& domain);

inline constexpr int kInitialDesign = 10;

/// GP/EI loop over the reduced box. `budget` counts every evaluation,
/// including the initial design; the trace records ambient points with the
/// reduced coordinates in the z columns.
Trace run_rembo(const testbed::Problem& problem, int budget, std::uint64_t seed);

} // namespace latentbo::rembo
