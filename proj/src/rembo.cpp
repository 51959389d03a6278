#include <latentbo/rembo.hpp>

#include "bo_step.hpp"

#include <chrono>
#include <cmath>

namespace latentbo::rembo {

Embedding draw_embedding(int ambient_dim, int effective_dim, std::uint64_t seed) {
    if (effective_dim < 1 || ambient_dim < effective_dim + 1) {
        throw InputError("draw_embedding: need D >= d_e + 1 >= 2");
    }
    Rng rng = make_rng(seed, 0xe4);
    Embedding e;
    e.reduced_dim = effective_dim + 1;
    e.delta = 2.2 * std::sqrt(static_cast<double>(effective_dim));
    e.matrix_a = gaussian_matrix(ambient_dim, e.reduced_dim, rng);
    return e;
}

Vector project_up(const Embedding& embedding, const Vector& y, const Box& domain) {
    if (y.size() != embedding.reduced_dim || domain.dim() != embedding.matrix_a.rows()) {
        throw InputError("project_up: dimension mismatch");
    }
    return domain.clip(embedding.matrix_a * y);
}

Trace run_rembo(const testbed::Problem& problem, int budget, std::uint64_t seed) {
    if (!problem.effective_dim()) {
        throw InputError("run_rembo: problem has no effective dimensionality");
    }
    if (budget < kInitialDesign) {
        throw InputError("run_rembo: budget smaller than the initial design");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Embedding emb =
        draw_embedding(static_cast<int>(problem.dim()), *problem.effective_dim(), seed);
    const Box box = emb.search_box();

    Trace trace;
    trace.problem = problem.name();
    trace.algorithm = "rembo";
    trace.seed = seed;
    trace.initial_design = kInitialDesign;

    std::vector<Vector> ys;
    std::vector<double> fs;
    Rng init_rng = make_rng(seed, 0x1d);
    for (int i = 0; i < kInitialDesign; ++i) {
        Vector y = box.sample(init_rng);
        Vector x = project_up(emb, y, problem.domain());
        const double f = problem.evaluate(x);
        trace.append(0, std::move(x), y, f);
        ys.push_back(std::move(y));
        fs.push_back(f);
    }

    detail::Surrogate surrogate;
    detail::SeedStream seeds(seed, 0xb0);
    try {
        for (int k = 0; k < budget - kInitialDesign; ++k) {
            const auto proposal = surrogate.propose(ys, fs, box, seeds.next());
            trace.acquisition_fallbacks += proposal.fallback ? 1 : 0;
            Vector x = project_up(emb, proposal.point, problem.domain());
            const double f = problem.evaluate(x);
            trace.append(k + 1, std::move(x), proposal.point, f);
            ys.push_back(proposal.point);
            fs.push_back(f);
        }
    } catch (const NumericalError& e) {
        trace.error = e.what();
    }
    trace.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return trace;
}

} // namespace latentbo::rembo
