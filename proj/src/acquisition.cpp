#include <latentbo/acquisition.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace latentbo::acquisition {

double ei(double mean, double std, double best) {
    const double gap = best - mean;
    if (!(std > 0.0)) {
        return std::max(gap, 0.0);
    }
    const double u = gap / std;
    const double cdf = 0.5 * std::erfc(-u / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    return std::max(gap * cdf + std * pdf, 0.0);
}

namespace {

std::vector<double> ei_batch(const gp::GpModel& model, const Matrix& xs, double best) {
    const auto preds = model.predict(xs);
    std::vector<double> out(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        out[i] = ei(preds[i].mean, std::sqrt(preds[i].variance), best);
    }
    return out;
}

} // namespace

Proposal maximize(const gp::GpModel& model, double best_value, const Box& region,
                  std::uint64_t seed, const MaximizeOptions& options) {
    if (region.dim() != model.dim()) {
        throw InputError("acquisition::maximize: region and model dimensions differ");
    }
    const Eigen::Index dim = region.dim();
    Rng rng = make_rng(seed, 0xac);
    Matrix cands(dim, options.candidates);
    for (int j = 0; j < options.candidates; ++j) {
        cands.col(j) = region.sample(rng);
    }
    const std::vector<double> values = ei_batch(model, cands, best_value);

    std::vector<int> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    // Descending EI, lowest index first among ties.
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values[a] > values[b]; });

    if (!(values[order.front()] > 0.0)) {
        return {cands.col(0), 0.0, true};
    }

    Proposal best{cands.col(order.front()), values[order.front()], false};
    const int starts = std::min<int>(options.refine_starts, options.candidates);
    Matrix trial(dim, 2);
    for (int s = 0; s < starts; ++s) {
        Vector x = cands.col(order[s]);
        double fx = values[order[s]];
        Vector step = 0.25 * region.widths();
        for (int sweep = 0; sweep < options.sweeps; ++sweep) {
            for (Eigen::Index i = 0; i < dim; ++i) {
                trial.col(0) = x;
                trial.col(1) = x;
                trial(i, 0) = std::min(x[i] + step[i], region.upper()[i]);
                trial(i, 1) = std::max(x[i] - step[i], region.lower()[i]);
                const auto tv = ei_batch(model, trial, best_value);
                const int k = tv[1] > tv[0] ? 1 : 0;
                if (tv[k] > fx) {
                    fx = tv[k];
                    x = trial.col(k);
                }
            }
            step *= 0.5;
        }
        if (fx > best.value) {
            best = {x, fx, false};
        }
    }
    return best;
}

} // namespace latentbo::acquisition
