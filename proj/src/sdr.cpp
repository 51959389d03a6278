#include <latentbo/sdr.hpp>

#include <cmath>

namespace latentbo::sdr {
namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Smallest width a box may carry before Box rejects it.
constexpr double kMinWidth = 1e-12;

Box clamp_into(const Vector& lo, const Vector& hi, const Box& outer) {
    Vector l = lo.cwiseMax(outer.lower()).cwiseMin(outer.upper());
    Vector u = hi.cwiseMax(outer.lower()).cwiseMin(outer.upper());
    for (Eigen::Index i = 0; i < l.size(); ++i) {
        if (u[i] - l[i] < kMinWidth) {
            const double mid = 0.5 * (l[i] + u[i]);
            l[i] = std::max(outer.lower()[i], mid - kMinWidth);
            u[i] = std::min(outer.upper()[i], mid + kMinWidth);
        }
    }
    return Box(std::move(l), std::move(u));
}

} // namespace

Contraction contraction(const Vector& d, const Vector& prev_d, const SdrParams& params) {
    if (d.size() != prev_d.size()) {
        throw InputError("sdr::contraction: dimension mismatch");
    }
    Contraction out{d, Vector(d.size()), Vector(d.size()), Vector(d.size())};
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double c = d[i] * prev_d[i];
        out.c_hat[i] = std::sqrt(std::abs(c)) * sign(c);
        out.gamma[i] = 0.5 * (params.gamma_pan * (1.0 + out.c_hat[i]) +
                              params.gamma_osc * (1.0 - out.c_hat[i]));
        out.lambda[i] = params.eta_zoom + std::abs(d[i]) * (out.gamma[i] - params.eta_zoom);
    }
    return out;
}

RoiState init_roi(const Box& outer, const Vector& centre) {
    if (!outer.contains(centre)) {
        throw InputError("sdr::init_roi: centre outside the outer domain");
    }
    const Vector half = 0.5 * outer.widths();
    RoiState s{clamp_into(centre - half, centre + half, outer), centre, std::nullopt, std::nullopt,
               outer, 0};
    return s;
}

RoiState update_roi(const RoiState& state, const Vector& new_best, const SdrParams& params) {
    if (!state.outer.contains(new_best, 1e-12)) {
        throw InputError("sdr::update_roi: new best point outside the outer domain");
    }
    const Vector widths = state.roi.widths();
    const Vector d = 2.0 * (new_best - state.centre).array() / widths.array();
    const Vector prev_d = state.prev_d.value_or(Vector::Zero(d.size()));
    const Contraction step = contraction(d, prev_d, params);
    const Vector new_widths = (step.lambda.array() * widths.array()).cwiseMax(kMinWidth);

    RoiState next;
    next.outer = state.outer;
    next.centre = new_best;
    next.prev_centre = state.centre;
    next.prev_d = d;
    next.iter = state.iter + 1;
    next.roi = clamp_into(new_best - 0.5 * new_widths, new_best + 0.5 * new_widths, state.outer);
    return trim(next, params.min_size);
}

RoiState trim(const RoiState& state, double min_size) {
    RoiState out = state;
    Vector lo = state.roi.lower().cwiseMax(state.outer.lower());
    Vector hi = state.roi.upper().cwiseMin(state.outer.upper());
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (hi[i] - lo[i] < min_size) {
            const double mid = 0.5 * (lo[i] + hi[i]);
            lo[i] = mid - 0.5 * min_size;
            hi[i] = mid + 0.5 * min_size;
            // Slide back inside rather than cut, so the width survives at a wall.
            const double below = state.outer.lower()[i] - lo[i];
            const double above = hi[i] - state.outer.upper()[i];
            if (below > 0.0) {
                lo[i] += below;
                hi[i] += below;
            } else if (above > 0.0) {
                lo[i] -= above;
                hi[i] -= above;
            }
        }
    }
    out.roi = clamp_into(lo, hi, state.outer);
    return out;
}

bool update_due(const RoiState& state, int k, const SdrParams& params) {
    if (params.update_every < 1) {
        throw InputError("sdr: update_every must be >= 1");
    }
    // Trimmed widths equal min_size only up to rounding.
    return k % params.update_every == 0 &&
           (state.roi.widths().array() >= params.min_size * (1.0 - 1e-9)).all();
}

} // namespace latentbo::sdr
