#pragma once

#include <latentbo/common.hpp>

#include <optional>

namespace latentbo::sdr {

struct SdrParams {
    double gamma_osc = 0.7;  // shrinkage when the best point oscillates
    double gamma_pan = 1.0;  // pure panning
    double eta_zoom = 0.9;   // zoom when the best point stays put
    double min_size = 0.5;   // smallest RoI width kept by trim
    int update_every = 1;    // update cadence in iterations
};

/// Region of interest plus the two-step history the oscillation indicator needs.
struct RoiState {
    Box roi;
    Vector centre;
    std::optional<Vector> prev_centre;
    std::optional<Vector> prev_d;
    Box outer;
    int iter = 0;
};

/// Per-dimension quantities of one contraction step.
struct Contraction {
    Vector d;      // normalised displacement of the best point
    Vector c_hat;  // signed square root of the oscillation indicator
    Vector gamma;
    Vector lambda; // width multiplier
};

/// Contraction factors for displacement `d` given the previous displacement.
Contraction contraction(const Vector& d, const Vector& prev_d, const SdrParams& params);

/// RoI of the outer widths centred at `centre`, clamped into `outer`.
RoiState init_roi(const Box& outer, const Vector& centre);

/// Pans the RoI to `new_best` and rescales each width by its contraction rate.
/// The first update treats the missing previous displacement as zero.
RoiState update_roi(const RoiState& state, const Vector& new_best, const SdrParams& params);

/// Clamps the RoI into the outer box and widens any dimension narrower than
/// `min_size` symmetrically, sliding it back inside the outer box if needed.
RoiState trim(const RoiState& state, double min_size);

/// True when iteration k is due for an update: k mod update_every == 0 and
/// every RoI width is at least min_size.
bool update_due(const RoiState& state, int k, const SdrParams& params);

} // namespace latentbo::sdr
