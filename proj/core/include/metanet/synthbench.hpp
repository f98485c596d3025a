#pragma once

#include "metanet/config.hpp"
#include "metanet/rng.hpp"
#include "metanet/types.hpp"

namespace metanet {

// Deterministic scalar load signal in [0,1].
double load_signal(const LoadSignalConfig& cfg, int interval);

const RegimeSegment& active_segment(const SyntheticConfig& cfg, int interval);

// Observed cost of policy k at interval t: the regime-active affine map of
// the load signal plus bounded uniform noise, floored at zero.
double synth_cost(const SyntheticConfig& cfg, int policy, int interval, Rng& rng);

// Noise-free expected cost.
double synth_expected_cost(const SyntheticConfig& cfg, int policy, int interval);

// Closed-form per-interval best arm and its expected cumulative cost.
int oracle_best(const SyntheticConfig& cfg, int interval);
double oracle_cumulative(const SyntheticConfig& cfg, int T);

// State whose host-0 CPU channel (and history) carries the load signal, so
// the synthetic pipeline reuses the real featurization path.
EncodedState synth_state(const SyntheticConfig& cfg, int interval, int history_window);

}  // namespace metanet
