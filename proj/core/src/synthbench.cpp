#include "metanet/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "metanet/error.hpp"

namespace metanet {

double load_signal(const LoadSignalConfig& cfg, int interval) {
  const double phase =
      2.0 * std::numbers::pi * static_cast<double>(interval) / cfg.period;
  return std::clamp(cfg.base + cfg.amplitude * std::sin(phase), 0.0, 1.0);
}

const RegimeSegment& active_segment(const SyntheticConfig& cfg, int interval) {
  if (cfg.segments.empty())
    throw MetaError(ErrorKind::Configuration, "synthetic config has no segments");
  const RegimeSegment* active = &cfg.segments.front();
  for (const auto& seg : cfg.segments)
    if (seg.start <= interval) active = &seg;
  return *active;
}

double synth_expected_cost(const SyntheticConfig& cfg, int policy, int interval) {
  const RegimeSegment& seg = active_segment(cfg, interval);
  if (policy < 0 || policy >= static_cast<int>(seg.slope.size()))
    throw MetaError(ErrorKind::Argument, "synthetic policy index out of range");
  return seg.slope[policy] * load_signal(cfg.load, interval) + seg.intercept[policy];
}

double synth_cost(const SyntheticConfig& cfg, int policy, int interval, Rng& rng) {
  const double mean = synth_expected_cost(cfg, policy, interval);
  const double half_width = cfg.noise_level * cfg.cost_scale;
  const double noise = (2.0 * rng.u01() - 1.0) * half_width;
  return std::max(0.0, mean + noise);
}

int oracle_best(const SyntheticConfig& cfg, int interval) {
  const RegimeSegment& seg = active_segment(cfg, interval);
  int best = 0;
  double best_cost = synth_expected_cost(cfg, 0, interval);
  for (int k = 1; k < static_cast<int>(seg.slope.size()); ++k) {
    const double c = synth_expected_cost(cfg, k, interval);
    if (c < best_cost) {
      best_cost = c;
      best = k;
    }
  }
  return best;
}

double oracle_cumulative(const SyntheticConfig& cfg, int T) {
  double total = 0.0;
  for (int t = 1; t <= T; ++t)
    total += synth_expected_cost(cfg, oracle_best(cfg, t), t);
  return total;
}

EncodedState synth_state(const SyntheticConfig& cfg, int interval, int history_window) {
  EncodedState enc;
  enc.H.assign(cfg.fleet_hosts, {0.0, 0.0, 0.0});
  enc.H[0][0] = load_signal(cfg.load, interval);
  enc.histories.assign(cfg.fleet_hosts, std::vector<double>(history_window, 0.0));
  for (int i = 0; i < history_window; ++i) {
    const int past = interval - history_window + i;
    enc.histories[0][i] = past >= 1 ? load_signal(cfg.load, past) : 0.0;
  }
  return enc;
}

}  // namespace metanet
