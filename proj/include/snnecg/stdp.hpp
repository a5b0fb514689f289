#pragma once

// Unsupervised pattern-extraction layer.
//
// Every channel owns N LIF neurons fully connected to the channel's gain
// neurons. Forward weights learn with pair-based STDP using nearest-neighbour
// pairing; the depression branch can be amplified by gamma(w) so that
// synapses with graded input statistics settle strictly inside [0, w_max].
//
// During training each STDP neuron has an inhibitory twin that fires whenever
// it fires and injects (negative) current into the other neurons of the same
// channel one step later. The twins are dropped out at random per epoch and
// removed entirely at inference.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snnecg/core.hpp"
#include "snnecg/errors.hpp"
#include "snnecg/random.hpp"

namespace snnecg {

enum class StdpRule { kClassic, kOptimized };

struct StdpParams {
  StdpRule rule = StdpRule::kOptimized;
  double a_plus = 0.01;
  double a_minus = -0.01;
  double tau_stdp = 20.0;  // ms
  double gamma_max = 4.0;
  double w_max = 1.0;
  std::size_t neurons_per_window = 10;
  double init_lo = 0.3;  // fraction of w_max
  double init_hi = 0.7;

  void validate() const {
    if (!(a_plus > 0.0)) throw ConfigError("stdp: a_plus must be > 0");
    if (!(a_minus < 0.0)) throw ConfigError("stdp: a_minus must be < 0");
    if (!(tau_stdp > 0.0)) throw ConfigError("stdp: tau_stdp must be > 0");
    if (!(gamma_max > 1.0)) throw ConfigError("stdp: gamma_max must be > 1");
    if (!(w_max > 0.0)) throw ConfigError("stdp: w_max must be > 0");
    if (neurons_per_window < 1) throw ConfigError("stdp: neurons_per_window must be >= 1");
    if (!(0.0 <= init_lo && init_lo <= init_hi && init_hi <= 1.0))
      throw ConfigError("stdp: need 0 <= init_lo <= init_hi <= 1");
  }
};

struct InhibParams {
  bool enabled = true;
  double b_plus = 0.005;
  double b_minus = -0.05;
  double lambda = 5.0;  // ms
  double dropout_p = 0.2;

  void validate() const {
    if (!(b_plus > 0.0)) throw ConfigError("inhib: b_plus must be > 0");
    if (!(b_minus < 0.0)) throw ConfigError("inhib: b_minus must be < 0");
    if (!(lambda >= 0.0)) throw ConfigError("inhib: lambda must be >= 0");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("inhib: dropout_p must be in [0, 1)");
  }
};

/// LTD amplification factor; 1 at w = 0, rising toward gamma_max.
inline double gamma(double w, double gamma_max) { return (1.0 + w * gamma_max) / (1.0 + w); }

/// Classic exponential STDP window. Zero for simultaneous spikes.
inline double stdp_delta_classic(double dt_spike, const StdpParams& p) {
  const double decay = std::exp(-std::abs(dt_spike) / p.tau_stdp);
  if (dt_spike > 0.0) return p.a_plus * decay;
  if (dt_spike < 0.0) return p.a_minus * decay;
  return 0.0;
}

/// STDP window whose depression branch is scaled by gamma(w).
inline double stdp_delta(double dt_spike, double w, const StdpParams& p) {
  const double d = stdp_delta_classic(dt_spike, p);
  return dt_spike < 0.0 ? d * gamma(w, p.gamma_max) : d;
}

inline double stdp_update(double dt_spike, double w, const StdpParams& p) {
  return p.rule == StdpRule::kClassic ? stdp_delta_classic(dt_spike, p) : stdp_delta(dt_spike, w, p);
}

/// Saturating inhibitory rule: coincident firing (|dt| <= lambda) deepens w'
/// by b_minus / (1 - w'), anything else relaxes it by b_plus.
inline double inhib_delta(double dt_spike, double w_prime, const InhibParams& p) {
  if (std::abs(dt_spike) <= p.lambda) return p.b_minus / (1.0 - w_prime);
  return p.b_plus;
}

inline double clip_forward(double w, double w_max) { return std::clamp(w, 0.0, w_max); }
inline double clip_inhibitory(double w) { return std::min(w, 0.0); }

/// Weights of one channel.
struct StdpChannel {
  Matrix w;         // inputs x neurons, in [0, w_max]
  Matrix w_inhib;   // source x target, <= 0; diagonal unused
  std::vector<std::uint8_t> active;  // inhibitory twin active this epoch

  StdpChannel() = default;
  StdpChannel(std::size_t inputs, std::size_t neurons)
      : w(inputs, neurons, 0.0), w_inhib(neurons, neurons, 0.0), active(neurons, 1) {}

  std::size_t inputs() const { return w.rows; }
  std::size_t neurons() const { return w.cols; }
};

inline StdpChannel init_stdp_channel(std::size_t inputs, const StdpParams& p, Rng& rng) {
  StdpChannel ch(inputs, p.neurons_per_window);
  for (auto& v : ch.w.data) v = p.w_max * rng.uniform(p.init_lo, p.init_hi);
  return ch;
}

/// Draws a fresh dropout mask for the inhibitory twins.
inline void draw_dropout(StdpChannel& ch, double dropout_p, Rng& rng) {
  for (auto& a : ch.active) a = rng.uniform() < dropout_p ? 0 : 1;
}

/// Adds the inhibitory current caused by STDP neurons that fired at t into
/// `next` (delivered at t + 1). Inactive twins contribute nothing.
inline void apply_inhibition(std::span<const std::uint32_t> fired, const StdpChannel& ch,
                             std::span<double> next) {
  for (auto j : fired) {
    if (!ch.active[j]) continue;
    const auto row = ch.w_inhib.row(j);
    for (std::size_t k = 0; k < row.size(); ++k)
      if (k != j) next[k] += row[k];
  }
}

enum class StdpMode { kInfer, kTrain };

struct StdpRunStats {
  std::uint64_t spikes = 0;          // STDP neuron spikes
  std::uint64_t inhib_spikes = 0;    // active twin spikes
  std::uint64_t ltp = 0;
  std::uint64_t ltd = 0;
};

/// Simulates one channel of the STDP layer over a beat.
///
/// In kTrain mode forward and inhibitory weights are updated online with
/// nearest-neighbour pairing and clipped after every update.
inline SpikeTrain run_stdp_channel(const SpikeTrain& input, StdpChannel& ch, const LifParams& lif,
                                   const StdpParams& sp, const InhibParams& ip, StdpMode mode,
                                   StdpRunStats* stats = nullptr) {
  if (input.neurons != ch.inputs()) {
    throw ConfigError("stdp: channel expects " + std::to_string(ch.inputs()) + " inputs, got " +
                      std::to_string(input.neurons));
  }
  const std::size_t n_in = ch.inputs();
  const std::size_t n = ch.neurons();
  const bool train = mode == StdpMode::kTrain;
  const bool inhibit = train && ip.enabled;

  SpikeTrain out(n, input.horizon);
  LifState state(n, lif);
  std::vector<Step> last_pre(n_in, kNever);
  std::vector<double> current(n, 0.0), next(n, 0.0);
  std::vector<std::uint8_t> fired;
  std::vector<std::uint32_t> post_now, pre_now;
  std::vector<Step> last_post_before(n, kNever);
  StdpRunStats local;

  std::size_t e = 0;
  for (Step t = 0; t < input.horizon; ++t) {
    pre_now.clear();
    for (; e < input.events.size() && input.events[e].t == t; ++e) pre_now.push_back(input.events[e].neuron);

    last_post_before = state.last_fire;
    lif_step(state, current, lif, t, fired, "stdp");
    post_now.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (fired[j]) {
        post_now.push_back(static_cast<std::uint32_t>(j));
        out.push(static_cast<std::uint32_t>(j), t);
      }
    local.spikes += post_now.size();

    if (train) {
      // Post spikes pair with the latest earlier pre spike of every synapse.
      for (auto j : post_now) {
        for (std::size_t i = 0; i < n_in; ++i) {
          if (last_pre[i] == kNever) continue;
          double& w = ch.w(i, j);
          w = clip_forward(w + stdp_update(static_cast<double>(t - last_pre[i]), w, sp), sp.w_max);
          ++local.ltp;
        }
      }
      // Pre spikes emitted now pair with the latest post spike; a post spike
      // in this same step is simultaneous and leaves the weight unchanged.
      for (auto i : pre_now) {
        const auto row = ch.w.row(i);
        for (std::size_t j = 0; j < n; ++j) {
          const Step lp = state.last_fire[j];
          if (lp == kNever || lp == t) continue;
          row[j] = clip_forward(row[j] + stdp_update(static_cast<double>(lp - t), row[j], sp), sp.w_max);
          ++local.ltd;
        }
      }
      if (inhibit) {
        for (auto j : post_now) {
          for (std::size_t k = 0; k < n; ++k) {
            if (k == j || !ch.active[k]) continue;
            const Step tk = fired[k] ? t : last_post_before[k];
            if (tk == kNever) continue;
            double& wp = ch.w_inhib(k, j);
            wp = clip_inhibitory(wp + inhib_delta(static_cast<double>(t - tk), wp, ip));
          }
        }
      }
    }

    std::fill(next.begin(), next.end(), 0.0);
    for (auto i : pre_now) {
      const auto row = ch.w.row(i);
      for (std::size_t j = 0; j < n; ++j) next[j] += row[j];
      last_pre[i] = t;
    }
    if (inhibit) {
      apply_inhibition(post_now, ch, next);
      for (auto j : post_now) local.inhib_spikes += ch.active[j];
    }
    current.swap(next);
  }
  if (stats) {
    stats->spikes += local.spikes;
    stats->inhib_spikes += local.inhib_spikes;
    stats->ltp += local.ltp;
    stats->ltd += local.ltd;
  }
  return out;
}

}  // namespace snnecg
