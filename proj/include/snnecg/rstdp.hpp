#pragma once

// Reward-modulated STDP output layer. One LIF neuron per class; the most
// active neuron wins. After each training beat only the winner's input
// synapses change: rewarded when the winner is the true class, punished
// otherwise.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snnecg/core.hpp"
#include "snnecg/errors.hpp"
#include "snnecg/random.hpp"

namespace snnecg {

/// Which spikes of a beat are compared in the timing test.
enum class RstdpTiming {
  kLast,   // each input's last spike against the winner's last spike
  kFirst,  // each input's first spike against the winner's first spike
};

struct RstdpParams {
  RstdpTiming timing = RstdpTiming::kLast;
  double ar_plus = 0.02;
  double ar_minus = -0.02;
  double ap_plus = 0.02;
  double ap_minus = -0.02;
  double psi_max = 1.0;
  double init_lo = 0.4;  // fraction of psi_max
  double init_hi = 0.6;

  void validate() const {
    if (!(ar_plus > 0.0 && ar_minus < 0.0)) throw ConfigError("rstdp: need ar_plus > 0 > ar_minus");
    if (!(ap_plus > 0.0 && ap_minus < 0.0)) throw ConfigError("rstdp: need ap_plus > 0 > ap_minus");
    if (!(psi_max > 0.0)) throw ConfigError("rstdp: psi_max must be > 0");
    if (!(0.0 <= init_lo && init_lo <= init_hi && init_hi <= 1.0))
      throw ConfigError("rstdp: need 0 <= init_lo <= init_hi <= 1");
  }
};

/// Winner-take-all readout: most spikes, then highest final potential, then
/// lowest index.
inline std::size_t predict(std::span<const std::uint32_t> counts, std::span<const double> potentials) {
  if (counts.empty()) throw ConfigError("predict: no class neurons");
  std::size_t best = 0;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > counts[best] ||
        (counts[k] == counts[best] && k < potentials.size() && potentials[k] > potentials[best]))
      best = k;
  }
  return best;
}

/// Weight change for one synapse of the winner.
///
/// `causal` is t_post > t_pre. The psi * (psi_max - psi) factor makes both
/// bounds fixed points.
inline double rstdp_delta(bool correct, bool causal, double psi, const RstdpParams& p) {
  const double shape = psi * (p.psi_max - psi);
  if (correct) return (causal ? p.ar_plus : p.ar_minus) * shape;
  return (causal ? p.ap_minus : p.ap_plus) * shape;
}

inline double rstdp_delta(bool correct, Step t_post, Step t_pre, double psi, const RstdpParams& p) {
  return rstdp_delta(correct, t_post > t_pre, psi, p);
}

struct ClassifierState {
  Matrix psi;  // (all STDP neurons) x classes
  std::vector<std::string> classes;

  std::size_t inputs() const { return psi.rows; }
  std::size_t num_classes() const { return psi.cols; }
};

inline ClassifierState init_classifier(std::size_t inputs, std::vector<std::string> classes,
                                       const RstdpParams& p, Rng& rng) {
  ClassifierState st;
  st.psi = Matrix(inputs, classes.size(), 0.0);
  st.classes = std::move(classes);
  for (auto& v : st.psi.data) v = p.psi_max * rng.uniform(p.init_lo, p.init_hi);
  return st;
}

struct ClassifierOutput {
  SpikeTrain spikes;
  std::vector<std::uint32_t> counts;
  std::vector<double> final_potential;
  std::vector<Step> first_spike;
  std::vector<Step> last_spike;
  std::size_t winner = 0;
};

/// Runs the class neurons over a beat and picks the winner.
inline ClassifierOutput run_classifier(const SpikeTrain& input, const ClassifierState& st,
                                       const LifParams& lif) {
  if (input.neurons != st.inputs()) {
    throw ConfigError("classifier: expects " + std::to_string(st.inputs()) + " inputs, got " +
                      std::to_string(input.neurons));
  }
  ClassifierOutput out;
  const std::size_t k = st.num_classes();
  out.spikes = SpikeTrain(k, input.horizon);
  LifState state(k, lif);
  std::vector<double> current(k, 0.0), next(k, 0.0);
  std::vector<std::uint8_t> fired;
  std::size_t e = 0;
  for (Step t = 0; t < input.horizon; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (; e < input.events.size() && input.events[e].t == t; ++e) {
      const auto row = st.psi.row(input.events[e].neuron);
      for (std::size_t c = 0; c < k; ++c) next[c] += row[c];
    }
    lif_step(state, current, lif, t, fired, "classifier");
    for (std::size_t c = 0; c < k; ++c)
      if (fired[c]) out.spikes.push(static_cast<std::uint32_t>(c), t);
    current.swap(next);
  }
  out.counts = out.spikes.counts();
  out.final_potential = state.u;
  out.last_spike = state.last_fire;
  out.first_spike.assign(k, kNever);
  for (auto it = out.spikes.events.rbegin(); it != out.spikes.events.rend(); ++it) out.first_spike[it->neuron] = it->t;
  out.winner = predict(out.counts, out.final_potential);
  return out;
}

/// Applies the reward or punishment update to the winner's input synapses.
///
/// t_pre is each input's last (or first) spike in the beat, t_post the
/// winner's last (or first) spike, or the end of the beat if it stayed
/// silent. Inputs that never fired are left alone. Returns the number of
/// synapses touched.
inline std::size_t apply_rstdp(ClassifierState& st, const SpikeTrain& input,
                               const ClassifierOutput& out, bool correct, const RstdpParams& p) {
  const bool first = p.timing == RstdpTiming::kFirst;
  std::vector<Step> t_pre(st.inputs(), kNever);
  for (const auto& ev : input.events) {
    Step& t = t_pre[ev.neuron];
    if (t == kNever || !first) t = ev.t;
  }
  const std::size_t k = out.winner;
  const Step winner_t = first ? out.first_spike[k] : out.last_spike[k];
  const Step t_post = winner_t == kNever ? input.horizon : winner_t;
  std::size_t touched = 0;
  for (std::size_t i = 0; i < st.inputs(); ++i) {
    if (t_pre[i] == kNever) continue;
    double& psi = st.psi(i, k);
    psi = std::clamp(psi + rstdp_delta(correct, t_post, t_pre[i], psi, p), 0.0, p.psi_max);
    ++touched;
  }
  return touched;
}

}  // namespace snnecg
