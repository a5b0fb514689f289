#pragma once

// Discrete-time leaky integrate-and-fire kernel.
//
// Every layer in the network advances with the same fixed step. A spike
// emitted at step t is delivered to its targets at step t + 1; this one-step
// transmission delay is what lets a causal pre -> post pair have a strictly
// positive timing difference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snnecg/errors.hpp"

namespace snnecg {

using Step = std::int32_t;
inline constexpr Step kNever = std::numeric_limits<Step>::min();

struct LifParams {
  double tau_m = 10.0;   // ms
  double u_rest = 0.0;
  double u_th = 1.0;
  double alpha = 1.0;    // potential per unit weighted input
  double dt = 1.0;       // ms

  void validate(std::string_view layer = "lif") const {
    auto fail = [&](const char* what) {
      throw ConfigError(std::string(layer) + ": " + what);
    };
    if (!(tau_m > 0.0)) fail("tau_m must be > 0");
    if (!(u_th > u_rest)) fail("u_th must exceed u_rest");
    if (!(dt > 0.0)) fail("dt must be > 0");
    if (!(dt <= tau_m)) fail("dt must not exceed tau_m");
    if (!std::isfinite(alpha)) fail("alpha must be finite");
  }
};

struct LifState {
  std::vector<double> u;
  std::vector<Step> last_fire;

  LifState() = default;
  LifState(std::size_t n, const LifParams& p) : u(n, p.u_rest), last_fire(n, kNever) {}

  std::size_t size() const { return u.size(); }
};

/// Returns every potential to rest and forgets spike history.
inline void reset_all(LifState& s, const LifParams& p) {
  std::fill(s.u.begin(), s.u.end(), p.u_rest);
  std::fill(s.last_fire.begin(), s.last_fire.end(), kNever);
}

/// One forward-Euler step of the LIF equation for every neuron.
///
/// `weighted_input[j]` is the summed weight of spikes arriving at neuron j in
/// this step. Neurons reaching `u_th` are reset to `u_rest` and flagged in
/// `fired`. Returns the number of neurons that fired.
inline std::size_t lif_step(LifState& s, std::span<const double> weighted_input,
                            const LifParams& p, Step t, std::vector<std::uint8_t>& fired,
                            std::string_view layer = "lif") {
  if (weighted_input.size() != s.size()) {
    throw ConfigError(std::string(layer) + ": input size " +
                      std::to_string(weighted_input.size()) + " != layer size " +
                      std::to_string(s.size()));
  }
  fired.assign(s.size(), 0);
  const double k = p.dt / p.tau_m;
  std::size_t n_fired = 0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    double u = s.u[j] + k * (-(s.u[j] - p.u_rest) + p.alpha * weighted_input[j]);
    if (!std::isfinite(u)) throw NumericError(std::string(layer), j);
    if (u >= p.u_th) {
      u = p.u_rest;
      s.last_fire[j] = t;
      fired[j] = 1;
      ++n_fired;
    }
    s.u[j] = u;
  }
  return n_fired;
}

struct SpikeEvent {
  std::uint32_t neuron;
  Step t;

  friend bool operator==(const SpikeEvent&, const SpikeEvent&) = default;
};

/// Spikes of a population over [0, horizon), ordered by time then neuron.
struct SpikeTrain {
  std::size_t neurons = 0;
  Step horizon = 0;
  std::vector<SpikeEvent> events;

  SpikeTrain() = default;
  SpikeTrain(std::size_t n, Step h) : neurons(n), horizon(h) {}

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }

  void push(std::uint32_t neuron, Step t) { events.push_back({neuron, t}); }

  std::vector<std::uint32_t> counts() const {
    std::vector<std::uint32_t> c(neurons, 0);
    for (const auto& e : events) ++c[e.neuron];
    return c;
  }

  friend bool operator==(const SpikeTrain&, const SpikeTrain&) = default;
};

/// Dense row-major matrix; weights are stored (inputs x neurons).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double v = 0.0) : rows(r), cols(c), data(r * c, v) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Drives a fresh LIF population with `input` through `weights`.
///
/// Deterministic: the layer starts at rest and no randomness is involved.
inline SpikeTrain run_layer(const Matrix& weights, const SpikeTrain& input, const LifParams& p,
                            std::string_view layer = "layer") {
  if (weights.rows != input.neurons) {
    throw ConfigError(std::string(layer) + ": weight rows " + std::to_string(weights.rows) +
                      " != input neurons " + std::to_string(input.neurons));
  }
  SpikeTrain out(weights.cols, input.horizon);
  LifState state(weights.cols, p);
  std::vector<double> current(weights.cols, 0.0);
  std::vector<double> next(weights.cols, 0.0);
  std::vector<std::uint8_t> fired;
  std::size_t e = 0;
  for (Step t = 0; t < input.horizon; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (; e < input.events.size() && input.events[e].t == t; ++e) {
      const auto w = weights.row(input.events[e].neuron);
      for (std::size_t j = 0; j < w.size(); ++j) next[j] += w[j];
    }
    lif_step(state, current, p, t, fired, layer);
    for (std::size_t j = 0; j < fired.size(); ++j)
      if (fired[j]) out.push(static_cast<std::uint32_t>(j), t);
    current.swap(next);
  }
  return out;
}

}  // namespace snnecg
