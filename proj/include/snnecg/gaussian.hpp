#pragma once

// Gaussian gain layer.
//
// Each channel (2Q of them) has one LIF neuron per encoder cell, connected
// one-to-one with weight g_i = beta * N(i; mu = L/2, sigma = L/3). The scale
// beta is trained per channel so that every channel's mean output count per
// neuron per beat approaches a common target.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "snnecg/core.hpp"
#include "snnecg/errors.hpp"

namespace snnecg {

struct GaussianParams {
  double r_target = 10.0;  // spikes per neuron per beat
  double alpha_g = 100.0;  // beta learning rate
  double beta_init = 1.0;
  double beta_min = 1e-3;
  double epsilon = 0.05;   // convergence tolerance on |1 - R/R_target|
  int max_epochs = 50;

  void validate() const {
    if (!(r_target > 0.0)) throw ConfigError("gaussian: r_target must be > 0");
    if (!(alpha_g >= 0.0)) throw ConfigError("gaussian: alpha_g must be >= 0");
    if (!(beta_min > 0.0)) throw ConfigError("gaussian: beta_min must be > 0");
    if (!(beta_init >= beta_min)) throw ConfigError("gaussian: beta_init must be >= beta_min");
    if (!(epsilon > 0.0)) throw ConfigError("gaussian: epsilon must be > 0");
    if (max_epochs < 0) throw ConfigError("gaussian: max_epochs must be >= 0");
  }
};

/// Gaussian kernel over positions i = 1..window_len, scaled by beta.
inline std::vector<double> init_gains(std::size_t window_len, double beta) {
  if (window_len < 2) throw ConfigError("init_gains: window_len must be >= 2");
  const double mu = 0.5 * static_cast<double>(window_len);
  const double sigma = static_cast<double>(window_len) / 3.0;
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> g(window_len);
  for (std::size_t k = 0; k < window_len; ++k) {
    const double z = (static_cast<double>(k + 1) - mu) / sigma;
    g[k] = beta * norm * std::exp(-0.5 * z * z);
  }
  return g;
}

/// Trained state of the gain layer: one beta per channel over a shared kernel.
struct GaussianLayer {
  std::vector<double> kernel;  // unit-beta gains, length L
  std::vector<double> beta;    // one per channel

  GaussianLayer() = default;
  GaussianLayer(std::size_t window_len, std::size_t channels, double beta_init)
      : kernel(init_gains(window_len, 1.0)), beta(channels, beta_init) {}

  std::size_t channels() const { return beta.size(); }
  std::size_t window_len() const { return kernel.size(); }

  std::vector<double> gains(std::size_t channel) const {
    std::vector<double> g(kernel);
    for (auto& v : g) v *= beta[channel];
    return g;
  }
};

/// Drives one channel's gain neurons, each from its own encoder cell.
inline SpikeTrain run_gain_layer(std::span<const double> gains, const SpikeTrain& input,
                                 const LifParams& p) {
  if (gains.size() != input.neurons) {
    throw ConfigError("gaussian: " + std::to_string(gains.size()) + " gains for " +
                      std::to_string(input.neurons) + " inputs");
  }
  SpikeTrain out(gains.size(), input.horizon);
  LifState state(gains.size(), p);
  std::vector<double> current(gains.size(), 0.0), next(gains.size(), 0.0);
  std::vector<std::uint8_t> fired;
  std::size_t e = 0;
  for (Step t = 0; t < input.horizon; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (; e < input.events.size() && input.events[e].t == t; ++e)
      next[input.events[e].neuron] += gains[input.events[e].neuron];
    lif_step(state, current, p, t, fired, "gaussian");
    for (std::size_t j = 0; j < fired.size(); ++j)
      if (fired[j]) out.push(static_cast<std::uint32_t>(j), t);
    current.swap(next);
  }
  return out;
}

/// Mean spikes per neuron per beat over a dataset pass.
inline double measure_mean_rate(std::span<const SpikeTrain> pass) {
  if (pass.empty()) throw DataError("measure_mean_rate: no beats processed, rate undefined");
  double spikes = 0.0, neurons = 0.0;
  for (const auto& tr : pass) {
    spikes += static_cast<double>(tr.size());
    neurons += static_cast<double>(tr.neurons);
  }
  if (neurons == 0.0) throw DataError("measure_mean_rate: empty layer, rate undefined");
  return spikes / neurons;
}

/// Beta increment driving a channel's mean rate toward the target.
inline double update_beta(double mean_rate, double r_target, double alpha_g) {
  if (!(r_target > 0.0)) throw ConfigError("update_beta: r_target must be > 0");
  return alpha_g * (1.0 - mean_rate / r_target);
}

struct GaussianReport {
  bool converged = false;
  int epochs = 0;
  std::vector<std::vector<double>> rate_history;  // per epoch, per channel
  std::vector<double> final_rates;

  double max_relative_error(double r_target) const {
    double m = 0.0;
    for (double r : final_rates) m = std::max(m, std::abs(1.0 - r / r_target));
    return m;
  }
};

/// Iterative beta training.
///
/// `measure(layer, epoch)` must return the mean output rate of every channel
/// for one pass over the training data with the current betas.
template <typename MeasureFn>
GaussianReport train_gaussian(GaussianLayer& layer, const GaussianParams& gp, MeasureFn&& measure) {
  GaussianReport rep;
  for (int epoch = 0; epoch < gp.max_epochs; ++epoch) {
    std::vector<double> rates = measure(static_cast<const GaussianLayer&>(layer), epoch);
    rep.rate_history.push_back(rates);
    rep.final_rates = rates;
    rep.epochs = epoch + 1;
    double worst = 0.0;
    for (double r : rates) worst = std::max(worst, std::abs(1.0 - r / gp.r_target));
    if (worst <= gp.epsilon) {
      rep.converged = true;
      return rep;
    }
    for (std::size_t c = 0; c < layer.channels(); ++c)
      layer.beta[c] = std::max(gp.beta_min, layer.beta[c] + update_beta(rates[c], gp.r_target, gp.alpha_g));
  }
  return rep;
}

}  // namespace snnecg
