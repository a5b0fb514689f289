#pragma once

// Beat segmentation, overlapping windows and dual-polarity Poisson encoding.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "snnecg/core.hpp"
#include "snnecg/errors.hpp"
#include "snnecg/random.hpp"

namespace snnecg {


inline std::int64_t round_half_up(double x) {
  return static_cast<std::int64_t>(std::floor(x + 0.5));
}

/// Samples kept before the R peak at sampling rate `fs`.
inline std::size_t pre_r_samples(double fs) {
  return static_cast<std::size_t>(round_half_up(fs * 25.0 / 100.0));
}

/// Samples kept after (and including) the R peak.
inline std::size_t post_r_samples(double fs) {
  return static_cast<std::size_t>(round_half_up(fs * 45.0 / 100.0));
}

inline std::size_t beat_length(double fs) { return pre_r_samples(fs) + post_r_samples(fs); }

struct Beat {
  std::vector<double> samples;
  double fs = 0.0;
  std::size_t r_index = 0;
  std::optional<std::string> label;
  // Where the beat came from; used by the split and per-record reports.
  std::string record_id;
  std::size_t r_peak = 0;
};

class TruncatedBeat : public DataError {
 public:
  using DataError::DataError;
};

/// Cuts [r_peak - 0.25 s, r_peak + 0.45 s) out of `signal`.
inline Beat segment_beat(std::span<const double> signal, std::size_t r_peak, double fs) {
  if (!(fs > 0.0)) throw ConfigError("segment_beat: fs must be > 0");
  const std::size_t pre = pre_r_samples(fs);
  const std::size_t post = post_r_samples(fs);
  if (r_peak < pre || r_peak + post > signal.size()) {
    throw TruncatedBeat("truncated-beat: R peak at " + std::to_string(r_peak) + " needs [" +
                        std::to_string(static_cast<long long>(r_peak) - static_cast<long long>(pre)) +
                        ", " + std::to_string(r_peak + post) + ") within a signal of " +
                        std::to_string(signal.size()) + " samples");
  }
  Beat b;
  b.samples.assign(signal.begin() + static_cast<std::ptrdiff_t>(r_peak - pre),
                   signal.begin() + static_cast<std::ptrdiff_t>(r_peak + post));
  b.fs = fs;
  b.r_index = pre;
  b.r_peak = r_peak;
  return b;
}

struct Window {
  std::size_t q = 1;  // 1-based
  std::size_t offset = 0;
  std::vector<double> samples;
};

/// Length of every window when a beat of `beat_len` samples is split Q ways.
inline std::size_t window_length(std::size_t beat_len, std::size_t q_count) {
  const std::size_t half = (q_count + 1) / 2;
  return (beat_len + half - 1) / half;
}

inline std::vector<std::size_t> window_offsets(std::size_t beat_len, std::size_t q_count) {
  if (q_count < 1) throw ConfigError("window count Q must be >= 1");
  const std::size_t len = window_length(beat_len, q_count);
  if (len < 2) {
    throw ConfigError("window count Q=" + std::to_string(q_count) +
                      " too large for a beat of " + std::to_string(beat_len) + " samples");
  }
  std::vector<std::size_t> off(q_count, 0);
  if (q_count > 1) {
    const double span = static_cast<double>(beat_len - len);
    for (std::size_t q = 1; q < q_count; ++q)
      off[q] = static_cast<std::size_t>(
          round_half_up(static_cast<double>(q) * span / static_cast<double>(q_count - 1)));
  }
  return off;
}

/// Splits a beat into Q equal-length overlapping windows with evenly spaced
/// offsets; the first starts at 0 and the last ends at the beat's end.
inline std::vector<Window> split_windows(const Beat& beat, std::size_t q_count) {
  const auto offsets = window_offsets(beat.samples.size(), q_count);
  const std::size_t len = window_length(beat.samples.size(), q_count);
  std::vector<Window> out;
  out.reserve(q_count);
  for (std::size_t q = 0; q < q_count; ++q) {
    Window w;
    w.q = q + 1;
    w.offset = offsets[q];
    const auto first = beat.samples.begin() + static_cast<std::ptrdiff_t>(offsets[q]);
    w.samples.assign(first, first + static_cast<std::ptrdiff_t>(len));
    out.push_back(std::move(w));
  }
  return out;
}

struct EncoderParams {
  double r_base = 0.1;    // spikes/ms on every cell
  double r_scale = 0.05;  // spikes/ms per normalized amplitude unit
  Step horizon = 200;     // steps per beat

  void validate() const {
    if (!(r_base >= 0.0)) throw ConfigError("encoder: r_base must be >= 0");
    if (!(r_scale > 0.0)) throw ConfigError("encoder: r_scale must be > 0");
    if (horizon < 1) throw ConfigError("encoder: horizon must be >= 1");
  }

  double rate(double amplitude) const { return r_base + r_scale * std::abs(amplitude); }
};

inline double fire_probability(double rate, double dt) { return std::min(1.0, rate * dt); }

/// Per-step firing probabilities of the positive and negative cell for a sample.
inline std::pair<double, double> cell_probabilities(double x, const EncoderParams& p, double dt) {
  const double active = fire_probability(p.rate(x), dt);
  const double idle = fire_probability(p.r_base, dt);
  return x >= 0.0 ? std::pair{active, idle} : std::pair{idle, active};
}

struct EncodedWindow {
  SpikeTrain positive;
  SpikeTrain negative;
};

/// Poisson-encodes a window: two cells per sample, Bernoulli per step.
inline EncodedWindow encode_window(const Window& window, const EncoderParams& p, Rng& rng,
                                   double dt = 1.0) {
  const std::size_t n = window.samples.size();
  std::vector<double> pp(n), pn(n);
  for (std::size_t i = 0; i < n; ++i) std::tie(pp[i], pn[i]) = cell_probabilities(window.samples[i], p, dt);
  EncodedWindow out{SpikeTrain(n, p.horizon), SpikeTrain(n, p.horizon)};
  for (Step t = 0; t < p.horizon; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() < pp[i]) out.positive.push(static_cast<std::uint32_t>(i), t);
      if (rng.uniform() < pn[i]) out.negative.push(static_cast<std::uint32_t>(i), t);
    }
  }
  return out;
}

/// Interleaves window pairs into 2Q channels: channel 2q-1 (1-based) carries
/// window q's positive cells, channel 2q its negative cells.
inline std::vector<SpikeTrain> route_windows(std::vector<EncodedWindow> encoded) {
  std::vector<SpikeTrain> out;
  out.reserve(encoded.size() * 2);
  for (auto& w : encoded) {
    out.push_back(std::move(w.positive));
    out.push_back(std::move(w.negative));
  }
  return out;
}

enum class Normalization { kRobust, kNone };

/// Linear-interpolated quantile of sorted data.
inline double quantile_sorted(std::span<const double> v, double q) {
  if (v.empty()) throw DataError("quantile of an empty sequence");
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Centers a record on its median and scales by its inter-quartile range.
inline void normalize_signal(std::vector<double>& x, Normalization method) {
  if (method == Normalization::kNone || x.empty()) return;
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double med = quantile_sorted(sorted, 0.5);
  double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  if (!(iqr > 0.0)) iqr = 1.0;
  for (auto& v : x) v = (v - med) / iqr;
}

}  // namespace snnecg
