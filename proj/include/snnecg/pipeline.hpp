#pragma once

// End-to-end network: encoder -> Gaussian gain layer -> STDP layer ->
// R-STDP classifier. Layers are trained one after another (gains, then STDP
// with its inhibitory twins, then the classifier), each with the layers
// before it frozen.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "snnecg/config.hpp"
#include "snnecg/core.hpp"
#include "snnecg/data.hpp"
#include "snnecg/encoder.hpp"
#include "snnecg/energy.hpp"
#include "snnecg/errors.hpp"
#include "snnecg/gaussian.hpp"
#include "snnecg/parallel.hpp"
#include "snnecg/random.hpp"
#include "snnecg/rstdp.hpp"
#include "snnecg/stdp.hpp"

namespace snnecg {

struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t dataset_digest = 0;
  std::size_t train_beats = 0;
  int gaussian_epochs = 0;
  bool gaussian_converged = false;
  int stdp_epochs = 0;
  int rstdp_epochs = 0;
  std::vector<std::string> warnings;
};

/// A trained network. Immutable once built; inference only reads it.
struct Model {
  RunConfig config;
  GaussianLayer gaussian;
  std::vector<StdpChannel> stdp;
  ClassifierState classifier;
  Provenance provenance;
};

/// Allocates a model with initial weights drawn from the config's seed.
inline Model init_model(const RunConfig& cfg) {
  cfg.validate();
  Model m;
  m.config = cfg;
  const std::size_t len = cfg.window_len();
  m.gaussian = GaussianLayer(len, cfg.channels(), cfg.gaussian.beta_init);
  for (std::size_t c = 0; c < cfg.channels(); ++c) {
    Rng rng(cfg.seed, {stage::kStdpInit, c});
    m.stdp.push_back(init_stdp_channel(len, cfg.stdp, rng));
  }
  Rng rng(cfg.seed, {stage::kRstdpInit});
  m.classifier = init_classifier(cfg.stdp_neurons(), cfg.classes.names(), cfg.rstdp, rng);
  m.provenance.seed = cfg.seed;
  return m;
}

inline void check_beat(const RunConfig& cfg, const Beat& beat) {
  if (beat.samples.size() != beat_length(cfg.fs)) {
    throw ConfigError("beat of " + std::to_string(beat.samples.size()) + " samples does not match model (" +
                      std::to_string(beat_length(cfg.fs)) + " samples at fs=" + std::to_string(cfg.fs) + ")");
  }
}

/// Encodes window q (0-based) of a beat into its positive and negative channel.
inline EncodedWindow encode_beat_window(const RunConfig& cfg, const Window& w, std::uint64_t stage_id,
                                        std::uint64_t epoch, std::uint64_t beat_index) {
  Rng rng(cfg.seed, {stage_id, epoch, beat_index, w.q - 1});
  return encode_window(w, cfg.encoder, rng, cfg.lif_gaussian.dt);
}

/// All 2Q encoder channels of a beat, in routed order.
inline std::vector<SpikeTrain> encode_beat(const RunConfig& cfg, const Beat& beat, std::uint64_t stage_id,
                                           std::uint64_t epoch, std::uint64_t beat_index) {
  check_beat(cfg, beat);
  std::vector<EncodedWindow> enc;
  for (const auto& w : split_windows(beat, cfg.windows))
    enc.push_back(encode_beat_window(cfg, w, stage_id, epoch, beat_index));
  return route_windows(std::move(enc));
}

/// Merges per-channel trains into one population with channel-major ids.
inline SpikeTrain concat_channels(std::span<const SpikeTrain> channels) {
  std::size_t total = 0;
  Step horizon = 0;
  for (const auto& c : channels) {
    total += c.neurons;
    horizon = std::max(horizon, c.horizon);
  }
  SpikeTrain out(total, horizon);
  std::size_t offset = 0;
  for (const auto& c : channels) {
    for (const auto& e : c.events) out.push(static_cast<std::uint32_t>(e.neuron + offset), e.t);
    offset += c.neurons;
  }
  std::stable_sort(out.events.begin(), out.events.end(), [](const SpikeEvent& a, const SpikeEvent& b) {
    return a.t != b.t ? a.t < b.t : a.neuron < b.neuron;
  });
  return out;
}

struct BeatTrace {
  std::vector<SpikeTrain> encoder;
  std::vector<SpikeTrain> gaussian;
  SpikeTrain stdp;  // all channels, channel-major
  ClassifierOutput classifier;
  std::vector<LayerActivity> layers;
};

/// Inference-mode pass of a beat through the frozen network.
inline BeatTrace forward(const Model& m, const Beat& beat, std::uint64_t stage_id, std::uint64_t epoch,
                         std::uint64_t beat_index) {
  const RunConfig& cfg = m.config;
  BeatTrace tr;
  tr.encoder = encode_beat(cfg, beat, stage_id, epoch, beat_index);
  std::vector<SpikeTrain> stdp_out;
  for (std::size_t c = 0; c < cfg.channels(); ++c) {
    tr.gaussian.push_back(run_gain_layer(m.gaussian.gains(c), tr.encoder[c], cfg.lif_gaussian));
    StdpChannel ch = m.stdp[c];
    stdp_out.push_back(run_stdp_channel(tr.gaussian.back(), ch, cfg.lif_stdp, cfg.stdp, cfg.inhib,
                                        StdpMode::kInfer));
  }
  tr.stdp = concat_channels(stdp_out);
  tr.classifier = run_classifier(tr.stdp, m.classifier, cfg.lif_classifier);

  std::uint64_t enc = 0, gau = 0;
  for (const auto& t : tr.encoder) enc += t.size();
  for (const auto& t : tr.gaussian) gau += t.size();
  tr.layers = {
      {"encoder", enc, 1},
      {"gaussian", gau, cfg.stdp.neurons_per_window},
      {"stdp", tr.stdp.size(), m.classifier.num_classes()},
      {"classifier", tr.classifier.spikes.size(), 0},
  };
  return tr;
}

struct InferResult {
  std::size_t predicted = 0;
  std::string label;
  EnergyReport energy;
  std::vector<LayerActivity> layers;
  std::vector<std::uint32_t> class_counts;
};

/// Classifies one beat. The encoder stream is keyed by `beat_index`, so the
/// same beat and index always give the same spikes.
inline InferResult infer_beat(const Model& m, const Beat& beat, std::uint64_t beat_index = 0) {
  BeatTrace tr = forward(m, beat, stage::kEncodeInfer, 0, beat_index);
  InferResult r;
  r.predicted = tr.classifier.winner;
  r.label = m.classifier.classes[r.predicted];
  r.energy = total_energy(tr.layers);
  r.layers = std::move(tr.layers);
  r.class_counts = tr.classifier.counts;
  return r;
}

// ---------------------------------------------------------------------------
// Training

struct StageLog {
  std::string stage;
  int epoch = 0;
  std::vector<std::pair<std::string, double>> values;
};

struct TrainLog {
  GaussianReport gaussian;
  std::vector<StageLog> entries;
  std::function<void(const StageLog&)> sink;  // optional live reporting

  void add(StageLog e) {
    if (sink) sink(e);
    entries.push_back(std::move(e));
  }
};

inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t stage_id, int epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed, {stage::kShuffle, stage_id, static_cast<std::uint64_t>(epoch)});
  shuffle(order.begin(), order.end(), rng);
  return order;
}

inline void train_gaussian_stage(Model& m, std::span<const Beat> beats, TrainLog& log) {
  const RunConfig& cfg = m.config;
  const std::size_t n_ch = cfg.channels();
  auto measure = [&](const GaussianLayer& layer, int epoch) {
    std::vector<std::vector<std::uint64_t>> counts(beats.size(), std::vector<std::uint64_t>(n_ch, 0));
    std::vector<std::vector<double>> gains(n_ch);
    for (std::size_t c = 0; c < n_ch; ++c) gains[c] = layer.gains(c);
    parallel_for(beats.size(), cfg.threads, [&](std::size_t b) {
      const auto enc = encode_beat(cfg, beats[b], stage::kEncodeGaussian, static_cast<std::uint64_t>(epoch), b);
      for (std::size_t c = 0; c < n_ch; ++c) counts[b][c] = run_gain_layer(gains[c], enc[c], cfg.lif_gaussian).size();
    });
    std::vector<double> rates(n_ch, 0.0);
    for (std::size_t c = 0; c < n_ch; ++c) {
      std::uint64_t total = 0;
      for (std::size_t b = 0; b < beats.size(); ++b) total += counts[b][c];
      rates[c] = static_cast<double>(total) / static_cast<double>(layer.window_len() * beats.size());
    }
    StageLog e{"gaussian", epoch, {}};
    for (std::size_t c = 0; c < n_ch; ++c) {
      e.values.emplace_back("rate" + std::to_string(c + 1), rates[c]);
      e.values.emplace_back("beta" + std::to_string(c + 1), layer.beta[c]);
    }
    log.add(std::move(e));
    return rates;
  };
  log.gaussian = train_gaussian(m.gaussian, cfg.gaussian, measure);
  m.provenance.gaussian_epochs = log.gaussian.epochs;
  m.provenance.gaussian_converged = log.gaussian.converged;
  if (!log.gaussian.converged && cfg.gaussian.max_epochs > 0) {
    m.provenance.warnings.push_back("gaussian layer did not converge within " +
                                    std::to_string(cfg.gaussian.max_epochs) + " epochs (max |1-R/R_target| = " +
                                    config_detail::fmt(log.gaussian.max_relative_error(cfg.gaussian.r_target)) + ")");
  }
}

struct StdpEpochStats {
  std::vector<StdpRunStats> per_channel;
  std::uint64_t encoder_spikes = 0;
  std::uint64_t gaussian_spikes = 0;
};

/// One pass of STDP + inhibitory training over the beats. Windows train
/// independently and in parallel; beats are visited in `order`.
inline StdpEpochStats train_stdp_epoch(Model& m, std::span<const Beat> beats, std::span<const std::size_t> order,
                                       int epoch) {
  const RunConfig& cfg = m.config;
  for (std::size_t c = 0; c < cfg.channels(); ++c) {
    Rng rng(cfg.seed, {stage::kDropout, static_cast<std::uint64_t>(epoch), c});
    draw_dropout(m.stdp[c], cfg.inhib.dropout_p, rng);
  }
  StdpEpochStats st;
  st.per_channel.resize(cfg.channels());
  std::vector<std::uint64_t> enc_spikes(cfg.windows, 0), gau_spikes(cfg.windows, 0);
  std::vector<std::vector<double>> gains(cfg.channels());
  for (std::size_t c = 0; c < cfg.channels(); ++c) gains[c] = m.gaussian.gains(c);
  parallel_for(cfg.windows, cfg.threads, [&](std::size_t q) {
    for (std::size_t b : order) {
      const auto windows = split_windows(beats[b], cfg.windows);
      const auto enc = encode_beat_window(cfg, windows[q], stage::kEncodeStdp, static_cast<std::uint64_t>(epoch), b);
      for (std::size_t pol = 0; pol < 2; ++pol) {
        const std::size_t c = 2 * q + pol;
        const SpikeTrain& in = pol == 0 ? enc.positive : enc.negative;
        enc_spikes[q] += in.size();
        const SpikeTrain g = run_gain_layer(gains[c], in, cfg.lif_gaussian);
        gau_spikes[q] += g.size();
        run_stdp_channel(g, m.stdp[c], cfg.lif_stdp, cfg.stdp, cfg.inhib, StdpMode::kTrain, &st.per_channel[c]);
      }
    }
  });
  for (std::size_t q = 0; q < cfg.windows; ++q) {
    st.encoder_spikes += enc_spikes[q];
    st.gaussian_spikes += gau_spikes[q];
  }
  return st;
}

inline void train_stdp_stage(Model& m, std::span<const Beat> beats, TrainLog& log) {
  const RunConfig& cfg = m.config;
  const std::size_t n = cfg.stdp.neurons_per_window;
  for (int epoch = 0; epoch < cfg.stdp_epochs; ++epoch) {
    const auto order = epoch_order(beats.size(), cfg.seed, stage::kEncodeStdp, epoch);
    const auto st = train_stdp_epoch(m, beats, order, epoch);
    std::uint64_t spikes = 0, inhib = 0;
    double w_sum = 0.0, wi_sum = 0.0;
    std::size_t w_n = 0, wi_n = 0;
    for (std::size_t c = 0; c < cfg.channels(); ++c) {
      spikes += st.per_channel[c].spikes;
      inhib += st.per_channel[c].inhib_spikes;
      for (double v : m.stdp[c].w.data) w_sum += v;
      w_n += m.stdp[c].w.data.size();
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          if (a != b) {
            wi_sum += m.stdp[c].w_inhib(a, b);
            ++wi_n;
          }
    }
    // Training-time energy also counts the twin synapse and the inhibitory fan-out.
    const std::vector<LayerActivity> layers{{"encoder", st.encoder_spikes, 1},
                                            {"gaussian", st.gaussian_spikes, n},
                                            {"stdp", spikes, 1},
                                            {"inhibitory", inhib, n - 1}};
    const auto energy = total_energy(layers);
    log.add({"stdp",
             epoch,
             {{"spikes_per_beat", static_cast<double>(spikes) / static_cast<double>(beats.size())},
              {"mean_w", w_n ? w_sum / static_cast<double>(w_n) : 0.0},
              {"mean_w_inhib", wi_n ? wi_sum / static_cast<double>(wi_n) : 0.0},
              {"energy_uj_per_beat", energy.energy_pj * 1e-6 / static_cast<double>(beats.size())}}});
  }
  m.provenance.stdp_epochs = cfg.stdp_epochs;
}

inline void train_rstdp_stage(Model& m, std::span<const Beat> beats, TrainLog& log) {
  const RunConfig& cfg = m.config;
  std::vector<std::size_t> labels(beats.size());
  for (std::size_t b = 0; b < beats.size(); ++b) {
    const auto c = cfg.classes.index_of(beats[b].label.value_or(""));
    if (!c) throw DataError("beat " + std::to_string(b) + " of record '" + beats[b].record_id +
                            "' has unknown label '" + beats[b].label.value_or("") + "'");
    labels[b] = *c;
  }
  for (int epoch = 0; epoch < cfg.rstdp_epochs; ++epoch) {
    // Upstream layers are frozen, so their spikes can be produced in parallel.
    std::vector<SpikeTrain> features(beats.size());
    parallel_for(beats.size(), cfg.threads, [&](std::size_t b) {
      const auto enc = encode_beat(cfg, beats[b], stage::kEncodeRstdp, static_cast<std::uint64_t>(epoch), b);
      std::vector<SpikeTrain> out;
      for (std::size_t c = 0; c < cfg.channels(); ++c) {
        const SpikeTrain g = run_gain_layer(m.gaussian.gains(c), enc[c], cfg.lif_gaussian);
        StdpChannel ch = m.stdp[c];
        out.push_back(run_stdp_channel(g, ch, cfg.lif_stdp, cfg.stdp, cfg.inhib, StdpMode::kInfer));
      }
      features[b] = concat_channels(out);
    });
    std::size_t correct = 0;
    for (std::size_t b : epoch_order(beats.size(), cfg.seed, stage::kEncodeRstdp, epoch)) {
      const ClassifierOutput out = run_classifier(features[b], m.classifier, cfg.lif_classifier);
      const bool ok = out.winner == labels[b];
      correct += ok;
      apply_rstdp(m.classifier, features[b], out, ok, cfg.rstdp);
    }
    double psi_mean = 0.0;
    for (double v : m.classifier.psi.data) psi_mean += v;
    psi_mean /= static_cast<double>(std::max<std::size_t>(1, m.classifier.psi.data.size()));
    log.add({"rstdp", epoch,
             {{"train_accuracy", static_cast<double>(correct) / static_cast<double>(beats.size())},
              {"mean_psi", psi_mean}}});
  }
  m.provenance.rstdp_epochs = cfg.rstdp_epochs;
}

/// Trains every stage in order: gains, STDP + inhibition, classifier.
inline Model train_full(std::span<const Beat> beats, const RunConfig& cfg, TrainLog* log = nullptr) {
  if (beats.empty()) throw EmptyData("no training beats");
  TrainLog local;
  TrainLog& lg = log ? *log : local;
  Model m = init_model(cfg);
  for (const auto& b : beats) check_beat(cfg, b);
  m.provenance.dataset_digest = dataset_digest(beats);
  m.provenance.train_beats = beats.size();
  train_gaussian_stage(m, beats, lg);
  train_stdp_stage(m, beats, lg);
  train_rstdp_stage(m, beats, lg);
  for (auto& ch : m.stdp) std::fill(ch.active.begin(), ch.active.end(), 1);
  return m;
}

// ---------------------------------------------------------------------------
// Evaluation

struct BeatOutcome {
  std::string record_id;
  std::size_t r_peak = 0;
  std::size_t truth = 0;
  std::size_t predicted = 0;
  EnergyReport energy;
  std::vector<LayerActivity> layers;
  double wall_ms = 0.0;
};

struct RecordScore {
  std::size_t beats = 0;
  std::size_t correct = 0;
  double accuracy() const { return beats ? static_cast<double>(correct) / static_cast<double>(beats) : 0.0; }
};

struct Metrics {
  std::vector<std::string> classes;
  std::size_t beats = 0;
  std::size_t correct = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  EnergyReport energy;                               // summed over beats
  double total_wall_ms = 0.0;
  std::map<std::string, RecordScore> per_record;
  std::vector<BeatOutcome> outcomes;

  double accuracy() const { return beats ? static_cast<double>(correct) / static_cast<double>(beats) : 0.0; }
  double mean_energy_uj() const { return beats ? energy.energy_pj * 1e-6 / static_cast<double>(beats) : 0.0; }
  double mean_wall_ms() const { return beats ? total_wall_ms / static_cast<double>(beats) : 0.0; }
};

/// Classifies every beat (in parallel) and aggregates in beat order.
inline Metrics evaluate(const Model& m, std::span<const Beat> beats, std::size_t threads = 1) {
  if (beats.empty()) throw EmptyData("no test beats");
  const std::size_t k = m.classifier.num_classes();
  Metrics mt;
  mt.classes = m.classifier.classes;
  mt.confusion.assign(k, std::vector<std::size_t>(k, 0));
  mt.outcomes.resize(beats.size());
  parallel_for(beats.size(), threads, [&](std::size_t b) {
    const auto truth = m.config.classes.index_of(beats[b].label.value_or(""));
    if (!truth) throw DataError("test beat " + std::to_string(b) + " has unknown label '" +
                                beats[b].label.value_or("") + "'");
    const auto t0 = std::chrono::steady_clock::now();
    InferResult r = infer_beat(m, beats[b], b);
    const auto t1 = std::chrono::steady_clock::now();
    BeatOutcome& o = mt.outcomes[b];
    o.record_id = beats[b].record_id;
    o.r_peak = beats[b].r_peak;
    o.truth = *truth;
    o.predicted = r.predicted;
    o.energy = r.energy;
    o.layers = std::move(r.layers);
    o.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  });
  for (const auto& o : mt.outcomes) {
    ++mt.beats;
    mt.correct += o.truth == o.predicted;
    ++mt.confusion[o.truth][o.predicted];
    mt.energy += o.energy;
    mt.total_wall_ms += o.wall_ms;
    auto& rs = mt.per_record[o.record_id];
    ++rs.beats;
    rs.correct += o.truth == o.predicted;
  }
  return mt;
}

}  // namespace snnecg
