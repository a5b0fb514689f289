#include <gtest/gtest.h>

#include <vector>

#include "snnecg/model_io.hpp"
#include "snnecg/pipeline.hpp"
#include "synthetic_set.hpp"

using namespace snnecg;
using snnecg::testing::synthetic_beats;

namespace {

RunConfig small_config(std::vector<std::string> extra = {}) {
  std::vector<std::string> ov{"stdp.neurons_per_window=3", "gaussian.max_epochs=3", "stdp.epochs=1",
                              "rstdp.epochs=2"};
  ov.insert(ov.end(), extra.begin(), extra.end());
  return parse_config(snnecg::testing::kThreeClassMap, ov);
}

std::vector<Beat> small_set(const RunConfig& cfg, std::uint64_t part = 0) {
  return synthetic_beats(snnecg::testing::three_classes(), {4, 4, 4}, cfg, 21, part);
}

}  // namespace

TEST(Pipeline, ZeroEpochsIsIdentity) {
  const RunConfig cfg =
      small_config({"gaussian.max_epochs=0", "stdp.epochs=0", "rstdp.epochs=0"});
  const auto beats = small_set(cfg);
  Model trained = train_full(beats, cfg);
  Model init = init_model(cfg);
  EXPECT_EQ(trained.gaussian.beta, init.gaussian.beta);
  for (std::size_t c = 0; c < init.stdp.size(); ++c) {
    EXPECT_EQ(trained.stdp[c].w, init.stdp[c].w);
    EXPECT_EQ(trained.stdp[c].w_inhib, init.stdp[c].w_inhib);
  }
  EXPECT_EQ(trained.classifier.psi, init.classifier.psi);
}

TEST(Pipeline, SameSeedSameBytesAcrossThreadCounts) {
  const RunConfig one = small_config({"run.threads=1"});
  const RunConfig four = small_config({"run.threads=4"});
  const auto beats = small_set(one);
  const std::string a = serialize_model(train_full(beats, one));
  const std::string b = serialize_model(train_full(beats, one));
  EXPECT_EQ(a, b);
  Model m4 = train_full(beats, four);
  m4.config.threads = 1;  // the thread count is recorded but must not change weights
  EXPECT_EQ(serialize_model(m4), a);
}

TEST(Pipeline, TrainingMovesEveryStage) {
  // Three gain epochs from beta = 1 leave the default STDP layer silent.
  const RunConfig cfg =
      small_config({"encoder.r_base=0.03", "encoder.r_scale=0.1", "gaussian.r_target=4", "stdp_lif.u_th=0.5"});
  const auto beats = small_set(cfg);
  TrainLog log;
  std::vector<std::string> stages;
  log.sink = [&](const StageLog& e) { stages.push_back(e.stage); };
  const Model m = train_full(beats, cfg, &log);
  const Model init = init_model(cfg);
  EXPECT_NE(m.gaussian.beta, init.gaussian.beta);
  EXPECT_NE(m.stdp[0].w, init.stdp[0].w);
  EXPECT_NE(m.classifier.psi, init.classifier.psi);
  EXPECT_EQ(stages.front(), "gaussian");
  EXPECT_EQ(stages.back(), "rstdp");
  EXPECT_EQ(m.provenance.train_beats, beats.size());
  EXPECT_EQ(m.provenance.dataset_digest, dataset_digest(beats));
  for (const auto& ch : m.stdp)
    for (auto a : ch.active) EXPECT_EQ(a, 1);
}

TEST(Pipeline, NonConvergenceBecomesWarning) {
  const RunConfig cfg = small_config({"gaussian.max_epochs=1", "gaussian.epsilon=1e-9"});
  const Model m = train_full(small_set(cfg), cfg);
  EXPECT_FALSE(m.provenance.gaussian_converged);
  ASSERT_EQ(m.provenance.warnings.size(), 1u);
}

TEST(Pipeline, EmptyTrainingSetIsError) {
  const RunConfig cfg = small_config();
  EXPECT_THROW(train_full({}, cfg), EmptyData);
}

TEST(Pipeline, UnknownLabelIsDataError) {
  const RunConfig cfg = small_config();
  auto beats = small_set(cfg);
  beats[1].label = "Z";
  EXPECT_THROW(train_full(beats, cfg), DataError);
}

TEST(Infer, LengthMismatchIsConfigError) {
  const RunConfig cfg = small_config();
  const Model m = init_model(cfg);
  Beat b;
  b.samples.assign(100, 0.0);
  EXPECT_THROW(infer_beat(m, b), ConfigError);
}

TEST(Infer, ZeroBeatStillPredicts) {
  const RunConfig cfg = small_config();
  const Model m = init_model(cfg);
  Beat b;
  b.samples.assign(beat_length(cfg.fs), 0.0);
  const auto r = infer_beat(m, b);
  EXPECT_LT(r.predicted, 3u);
  EXPECT_EQ(r.label, m.classifier.classes[r.predicted]);
}

TEST(Infer, DeterministicEnergyAndLayerTally) {
  const RunConfig cfg = small_config();
  const auto beats = small_set(cfg);
  const Model m = train_full(beats, cfg);
  const auto a = infer_beat(m, beats[0], 5);
  const auto b = infer_beat(m, beats[0], 5);
  EXPECT_EQ(a.energy, b.energy);
  EXPECT_EQ(a.predicted, b.predicted);
  ASSERT_EQ(a.layers.size(), 4u);
  // Independent tally: out-degrees are 1, N, K and 0.
  const std::uint64_t degrees[4] = {1, cfg.stdp.neurons_per_window, 3, 0};
  std::uint64_t spikes = 0, events = 0;
  for (std::size_t l = 0; l < 4; ++l) {
    EXPECT_EQ(a.layers[l].out_degree, degrees[l]);
    spikes += a.layers[l].spikes;
    events += a.layers[l].spikes * degrees[l];
  }
  EXPECT_EQ(a.energy.spike_count, spikes);
  EXPECT_EQ(a.energy.synaptic_events, events);
  EXPECT_EQ(a.energy.energy_pj, 50.0 * static_cast<double>(spikes) + 147.0 * static_cast<double>(events));
  std::uint32_t class_spikes = 0;
  for (auto c : a.class_counts) class_spikes += c;
  EXPECT_EQ(class_spikes, a.layers[3].spikes);
}

TEST(Infer, HorizonGivesThreeHundredBeatsPerMinute) {
  const RunConfig cfg = small_config();
  EXPECT_EQ(cfg.encoder.horizon, 200);
  EXPECT_EQ(60.0 * 1000.0 / (cfg.encoder.horizon * cfg.lif_gaussian.dt), 300.0);
}

TEST(Evaluate, SingleBeatMatchesInfer) {
  const RunConfig cfg = small_config();
  const auto beats = small_set(cfg);
  const Model m = train_full(beats, cfg);
  const std::vector<Beat> one{beats[2]};
  const Metrics mt = evaluate(m, one);
  const auto r = infer_beat(m, beats[2], 0);
  EXPECT_EQ(mt.beats, 1u);
  EXPECT_EQ(mt.energy, r.energy);
  const std::size_t truth = *cfg.classes.index_of(*beats[2].label);
  EXPECT_EQ(mt.correct, r.predicted == truth ? 1u : 0u);
  EXPECT_EQ(mt.confusion[truth][r.predicted], 1u);
  EXPECT_EQ(mt.accuracy(), r.predicted == truth ? 1.0 : 0.0);
}

TEST(Evaluate, ConfusionAndRecordsAreConsistent) {
  const RunConfig cfg = small_config();
  const Model m = train_full(small_set(cfg), cfg);
  const auto test = small_set(cfg, 1);
  const Metrics mt = evaluate(m, test, 3);
  std::size_t total = 0, diag = 0;
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t p = 0; p < 3; ++p) {
      total += mt.confusion[t][p];
      if (t == p) diag += mt.confusion[t][p];
    }
  EXPECT_EQ(total, test.size());
  EXPECT_EQ(diag, mt.correct);
  EXPECT_EQ(mt.per_record.size(), 3u);
  const Metrics serial = evaluate(m, test, 1);
  EXPECT_EQ(serial.correct, mt.correct);
  EXPECT_EQ(serial.energy, mt.energy);
}

TEST(Evaluate, AllCorrectGivesDiagonal) {
  const RunConfig cfg = small_config();
  const auto beats = small_set(cfg);
  const Model m = train_full(beats, cfg);
  std::vector<Beat> relabeled;
  for (std::size_t b = 0; b < beats.size(); ++b) {
    Beat x = beats[b];
    x.label = m.classifier.classes[infer_beat(m, x, relabeled.size()).predicted];
    relabeled.push_back(x);
  }
  const Metrics mt = evaluate(m, relabeled);
  EXPECT_EQ(mt.accuracy(), 1.0);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t p = 0; p < 3; ++p)
      if (t != p) EXPECT_EQ(mt.confusion[t][p], 0u);
}

TEST(Evaluate, EmptyTestSetIsError) {
  const RunConfig cfg = small_config();
  EXPECT_THROW(evaluate(init_model(cfg), {}), EmptyData);
}
