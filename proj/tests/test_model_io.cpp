#include <gtest/gtest.h>

#include <filesystem>

#include "snnecg/model_io.hpp"

using namespace snnecg;

namespace {

Model sample_model() {
  RunConfig cfg = parse_config("[classes]\nN = N\nV = V\n", {"stdp.neurons_per_window=2", "encoder.windows=2"});
  Model m = init_model(cfg);
  m.gaussian.beta = {3.5, 7.25, 1.0, 2.0};
  m.stdp[1].w_inhib(0, 1) = -0.75;
  m.provenance.dataset_digest = 1234;
  m.provenance.warnings = {"gaussian layer did not converge"};
  return m;
}

}  // namespace

TEST(ModelIo, RoundTripIsExact) {
  const Model m = sample_model();
  const std::string buf = serialize_model(m);
  const Model back = deserialize_model(buf);
  EXPECT_EQ(serialize_model(back), buf);
  EXPECT_EQ(back.gaussian.beta, m.gaussian.beta);
  EXPECT_EQ(back.stdp[1].w_inhib(0, 1), -0.75);
  EXPECT_EQ(back.classifier.psi, m.classifier.psi);
  EXPECT_EQ(back.provenance.dataset_digest, 1234u);
  EXPECT_EQ(back.provenance.warnings, m.provenance.warnings);
  EXPECT_EQ(back.config.to_text(), m.config.to_text());
}

TEST(ModelIo, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "snnecg_model_io_test.snn";
  const Model m = sample_model();
  save_model(m, path.string());
  EXPECT_EQ(serialize_model(load_model(path.string())), serialize_model(m));
  std::filesystem::remove(path);
}

TEST(ModelIo, CorruptionIsModelMismatch) {
  const std::string buf = serialize_model(sample_model());
  std::string bad = buf;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_model(bad), ModelMismatch);
  bad = buf;
  bad[8] = 2;  // version
  EXPECT_THROW(deserialize_model(bad), ModelMismatch);
  EXPECT_THROW(deserialize_model(buf.substr(0, buf.size() - 3)), ModelMismatch);
  EXPECT_THROW(deserialize_model(buf + "x"), ModelMismatch);
}

TEST(ModelIo, ConfigAndTensorsMustAgree) {
  // Swap in a config with more STDP neurons; the stored tensors no longer fit.
  const Model m = sample_model();
  Model other = m;
  other.config.stdp.neurons_per_window = 3;
  const std::string buf = serialize_model(m);
  const std::string wrong_cfg = other.config.to_text();
  std::string tampered(buf.substr(0, 12));
  for (int i = 0; i < 8; ++i) tampered.push_back(static_cast<char>((wrong_cfg.size() >> (8 * i)) & 0xff));
  tampered += wrong_cfg;
  const std::size_t old_len = m.config.to_text().size();
  tampered += buf.substr(12 + 8 + old_len);
  EXPECT_THROW(deserialize_model(tampered), ModelMismatch);
}

TEST(ModelIo, TopologyCheck) {
  const Model m = sample_model();
  RunConfig same = m.config;
  same.seed = 99;
  same.threads = 3;
  EXPECT_NO_THROW(check_topology(m, same));
  RunConfig fewer = m.config;
  fewer.stdp.neurons_per_window = 5;
  EXPECT_THROW(check_topology(m, fewer), ModelMismatch);
  RunConfig classes = m.config;
  classes.classes = ClassMap::aami();
  EXPECT_THROW(check_topology(m, classes), ModelMismatch);
  RunConfig rate = m.config;
  rate.fs = 250.0;
  EXPECT_THROW(check_topology(m, rate), ModelMismatch);
}
