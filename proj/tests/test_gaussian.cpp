#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "snnecg/encoder.hpp"
#include "snnecg/gaussian.hpp"
#include "snnecg/random.hpp"

using namespace snnecg;

TEST(Gains, PeakAtCenter) {
  const auto g = init_gains(126, 2.5);
  // positions are 1-based, mu = 63
  const double peak = 2.5 / (42.0 * std::sqrt(2.0 * std::numbers::pi));
  EXPECT_NEAR(g[62], peak, 1e-12 * peak);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_LE(g[k], g[62]);
}

TEST(Gains, SymmetricAboutCenter) {
  const auto g = init_gains(126, 1.0);
  for (std::size_t d = 1; d < 62; ++d) EXPECT_NEAR(g[62 - d], g[62 + d], 1e-12 * g[62]);
}

TEST(Gains, LinearInBeta) {
  const auto a = init_gains(50, 1.0), b = init_gains(50, 3.0);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(b[k], 3.0 * a[k], 1e-12 * b[k]);
}

TEST(Rate, SilentWindowIsZero) {
  std::vector<SpikeTrain> pass{SpikeTrain(4, 200), SpikeTrain(4, 200)};
  EXPECT_EQ(measure_mean_rate(pass), 0.0);
}

TEST(Rate, OneSpikePerNeuronPerBeat) {
  std::vector<SpikeTrain> pass(3, SpikeTrain(2, 10));
  for (auto& t : pass) t.push(0, 1), t.push(1, 4);
  EXPECT_EQ(measure_mean_rate(pass), 1.0);
}

TEST(Rate, MeanOfKnownCounts) {
  SpikeTrain t(2, 10);
  for (Step s = 0; s < 2; ++s) t.push(0, s);
  for (Step s = 0; s < 4; ++s) t.push(1, s);
  std::vector<SpikeTrain> pass{t};
  EXPECT_EQ(measure_mean_rate(pass), 3.0);
}

TEST(Rate, EmptyPassIsError) {
  std::vector<SpikeTrain> pass;
  EXPECT_THROW(measure_mean_rate(pass), DataError);
}

TEST(Beta, FixedPointAndExtremes) {
  EXPECT_EQ(update_beta(10.0, 10.0, 7.0), 0.0);
  EXPECT_EQ(update_beta(0.0, 10.0, 7.0), 7.0);
  EXPECT_EQ(update_beta(20.0, 10.0, 7.0), -7.0);
}

TEST(Train, AtTargetLeavesBetaUnchanged) {
  GaussianLayer layer(20, 3, 1.7);
  GaussianParams gp;
  gp.r_target = 5.0;
  const auto rep = train_gaussian(layer, gp, [](const GaussianLayer& l, int) {
    return std::vector<double>(l.channels(), 5.0);
  });
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.epochs, 1);
  for (double b : layer.beta) EXPECT_EQ(b, 1.7);
}

TEST(Train, NonConvergenceReturnsBetasAsIs) {
  GaussianLayer layer(20, 1, 1.0);
  GaussianParams gp;
  gp.max_epochs = 3;
  const auto rep = train_gaussian(layer, gp, [](const GaussianLayer&, int) { return std::vector<double>{0.0}; });
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.epochs, 3);
  EXPECT_DOUBLE_EQ(layer.beta[0], 1.0 + 3 * gp.alpha_g);
}

namespace {

// Simulated mean rate of one channel driven by constant-amplitude windows.
double simulate_rate(double beta, double amplitude, std::uint64_t seed, int beats) {
  const std::size_t len = 40;
  const EncoderParams enc{0.05, 0.1, 200};
  const LifParams lif{10.0, 0.0, 1.0, 1.0, 1.0};
  Window w;
  w.samples.assign(len, amplitude);
  const auto g = init_gains(len, beta);
  std::vector<SpikeTrain> pass;
  for (int b = 0; b < beats; ++b) {
    Rng rng(seed, {static_cast<std::uint64_t>(b)});
    pass.push_back(run_gain_layer(g, encode_window(w, enc, rng).positive, lif));
  }
  return measure_mean_rate(pass);
}

}  // namespace

TEST(Train, RateIsMonotoneInBeta) {
  double prev = -1.0;
  for (double beta : {10.0, 30.0, 60.0, 100.0, 200.0}) {
    const double r = simulate_rate(beta, 1.0, 5, 10);
    EXPECT_GE(r, prev);
    prev = r;
  }
}

TEST(Train, AmplitudeRatioIsCompensated) {
  GaussianLayer layer(40, 2, 1.0);
  GaussianParams gp;
  gp.r_target = 6.0;
  gp.alpha_g = 50.0;
  gp.epsilon = 0.1;
  const double amp[2] = {1.0, 2.0};
  const auto rep = train_gaussian(layer, gp, [&](const GaussianLayer& l, int epoch) {
    std::vector<double> r(2);
    for (int c = 0; c < 2; ++c) r[c] = simulate_rate(l.beta[c], amp[c], 100 + epoch, 10);
    return r;
  });
  ASSERT_TRUE(rep.converged) << "epochs " << rep.epochs;
  for (double r : rep.final_rates) EXPECT_LE(std::abs(1.0 - r / gp.r_target), 0.1);
  // the louder channel needs the smaller gain
  EXPECT_LT(layer.beta[1], layer.beta[0]);
  // independent check with fresh spike trains at the trained betas
  for (int c = 0; c < 2; ++c) EXPECT_NEAR(simulate_rate(layer.beta[c], amp[c], 999, 40), gp.r_target, 0.2 * gp.r_target);
}

TEST(GainLayer, EachNeuronSeesOnlyItsCell) {
  SpikeTrain in(3, 20);
  for (Step t = 0; t < 20; ++t) in.push(1, t);
  const std::vector<double> g{100.0, 100.0, 100.0};
  const auto out = run_gain_layer(g, in, LifParams{10.0, 0.0, 1.0, 1.0, 1.0});
  const auto c = out.counts();
  EXPECT_EQ(c[0], 0u);
  EXPECT_EQ(c[1], 19u);
  EXPECT_EQ(c[2], 0u);
}
