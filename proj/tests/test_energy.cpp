#include <gtest/gtest.h>

#include "snnecg/energy.hpp"

using namespace snnecg;

TEST(Energy, Constants) {
  EXPECT_EQ(tally_energy(1, 0).energy_pj, 50.0);
  EXPECT_EQ(tally_energy(0, 1).energy_pj, 147.0);
  EXPECT_EQ(tally_energy(100, 1000).energy_pj, 152000.0);
}

TEST(Energy, LayersSum) {
  const std::vector<LayerActivity> layers{{"encoder", 10, 1}, {"gaussian", 4, 3}, {"classifier", 2, 0}};
  const auto r = total_energy(layers);
  EXPECT_EQ(r.spike_count, 16u);
  EXPECT_EQ(r.synaptic_events, 22u);
  EXPECT_EQ(r.energy_pj, 50.0 * 16 + 147.0 * 22);
}
