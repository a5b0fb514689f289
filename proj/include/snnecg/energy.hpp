#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace snnecg {

/// Energy charged per emitted spike and per synaptic delivery.
inline constexpr double kSpikeEnergyPj = 50.0;
inline constexpr double kSynapticEventPj = 147.0;

struct EnergyReport {
  std::uint64_t spike_count = 0;
  std::uint64_t synaptic_events = 0;
  double energy_pj = 0.0;

  EnergyReport& operator+=(const EnergyReport& o) {
    spike_count += o.spike_count;
    synaptic_events += o.synaptic_events;
    energy_pj += o.energy_pj;
    return *this;
  }

  friend bool operator==(const EnergyReport&, const EnergyReport&) = default;
};

inline EnergyReport tally_energy(std::uint64_t spikes, std::uint64_t events) {
  return {spikes, events,
          kSpikeEnergyPj * static_cast<double>(spikes) + kSynapticEventPj * static_cast<double>(events)};
}

/// Spikes of one layer and the deliveries they cause.
struct LayerActivity {
  std::string layer;
  std::uint64_t spikes = 0;
  std::uint64_t out_degree = 0;

  std::uint64_t events() const { return spikes * out_degree; }
  EnergyReport energy() const { return tally_energy(spikes, events()); }

  friend bool operator==(const LayerActivity&, const LayerActivity&) = default;
};

inline EnergyReport total_energy(const std::vector<LayerActivity>& layers) {
  EnergyReport r;
  for (const auto& l : layers) r += l.energy();
  return r;
}

}  // namespace snnecg
