#pragma once

// Synthetic beat sets shared by the pipeline tests and the acceptance run.

#include <string>
#include <vector>

#include "snnecg/config.hpp"
#include "snnecg/data.hpp"

namespace snnecg::testing {

inline const char* kThreeClassMap = "[classes]\nN = N\nV = V\nS = A\n";

inline std::vector<std::string> three_classes() { return {"normal", "wide-qrs", "inverted-qrs"}; }

/// `counts[c]` beats of synthetic class `names[c]`, one record per class.
/// `part` separates train from test recordings under the same seed.
inline std::vector<Beat> synthetic_beats(const std::vector<std::string>& names, const std::vector<std::size_t>& counts,
                                         const RunConfig& cfg, std::uint64_t seed, std::uint64_t part) {
  std::vector<Beat> out;
  for (std::size_t c = 0; c < names.size(); ++c) {
    Rng rng(seed, {stage::kSynth, part, c});
    ECGRecord rec = synth_ecg(names[c], counts[c], cfg.fs, rng);
    rec.record_id = names[c] + "-" + std::to_string(part);
    const auto beats = extract_beats(rec, cfg.classes, cfg.normalization);
    out.insert(out.end(), beats.begin(), beats.end());
  }
  return out;
}

}  // namespace snnecg::testing
