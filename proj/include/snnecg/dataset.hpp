#pragma once

// Loads the records a config's split refers to and builds the split.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "snnecg/config.hpp"
#include "snnecg/data.hpp"
#include "snnecg/errors.hpp"
#include "snnecg/parallel.hpp"

namespace snnecg {

struct Dataset {
  std::map<std::string, std::vector<Beat>> beats;  // by record id
  std::vector<Diagnostic> diagnostics;
  Split split;
};

/// Reads `ids` from the config's data directory, normalizes and segments them.
/// A missing directory or record file is a configuration error.
inline std::map<std::string, std::vector<Beat>> load_beats(const RunConfig& cfg, const std::vector<std::string>& ids,
                                                           std::vector<Diagnostic>* diag = nullptr) {
  namespace fs = std::filesystem;
  if (cfg.data_dir.empty()) throw ConfigError("data.dir is not set");
  if (!fs::is_directory(cfg.data_dir)) throw ConfigError("data.dir '" + cfg.data_dir + "' is not a directory");
  for (const auto& id : ids) {
    for (const auto& p : {signal_path(cfg.data_dir, id), annotation_path(cfg.data_dir, id)})
      if (!fs::is_regular_file(p)) throw ConfigError("record " + id + ": missing file " + p.string());
  }
  std::vector<std::vector<Beat>> out(ids.size());
  std::vector<std::vector<Diagnostic>> diags(ids.size());
  parallel_for(ids.size(), cfg.threads, [&](std::size_t k) {
    const ECGRecord rec =
        load_record(signal_path(cfg.data_dir, ids[k]), annotation_path(cfg.data_dir, ids[k]), cfg.fs, ids[k]);
    out[k] = extract_beats(rec, cfg.classes, cfg.normalization, &diags[k]);
  });
  std::map<std::string, std::vector<Beat>> beats;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    beats[ids[k]] = std::move(out[k]);
    if (diag) diag->insert(diag->end(), diags[k].begin(), diags[k].end());
  }
  return beats;
}

inline Dataset load_dataset(const RunConfig& cfg) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto* list : {&cfg.split.train_records, &cfg.split.test_records})
    for (const auto& id : *list)
      if (seen.insert(id).second) ids.push_back(id);
  Dataset d;
  d.beats = load_beats(cfg, ids, &d.diagnostics);
  d.split = make_split(d.beats, cfg.split, cfg.classes, cfg.seed);
  return d;
}

}  // namespace snnecg
