// snnecg: train, evaluate, generate synthetic records, re-tally energy.
//
// Exit codes: 0 ok, 1 other failure, 2 config error, 3 model mismatch,
// 4 empty data.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "snnecg/dataset.hpp"
#include "snnecg/model_io.hpp"
#include "snnecg/pipeline.hpp"

namespace {

using namespace snnecg;
using json = nlohmann::ordered_json;

constexpr double kReferenceEnergyUj = 1.78;

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Leftover `--section.key=value` arguments become config overrides.
std::vector<std::string> overrides_from(const std::vector<std::string>& extras) {
  std::vector<std::string> out;
  for (const auto& a : extras) {
    if (a.rfind("--", 0) != 0 || a.find('=') == std::string::npos || a.find('.') == std::string::npos)
      throw ConfigError("unrecognized argument '" + a + "' (overrides look like --section.key=value)");
    out.push_back(a.substr(2));
  }
  return out;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& extras) {
  return parse_config(path.empty() ? std::string() : read_file(path), overrides_from(extras));
}

std::string fmt(double v) { return config_detail::fmt(v); }

void emit(std::ostream& out, const StageLog& e) {
  out << "stage=" << e.stage << " epoch=" << e.epoch;
  for (const auto& [k, v] : e.values) out << ' ' << k << '=' << fmt(v);
  out << '\n';
}

int cmd_train(const std::string& config_path, const std::string& model_path, const std::string& log_path,
              const std::vector<std::string>& extras) {
  const RunConfig cfg = load_config(config_path, extras);
  const Dataset data = load_dataset(cfg);
  for (const auto& d : data.diagnostics)
    std::cerr << "warning: record " << d.record_id << " sample " << d.index << ": " << d.message << '\n';

  std::ofstream log_file;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw ConfigError("cannot write log file '" + log_path + "'");
  }
  TrainLog log;
  log.sink = [&](const StageLog& e) {
    emit(std::cout, e);
    if (log_file) emit(log_file, e);
  };
  std::cout << "train_beats=" << data.split.train.size() << '\n';
  const auto t0 = std::chrono::steady_clock::now();
  const Model m = train_full(data.split.train, cfg, &log);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream tail;
  tail << "stage=gaussian converged=" << (m.provenance.gaussian_converged ? "true" : "false")
       << " epochs=" << m.provenance.gaussian_epochs
       << " max_rel_error=" << fmt(log.gaussian.max_relative_error(cfg.gaussian.r_target)) << '\n';
  for (const auto& w : m.provenance.warnings) tail << "warning=" << w << '\n';
  tail << "train_seconds=" << fmt(secs) << '\n';
  std::cout << tail.str();
  if (log_file) log_file << tail.str();

  save_model(m, model_path);
  std::cout << "model=" << model_path << '\n';
  return 0;
}

json metrics_json(const Metrics& mt, const Model& m) {
  json j;
  j["beats"] = mt.beats;
  j["correct"] = mt.correct;
  j["accuracy"] = mt.accuracy();
  j["classes"] = mt.classes;
  j["confusion"] = mt.confusion;
  j["energy"] = {{"spikes", mt.energy.spike_count},
                 {"synaptic_events", mt.energy.synaptic_events},
                 {"energy_pj", mt.energy.energy_pj},
                 {"mean_energy_uj_per_beat", mt.mean_energy_uj()},
                 {"reference_uj_per_beat", kReferenceEnergyUj}};
  json rec = json::object();
  for (const auto& [id, s] : mt.per_record) rec[id] = {{"beats", s.beats}, {"correct", s.correct}, {"accuracy", s.accuracy()}};
  j["per_record"] = rec;
  j["timing"] = {{"mean_wall_ms_per_beat", mt.mean_wall_ms()}, {"total_wall_ms", mt.total_wall_ms}};
  j["model"] = {{"seed", m.provenance.seed},
                {"dataset_digest", m.provenance.dataset_digest},
                {"train_beats", m.provenance.train_beats},
                {"gaussian_converged", m.provenance.gaussian_converged},
                {"warnings", m.provenance.warnings}};
  return j;
}

int cmd_eval(const std::string& model_path, const std::string& config_path, const std::string& summary_path,
             const std::string& beats_path, const std::vector<std::string>& extras) {
  const Model m = load_model(model_path);
  // Without a config file the model's own config (and split) is used.
  const RunConfig cfg = config_path.empty() ? parse_config(m.config.to_text(), overrides_from(extras))
                                            : load_config(config_path, extras);
  check_topology(m, cfg);
  const Dataset data = load_dataset(cfg);
  const Metrics mt = evaluate(m, data.split.test, cfg.threads);

  std::cout << "beats=" << mt.beats << '\n';
  std::cout << "correct=" << mt.correct << '\n';
  std::cout << "accuracy=" << fmt(mt.accuracy()) << '\n';
  for (std::size_t t = 0; t < mt.classes.size(); ++t) {
    std::cout << "confusion." << mt.classes[t] << '=';
    for (std::size_t p = 0; p < mt.classes.size(); ++p) std::cout << (p ? "," : "") << mt.confusion[t][p];
    std::cout << '\n';
  }
  for (const auto& [id, s] : mt.per_record)
    std::cout << "record." << id << ".accuracy=" << fmt(s.accuracy()) << " beats=" << s.beats << '\n';
  std::cout << "spikes=" << mt.energy.spike_count << '\n';
  std::cout << "synaptic_events=" << mt.energy.synaptic_events << '\n';
  std::cout << "mean_energy_uj=" << fmt(mt.mean_energy_uj()) << '\n';
  std::cout << "reference_energy_uj=" << fmt(kReferenceEnergyUj) << '\n';
  std::cout << "mean_wall_ms=" << fmt(mt.mean_wall_ms()) << '\n';

  if (!summary_path.empty()) {
    std::ofstream f(summary_path);
    if (!f) throw ConfigError("cannot write summary file '" + summary_path + "'");
    f << std::setw(2) << metrics_json(mt, m) << '\n';
  }
  if (!beats_path.empty()) {
    std::ofstream f(beats_path);
    if (!f) throw ConfigError("cannot write beat log '" + beats_path + "'");
    for (std::size_t b = 0; b < mt.outcomes.size(); ++b) {
      const auto& o = mt.outcomes[b];
      for (const auto& l : o.layers)
        f << "beat=" << b << " record=" << o.record_id << " layer=" << l.layer << " spikes=" << l.spikes
          << " out_degree=" << l.out_degree << '\n';
    }
  }
  return 0;
}

int cmd_synth(const std::string& cls, std::size_t beats, double fs, std::uint64_t seed, const std::string& out_dir,
              std::string id) {
  synth_class(cls);  // rejects unknown names before touching the filesystem
  if (id.empty()) id = cls;
  std::filesystem::create_directories(out_dir);
  Rng rng(seed, {stage::kSynth});
  const ECGRecord rec = [&] {
    ECGRecord r = synth_ecg(cls, beats, fs, rng);
    r.record_id = id;
    return r;
  }();
  write_record(rec, signal_path(out_dir, id), annotation_path(out_dir, id));
  std::cout << "record=" << id << " samples=" << rec.samples.size() << " beats=" << rec.annotations.size() << '\n';
  return 0;
}

// Parses the beat log written by `eval --beats` and tallies it again.
int cmd_energy(const std::string& log_path) {
  std::ifstream f(log_path);
  if (!f) throw ConfigError("cannot read beat log '" + log_path + "'");
  EnergyReport total;
  std::set<std::string> beats;
  std::map<std::string, EnergyReport> by_layer;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(f, line)) {
    ++ln;
    if (line.empty()) continue;
    std::map<std::string, std::string> kv;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw DataError(log_path + ":" + std::to_string(ln) + ": bad field '" + tok + "'");
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    for (const char* k : {"beat", "layer", "spikes", "out_degree"})
      if (!kv.count(k)) throw DataError(log_path + ":" + std::to_string(ln) + ": missing " + k);
    LayerActivity a{kv["layer"], std::stoull(kv["spikes"]), std::stoull(kv["out_degree"])};
    total += a.energy();
    by_layer[a.layer] += a.energy();
    beats.insert(kv["beat"]);
  }
  if (beats.empty()) throw EmptyData("beat log '" + log_path + "' has no entries");
  for (const auto& [layer, e] : by_layer)
    std::cout << "layer." << layer << ".spikes=" << e.spike_count << " layer." << layer
              << ".events=" << e.synaptic_events << " layer." << layer << ".energy_pj=" << fmt(e.energy_pj)
              << '\n';
  std::cout << "beats=" << beats.size() << '\n';
  std::cout << "spikes=" << total.spike_count << '\n';
  std::cout << "synaptic_events=" << total.synaptic_events << '\n';
  std::cout << "energy_pj=" << fmt(total.energy_pj) << '\n';
  std::cout << "mean_energy_uj=" << fmt(total.energy_pj * 1e-6 / static_cast<double>(beats.size())) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking-network ECG beat classifier"};
  app.require_subcommand(1);

  std::string config_path, model_path = "model.snn", log_path, summary_path, beats_path, out_dir = ".", id;
  std::string cls;
  std::size_t n_beats = 10;
  double fs = 360.0;
  std::uint64_t seed = 1;

  auto* train = app.add_subcommand("train", "train a model from a config");
  train->add_option("-c,--config", config_path, "config file")->required();
  train->add_option("-m,--model", model_path, "output model file");
  train->add_option("--log", log_path, "training log file");
  train->allow_extras();

  auto* eval = app.add_subcommand("eval", "evaluate a model on the config's test split");
  eval->add_option("-m,--model", model_path, "model file")->required();
  eval->add_option("-c,--config", config_path, "config file (default: the model's own)");
  eval->add_option("--summary", summary_path, "JSON summary output");
  eval->add_option("--beats", beats_path, "per-beat spike-count log output");
  eval->allow_extras();

  auto* synth = app.add_subcommand("synth", "write a synthetic record");
  synth->add_option("--class", cls, "normal | wide-qrs | inverted-qrs | fusion")->required();
  synth->add_option("-n,--beats", n_beats, "number of beats");
  synth->add_option("--fs", fs, "sampling rate (Hz)");
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("-o,--out", out_dir, "output directory");
  synth->add_option("--id", id, "record id (default: class name)");

  auto* energy = app.add_subcommand("energy", "re-tally energy from a per-beat log");
  energy->add_option("--log", log_path, "beat log written by eval --beats")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(config_path, model_path, log_path, train->remaining());
    if (*eval) return cmd_eval(model_path, config_path, summary_path, beats_path, eval->remaining());
    if (*synth) return cmd_synth(cls, n_beats, fs, seed, out_dir, id);
    if (*energy) return cmd_energy(log_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ModelMismatch& e) {
    std::cerr << "model mismatch: " << e.what() << '\n';
    return 3;
  } catch (const EmptyData& e) {
    std::cerr << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
