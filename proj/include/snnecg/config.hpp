#pragma once

// Run configuration: one INI-style file with a section per module.
//
//   [encoder]
//   windows = 4
//   r_base = 0.1
//
// Every key is validated on load and unknown keys are rejected. Command-line
// overrides use the same names, `section.key=value`, and are applied after
// the file. `to_text()` emits every key in a fixed order; that text is what a
// saved model embeds, so it fully determines the network topology.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "snnecg/core.hpp"
#include "snnecg/data.hpp"
#include "snnecg/encoder.hpp"
#include "snnecg/errors.hpp"
#include "snnecg/gaussian.hpp"
#include "snnecg/rstdp.hpp"
#include "snnecg/stdp.hpp"

namespace snnecg {

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  // data
  double fs = 360.0;
  std::string data_dir;

  // encoder
  std::size_t windows = 4;  // Q
  EncoderParams encoder;
  Normalization normalization = Normalization::kRobust;

  LifParams lif_gaussian{10.0, 0.0, 1.0, 1.0, 1.0};
  LifParams lif_stdp{10.0, 0.0, 1.0, 1.0, 1.0};
  LifParams lif_classifier{10.0, 0.0, 1.0, 1.0, 1.0};

  GaussianParams gaussian;
  StdpParams stdp;
  int stdp_epochs = 3;
  InhibParams inhib;
  RstdpParams rstdp;
  int rstdp_epochs = 20;

  SplitSpec split{SplitMode::kProtocol, SplitSpec::ds1(), SplitSpec::ds2_test(), 150, {}, 300.0};
  ClassMap classes = ClassMap::aami();

  std::size_t channels() const { return 2 * windows; }
  std::size_t window_len() const { return window_length(beat_length(fs), windows); }
  std::size_t stdp_neurons() const { return channels() * stdp.neurons_per_window; }

  void validate() const {
    if (!(fs > 0.0)) throw ConfigError("data.fs must be > 0");
    if (threads < 1) throw ConfigError("run.threads must be >= 1");
    encoder.validate();
    window_offsets(beat_length(fs), windows);
    lif_gaussian.validate("gaussian_lif");
    lif_stdp.validate("stdp_lif");
    lif_classifier.validate("classifier_lif");
    if (lif_gaussian.dt != lif_stdp.dt || lif_stdp.dt != lif_classifier.dt)
      throw ConfigError("all layers must share one dt");
    gaussian.validate();
    stdp.validate();
    inhib.validate();
    rstdp.validate();
    if (stdp_epochs < 0) throw ConfigError("stdp.epochs must be >= 0");
    if (rstdp_epochs < 0) throw ConfigError("rstdp.epochs must be >= 0");
    if (!(split.skip_seconds >= 0.0)) throw ConfigError("split.skip_seconds must be >= 0");
    classes.validate();
  }

  std::string to_text() const;
};

namespace config_detail {

inline std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  double out{};
  const std::string s = trim(v);
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || s.empty())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out{};
  const std::string s = trim(v);
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || s.empty())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

inline std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::string join(const std::vector<std::string>& v, const char* sep = ",") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string& name, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Field real(std::string sec, std::string key, Member m) {
  return {sec, key,
          [m](RunConfig& c, const std::string& n, const std::string& v) { m(c) = to_double(n, v); },
          [m](const RunConfig& c) { return fmt(m(c)); }};
}

template <typename T, typename Member>
Field integer(std::string sec, std::string key, Member m) {
  return {sec, key,
          [m](RunConfig& c, const std::string& n, const std::string& v) {
            m(c) = static_cast<T>(to_uint(n, v));
          },
          [m](const RunConfig& c) { return std::to_string(m(c)); }};
}

inline void add_lif(std::vector<Field>& f, const std::string& sec, LifParams RunConfig::*lp) {
  f.push_back(real(sec, "tau_m", [lp](auto& c) -> auto& { return (c.*lp).tau_m; }));
  f.push_back(real(sec, "u_rest", [lp](auto& c) -> auto& { return (c.*lp).u_rest; }));
  f.push_back(real(sec, "u_th", [lp](auto& c) -> auto& { return (c.*lp).u_th; }));
  f.push_back(real(sec, "alpha", [lp](auto& c) -> auto& { return (c.*lp).alpha; }));
  f.push_back(real(sec, "dt", [lp](auto& c) -> auto& { return (c.*lp).dt; }));
}

inline const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(integer<std::uint64_t>("run", "seed", [](auto& c) -> auto& { return c.seed; }));
    f.push_back(integer<std::size_t>("run", "threads", [](auto& c) -> auto& { return c.threads; }));
    f.push_back(real("data", "fs", [](auto& c) -> auto& { return c.fs; }));
    f.push_back({"data", "dir",
                 [](RunConfig& c, const std::string&, const std::string& v) { c.data_dir = trim(v); },
                 [](const RunConfig& c) { return c.data_dir; }});

    f.push_back(integer<std::size_t>("encoder", "windows", [](auto& c) -> auto& { return c.windows; }));
    f.push_back(real("encoder", "r_base", [](auto& c) -> auto& { return c.encoder.r_base; }));
    f.push_back(real("encoder", "r_scale", [](auto& c) -> auto& { return c.encoder.r_scale; }));
    f.push_back(integer<Step>("encoder", "horizon", [](auto& c) -> auto& { return c.encoder.horizon; }));
    f.push_back({"encoder", "normalization",
                 [](RunConfig& c, const std::string& n, const std::string& v) {
                   const auto s = trim(v);
                   if (s == "robust") c.normalization = Normalization::kRobust;
                   else if (s == "none") c.normalization = Normalization::kNone;
                   else throw ConfigError(n + ": expected robust|none, got '" + v + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.normalization == Normalization::kRobust ? "robust" : "none");
                 }});

    add_lif(f, "gaussian_lif", &RunConfig::lif_gaussian);
    add_lif(f, "stdp_lif", &RunConfig::lif_stdp);
    add_lif(f, "classifier_lif", &RunConfig::lif_classifier);

    f.push_back(real("gaussian", "r_target", [](auto& c) -> auto& { return c.gaussian.r_target; }));
    f.push_back(real("gaussian", "alpha_g", [](auto& c) -> auto& { return c.gaussian.alpha_g; }));
    f.push_back(real("gaussian", "beta_init", [](auto& c) -> auto& { return c.gaussian.beta_init; }));
    f.push_back(real("gaussian", "beta_min", [](auto& c) -> auto& { return c.gaussian.beta_min; }));
    f.push_back(real("gaussian", "epsilon", [](auto& c) -> auto& { return c.gaussian.epsilon; }));
    f.push_back(integer<int>("gaussian", "max_epochs", [](auto& c) -> auto& { return c.gaussian.max_epochs; }));

    f.push_back({"stdp", "rule",
                 [](RunConfig& c, const std::string& n, const std::string& v) {
                   const auto s = trim(v);
                   if (s == "optimized") c.stdp.rule = StdpRule::kOptimized;
                   else if (s == "classic") c.stdp.rule = StdpRule::kClassic;
                   else throw ConfigError(n + ": expected optimized|classic, got '" + v + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.stdp.rule == StdpRule::kOptimized ? "optimized" : "classic");
                 }});
    f.push_back(integer<std::size_t>("stdp", "neurons_per_window",
                                     [](auto& c) -> auto& { return c.stdp.neurons_per_window; }));
    f.push_back(real("stdp", "a_plus", [](auto& c) -> auto& { return c.stdp.a_plus; }));
    f.push_back(real("stdp", "a_minus", [](auto& c) -> auto& { return c.stdp.a_minus; }));
    f.push_back(real("stdp", "tau_stdp", [](auto& c) -> auto& { return c.stdp.tau_stdp; }));
    f.push_back(real("stdp", "gamma_max", [](auto& c) -> auto& { return c.stdp.gamma_max; }));
    f.push_back(real("stdp", "w_max", [](auto& c) -> auto& { return c.stdp.w_max; }));
    f.push_back(real("stdp", "init_lo", [](auto& c) -> auto& { return c.stdp.init_lo; }));
    f.push_back(real("stdp", "init_hi", [](auto& c) -> auto& { return c.stdp.init_hi; }));
    f.push_back(integer<int>("stdp", "epochs", [](auto& c) -> auto& { return c.stdp_epochs; }));

    f.push_back({"inhib", "enabled",
                 [](RunConfig& c, const std::string& n, const std::string& v) { c.inhib.enabled = to_bool(n, v); },
                 [](const RunConfig& c) { return std::string(c.inhib.enabled ? "true" : "false"); }});
    f.push_back(real("inhib", "b_plus", [](auto& c) -> auto& { return c.inhib.b_plus; }));
    f.push_back(real("inhib", "b_minus", [](auto& c) -> auto& { return c.inhib.b_minus; }));
    f.push_back(real("inhib", "lambda", [](auto& c) -> auto& { return c.inhib.lambda; }));
    f.push_back(real("inhib", "dropout_p", [](auto& c) -> auto& { return c.inhib.dropout_p; }));

    f.push_back({"rstdp", "timing",
                 [](RunConfig& c, const std::string& n, const std::string& v) {
                   const auto s = trim(v);
                   if (s == "last") c.rstdp.timing = RstdpTiming::kLast;
                   else if (s == "first") c.rstdp.timing = RstdpTiming::kFirst;
                   else throw ConfigError(n + ": expected last|first, got '" + v + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.rstdp.timing == RstdpTiming::kLast ? "last" : "first");
                 }});
    f.push_back(real("rstdp", "ar_plus", [](auto& c) -> auto& { return c.rstdp.ar_plus; }));
    f.push_back(real("rstdp", "ar_minus", [](auto& c) -> auto& { return c.rstdp.ar_minus; }));
    f.push_back(real("rstdp", "ap_plus", [](auto& c) -> auto& { return c.rstdp.ap_plus; }));
    f.push_back(real("rstdp", "ap_minus", [](auto& c) -> auto& { return c.rstdp.ap_minus; }));
    f.push_back(real("rstdp", "psi_max", [](auto& c) -> auto& { return c.rstdp.psi_max; }));
    f.push_back(real("rstdp", "init_lo", [](auto& c) -> auto& { return c.rstdp.init_lo; }));
    f.push_back(real("rstdp", "init_hi", [](auto& c) -> auto& { return c.rstdp.init_hi; }));
    f.push_back(integer<int>("rstdp", "epochs", [](auto& c) -> auto& { return c.rstdp_epochs; }));

    f.push_back({"split", "mode",
                 [](RunConfig& c, const std::string& n, const std::string& v) {
                   const auto s = trim(v);
                   if (s == "protocol") c.split.mode = SplitMode::kProtocol;
                   else if (s == "holdout") c.split.mode = SplitMode::kHoldout;
                   else throw ConfigError(n + ": expected protocol|holdout, got '" + v + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.split.mode == SplitMode::kProtocol ? "protocol" : "holdout");
                 }});
    f.push_back({"split", "train_records",
                 [](RunConfig& c, const std::string&, const std::string& v) { c.split.train_records = to_list(v); },
                 [](const RunConfig& c) { return join(c.split.train_records); }});
    f.push_back({"split", "test_records",
                 [](RunConfig& c, const std::string&, const std::string& v) { c.split.test_records = to_list(v); },
                 [](const RunConfig& c) { return join(c.split.test_records); }});
    f.push_back(integer<std::size_t>("split", "per_class", [](auto& c) -> auto& { return c.split.per_class; }));
    f.push_back({"split", "class_counts",
                 [](RunConfig& c, const std::string& n, const std::string& v) {
                   c.split.class_counts.clear();
                   for (const auto& item : to_list(v)) {
                     const auto colon = item.find(':');
                     if (colon == std::string::npos) throw ConfigError(n + ": expected class:count, got '" + item + "'");
                     c.split.class_counts.emplace_back(item.substr(0, colon),
                                                       to_uint(n, item.substr(colon + 1)));
                   }
                 },
                 [](const RunConfig& c) {
                   std::vector<std::string> items;
                   for (const auto& [k, n] : c.split.class_counts) items.push_back(k + ":" + std::to_string(n));
                   return join(items);
                 }});
    f.push_back(real("split", "skip_seconds", [](auto& c) -> auto& { return c.split.skip_seconds; }));
    return f;
  }();
  return fields;
}

}  // namespace config_detail

/// Applies one `section.key=value` assignment.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "': expected section.key=value");
  const std::string name = config_detail::trim(assignment.substr(0, eq));
  const std::string value = assignment.substr(eq + 1);
  const auto dot = name.find('.');
  if (dot == std::string::npos) throw ConfigError("override '" + name + "': expected section.key");
  const std::string sec = name.substr(0, dot), key = name.substr(dot + 1);
  if (sec == "classes") {
    auto syms = config_detail::to_list(value);
    for (auto& e : cfg.classes.entries)
      if (e.first == key) {
        e.second = std::move(syms);
        return;
      }
    cfg.classes.entries.emplace_back(key, std::move(syms));
    return;
  }
  for (const auto& f : config_detail::schema()) {
    if (f.section == sec && f.key == key) {
      f.set(cfg, name, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + name + "'");
}

/// Parses INI text. Unknown sections or keys are errors; a [classes] section
/// replaces the default class map in the order written.
inline RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig cfg;
  std::vector<std::string> errors;
  for (const auto& [sec, body] : tree) {
    if (!body.data().empty() && body.empty()) {
      errors.push_back("top-level key '" + sec + "' outside any section");
      continue;
    }
    if (sec == "classes") {
      cfg.classes.entries.clear();
      for (const auto& [name, v] : body)
        cfg.classes.entries.emplace_back(name, config_detail::to_list(v.data()));
      continue;
    }
    for (const auto& [key, v] : body) {
      bool found = false;
      for (const auto& f : config_detail::schema()) {
        if (f.section == sec && f.key == key) {
          try {
            f.set(cfg, sec + "." + key, v.data());
          } catch (const ConfigError& e) {
            errors.push_back(e.what());
          }
          found = true;
          break;
        }
      }
      if (!found) errors.push_back("unknown config key '" + sec + "." + key + "'");
    }
  }
  for (const auto& o : overrides) {
    try {
      apply_override(cfg, o);
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    }
  }
  if (errors.empty()) {
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = config_detail::join(errors, "\n");
    throw ConfigError(msg);
  }
  return cfg;
}

inline std::string RunConfig::to_text() const {
  std::ostringstream out;
  std::string current;
  for (const auto& f : config_detail::schema()) {
    if (f.section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << f.section << "]\n";
      current = f.section;
    }
    out << f.key << " = " << f.get(*this) << '\n';
  }
  out << "\n[classes]\n";
  for (const auto& [name, syms] : classes.entries) out << name << " = " << config_detail::join(syms, " ") << '\n';
  return out.str();
}

}  // namespace snnecg
