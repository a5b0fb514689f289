#pragma once

// Annotated ECG records: CSV ingestion, synthetic generation, beat extraction
// and train/test splitting.
//
// CSV layout (UTF-8, '\n' line endings, no header, '.' decimal separator):
//   signal:      index,amplitude     (index = 0, 1, 2, ... ; amplitude in mV)
//   annotations: index,label         (label = one symbol, e.g. N, V, A)

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "snnecg/encoder.hpp"
#include "snnecg/errors.hpp"
#include "snnecg/random.hpp"

namespace snnecg {

struct Annotation {
  std::size_t index = 0;
  std::string label;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct ECGRecord {
  std::string record_id;
  double fs = 0.0;
  std::vector<double> samples;
  std::vector<Annotation> annotations;

  void validate() const {
    if (!(fs > 0.0)) throw DataError("record " + record_id + ": fs must be > 0");
    for (std::size_t k = 0; k < annotations.size(); ++k) {
      if (annotations[k].index >= samples.size())
        throw DataError("record " + record_id + ": annotation " + std::to_string(k) + " at " +
                        std::to_string(annotations[k].index) + " is outside the signal");
      if (k > 0 && annotations[k].index <= annotations[k - 1].index)
        throw DataError("record " + record_id + ": annotation indices not strictly increasing at " +
                        std::to_string(k));
    }
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view s, const std::string& where) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError(where + ": cannot parse '" + std::string(s) + "'");
  return v;
}

/// Splits "a,b" into two fields; rejects anything else.
inline std::pair<std::string_view, std::string_view> two_fields(std::string_view line,
                                                                const std::string& where) {
  const auto comma = line.find(',');
  if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
    throw DataError(where + ": expected exactly two comma-separated fields");
  return {line.substr(0, comma), line.substr(comma + 1)};
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace detail

/// Reads a signal CSV and its annotation CSV into a validated record.
inline ECGRecord load_record(const std::filesystem::path& signal_csv,
                             const std::filesystem::path& annotation_csv, double fs,
                             std::string record_id = {}) {
  ECGRecord rec;
  rec.record_id = record_id.empty() ? signal_csv.stem().string() : std::move(record_id);
  rec.fs = fs;
  const auto sig = detail::read_lines(signal_csv);
  rec.samples.reserve(sig.size());
  for (std::size_t ln = 0; ln < sig.size(); ++ln) {
    const std::string where = signal_csv.string() + ":" + std::to_string(ln + 1);
    if (sig[ln].empty() && ln + 1 == sig.size()) break;
    auto [idx, amp] = detail::two_fields(sig[ln], where);
    const auto i = detail::parse_number<std::uint64_t>(idx, where);
    if (i != rec.samples.size())
      throw DataError(where + ": expected sample index " + std::to_string(rec.samples.size()));
    const double a = detail::parse_number<double>(amp, where);
    if (!std::isfinite(a)) throw DataError(where + ": non-finite amplitude");
    rec.samples.push_back(a);
  }
  const auto ann = detail::read_lines(annotation_csv);
  for (std::size_t ln = 0; ln < ann.size(); ++ln) {
    const std::string where = annotation_csv.string() + ":" + std::to_string(ln + 1);
    if (ann[ln].empty() && ln + 1 == ann.size()) break;
    auto [idx, label] = detail::two_fields(ann[ln], where);
    if (label.empty() || label.find_first_of(" \t\r") != std::string_view::npos)
      throw DataError(where + ": label must be a single symbol");
    rec.annotations.push_back({detail::parse_number<std::size_t>(idx, where), std::string(label)});
  }
  rec.validate();
  return rec;
}

inline void write_record(const ECGRecord& rec, const std::filesystem::path& signal_csv,
                         const std::filesystem::path& annotation_csv) {
  std::ofstream sig(signal_csv, std::ios::binary);
  if (!sig) throw DataError("cannot write " + signal_csv.string());
  for (std::size_t i = 0; i < rec.samples.size(); ++i)
    sig << i << ',' << detail::format_double(rec.samples[i]) << '\n';
  std::ofstream ann(annotation_csv, std::ios::binary);
  if (!ann) throw DataError("cannot write " + annotation_csv.string());
  for (const auto& a : rec.annotations) ann << a.index << ',' << a.label << '\n';
  if (!sig || !ann) throw DataError("write failed for record " + rec.record_id);
}

/// File names of a record inside a data directory.
inline std::filesystem::path signal_path(const std::filesystem::path& dir, const std::string& id) {
  return dir / (id + "_signal.csv");
}
inline std::filesystem::path annotation_path(const std::filesystem::path& dir, const std::string& id) {
  return dir / (id + "_ann.csv");
}

// ---------------------------------------------------------------------------
// Class mapping

/// Ordered mapping from annotation symbols to output classes.
struct ClassMap {
  std::vector<std::pair<std::string, std::vector<std::string>>> entries;

  /// AAMI-style grouping of MIT-BIH beat symbols.
  static ClassMap aami() {
    return ClassMap{{{"N", {"N", "L", "R", "e", "j"}},
                     {"S", {"A", "a", "J", "S"}},
                     {"V", {"V", "E"}},
                     {"F", {"F"}},
                     {"Q", {"/", "f", "Q"}}}};
  }

  std::vector<std::string> names() const {
    std::vector<std::string> n;
    for (const auto& e : entries) n.push_back(e.first);
    return n;
  }

  std::optional<std::size_t> class_of(std::string_view symbol) const {
    for (std::size_t c = 0; c < entries.size(); ++c)
      for (const auto& s : entries[c].second)
        if (s == symbol) return c;
    return std::nullopt;
  }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t c = 0; c < entries.size(); ++c)
      if (entries[c].first == name) return c;
    return std::nullopt;
  }

  void validate() const {
    if (entries.empty()) throw ConfigError("classes: at least one class required");
    std::set<std::string> names, symbols;
    for (const auto& [name, syms] : entries) {
      if (!names.insert(name).second) throw ConfigError("classes: duplicate class " + name);
      if (syms.empty()) throw ConfigError("classes: class " + name + " has no symbols");
      for (const auto& s : syms)
        if (!symbols.insert(s).second) throw ConfigError("classes: symbol " + s + " mapped twice");
    }
  }
};

struct Diagnostic {
  std::string record_id;
  std::size_t index = 0;
  std::string message;
};

/// Segments every annotated beat whose symbol maps to a class. Beats too close
/// to either end of the signal are skipped with a truncated-beat diagnostic.
/// `samples` is the (possibly normalized) signal to cut from.
inline std::vector<Beat> extract_beats(const ECGRecord& rec, std::span<const double> samples,
                                       const ClassMap& classes, std::vector<Diagnostic>* diag = nullptr) {
  std::vector<Beat> out;
  for (const auto& a : rec.annotations) {
    const auto cls = classes.class_of(a.label);
    if (!cls) continue;
    try {
      Beat b = segment_beat(samples, a.index, rec.fs);
      b.label = classes.entries[*cls].first;
      b.record_id = rec.record_id;
      out.push_back(std::move(b));
    } catch (const TruncatedBeat& e) {
      if (diag) diag->push_back({rec.record_id, a.index, e.what()});
    }
  }
  return out;
}

inline std::vector<Beat> extract_beats(const ECGRecord& rec, const ClassMap& classes,
                                       Normalization norm, std::vector<Diagnostic>* diag = nullptr) {
  std::vector<double> x = rec.samples;
  normalize_signal(x, norm);
  return extract_beats(rec, x, classes, diag);
}

// ---------------------------------------------------------------------------
// Train/test split

enum class SplitMode {
  kProtocol,  // DS1 class-balanced sample + first minutes of each test record
  kHoldout,   // whole train records vs whole test records
};

struct SplitSpec {
  SplitMode mode = SplitMode::kProtocol;
  std::vector<std::string> train_records;  // DS1 pool (protocol) or train set (holdout)
  std::vector<std::string> test_records;
  std::size_t per_class = 150;  // DS1 beats per class, where available
  // Explicit per-class counts; a class listed here must exist in the pool.
  std::vector<std::pair<std::string, std::size_t>> class_counts;
  double skip_seconds = 300.0;

  /// The 100-series records (representative beats).
  static std::vector<std::string> ds1() {
    return {"100", "101", "102", "103", "104", "105", "106", "107", "108", "109", "111", "112",
            "113", "114", "115", "116", "117", "118", "119", "121", "122", "123", "124"};
  }
  /// The 200-series test records.
  static std::vector<std::string> ds2_test() {
    return {"200", "201", "202", "203", "205", "207", "208", "209", "210", "212", "213", "214",
            "215", "219", "220", "221", "222", "223", "228", "230", "231", "232", "233", "234"};
  }
};

struct Split {
  std::vector<Beat> train;
  std::vector<Beat> test;
};

inline bool same_beat(const Beat& a, const Beat& b) {
  return a.record_id == b.record_id && a.r_peak == b.r_peak;
}

/// Builds train and test beats from already extracted per-record beats.
///
/// In protocol mode a beat of a test record goes to training when its R peak
/// lies strictly before `skip_seconds`, otherwise to test. A record that is
/// both a pool record and a test record only contributes its first minutes to
/// the pool, so no beat is ever on both sides.
inline Split make_split(const std::map<std::string, std::vector<Beat>>& beats_by_record,
                        const SplitSpec& spec, const ClassMap& classes, std::uint64_t seed) {
  auto beats_of = [&](const std::string& id) -> const std::vector<Beat>& {
    auto it = beats_by_record.find(id);
    if (it == beats_by_record.end()) throw DataError("split: record " + id + " not loaded");
    return it->second;
  };
  Split out;
  const std::set<std::string> test_ids(spec.test_records.begin(), spec.test_records.end());

  if (spec.mode == SplitMode::kHoldout) {
    for (const auto& id : spec.train_records) {
      if (test_ids.count(id)) throw ConfigError("split: record " + id + " is both train and test");
      const auto& b = beats_of(id);
      out.train.insert(out.train.end(), b.begin(), b.end());
    }
    for (const auto& id : spec.test_records) {
      const auto& b = beats_of(id);
      out.test.insert(out.test.end(), b.begin(), b.end());
    }
    return out;
  }

  // Pool of DS1 beats per class, excluding anything a test record will use.
  std::vector<std::vector<const Beat*>> pool(classes.entries.size());
  for (const auto& id : spec.train_records) {
    for (const auto& b : beats_of(id)) {
      if (test_ids.count(id)) continue;
      const auto c = classes.index_of(b.label.value_or(""));
      if (c) pool[*c].push_back(&b);
    }
  }
  std::vector<std::size_t> want(classes.entries.size(), spec.per_class);
  if (!spec.class_counts.empty()) {
    std::fill(want.begin(), want.end(), 0);
    std::vector<std::string> missing;
    for (const auto& [name, n] : spec.class_counts) {
      const auto c = classes.index_of(name);
      if (!c) throw ConfigError("split: unknown class " + name);
      want[*c] = n;
      if (n > 0 && pool[*c].empty()) missing.push_back(name);
    }
    if (!missing.empty()) {
      std::string msg = "split: requested classes absent from the training pool:";
      for (const auto& m : missing) msg += " " + m;
      throw DataError(msg);
    }
  }
  std::vector<const Beat*> chosen;
  for (std::size_t c = 0; c < pool.size(); ++c) {
    auto candidates = pool[c];
    Rng rng(seed, {stage::kSplit, c});
    shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(std::min(candidates.size(), want[c]));
    chosen.insert(chosen.end(), candidates.begin(), candidates.end());
  }
  // Restore record order so the training set does not depend on class order.
  std::map<std::string, std::size_t> rank;
  for (std::size_t k = 0; k < spec.train_records.size(); ++k) rank.emplace(spec.train_records[k], k);
  std::sort(chosen.begin(), chosen.end(), [&](const Beat* a, const Beat* b) {
    return std::pair(rank[a->record_id], a->r_peak) < std::pair(rank[b->record_id], b->r_peak);
  });
  for (const Beat* b : chosen) out.train.push_back(*b);

  for (const auto& id : spec.test_records) {
    for (const auto& b : beats_of(id)) {
      const double t = static_cast<double>(b.r_peak) / b.fs;
      (t < spec.skip_seconds ? out.train : out.test).push_back(b);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic ECG

/// A Gaussian bump relative to the R peak.
struct Wave {
  double amplitude = 0.0;  // mV
  double center = 0.0;     // s relative to the R peak
  double width = 0.01;     // s (standard deviation)
};

/// Morphology of one synthetic class: P, Q, R, S and T bumps.
struct SynthClass {
  std::string name;
  std::string symbol;  // annotation label written to the record
  Wave p, q, r, s, t;
};

/// QRS bumps of the wide-QRS class are this many times wider than normal.
inline constexpr double kWideQrsFactor = 3.0;

inline const std::vector<SynthClass>& synth_classes() {
  static const std::vector<SynthClass> table = [] {
    const SynthClass normal{"normal", "N",
                            {0.15, -0.20, 0.020},
                            {-0.12, -0.030, 0.008},
                            {1.20, 0.0, 0.010},
                            {-0.25, 0.030, 0.008},
                            {0.30, 0.25, 0.045}};
    SynthClass wide = normal;
    wide.name = "wide-qrs";
    wide.symbol = "V";
    wide.p.amplitude = 0.0;
    wide.q.width *= kWideQrsFactor;
    wide.r.width *= kWideQrsFactor;
    wide.s.width *= kWideQrsFactor;
    wide.q.center *= kWideQrsFactor;
    wide.s.center *= kWideQrsFactor;
    wide.r.amplitude = 1.0;
    wide.s.amplitude = -0.45;
    wide.t = {-0.35, 0.28, 0.060};
    SynthClass inverted = normal;
    inverted.name = "inverted-qrs";
    inverted.symbol = "A";
    inverted.q.amplitude = 0.15;
    inverted.r.amplitude = -1.0;
    inverted.s.amplitude = 0.20;
    inverted.t.amplitude = -0.20;
    SynthClass fusion = normal;
    fusion.name = "fusion";
    fusion.symbol = "F";
    fusion.q.width *= 1.8;
    fusion.r.width *= 1.8;
    fusion.s.width *= 1.8;
    fusion.r.amplitude = 0.9;
    fusion.t.amplitude = 0.05;
    return std::vector<SynthClass>{normal, wide, inverted, fusion};
  }();
  return table;
}

inline const SynthClass& synth_class(std::string_view name) {
  for (const auto& c : synth_classes())
    if (c.name == name) return c;
  std::string known;
  for (const auto& c : synth_classes()) known += " " + c.name;
  throw ConfigError("unknown synthetic class '" + std::string(name) + "' (known:" + known + ")");
}

struct SynthNoise {
  double rr_mean = 0.8;         // s between beats
  double rr_jitter = 0.08;      // uniform +/- s
  double amplitude_sd = 0.08;   // relative, per beat
  double width_sd = 0.08;       // relative, per beat
  double timing_sd = 0.004;     // s, per wave
  double noise_sd = 0.02;       // mV, white
  double wander = 0.05;         // mV, baseline sinusoid amplitude
  double lead_in = 0.6;         // s before the first R peak
  double lead_out = 0.9;        // s after the last R peak
};

/// Generates an annotated record of `n_beats` beats of one class.
inline ECGRecord synth_ecg(std::string_view class_name, std::size_t n_beats, double fs, Rng& rng,
                           const SynthNoise& nz = {}) {
  const SynthClass& cls = synth_class(class_name);
  if (!(fs > 0.0)) throw ConfigError("synth_ecg: fs must be > 0");
  std::vector<double> r_times;
  double t = nz.lead_in;
  for (std::size_t k = 0; k < n_beats; ++k) {
    r_times.push_back(t);
    t += nz.rr_mean + rng.uniform(-nz.rr_jitter, nz.rr_jitter);
  }
  const double duration = (r_times.empty() ? nz.lead_in : r_times.back()) + nz.lead_out;
  const auto n = static_cast<std::size_t>(std::ceil(duration * fs));

  ECGRecord rec;
  rec.record_id = std::string(class_name);
  rec.fs = fs;
  rec.samples.assign(n, 0.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < n; ++i) {
    const double ts = static_cast<double>(i) / fs;
    rec.samples[i] = nz.wander * std::sin(2.0 * std::numbers::pi * 0.3 * ts + phase) +
                     rng.normal(0.0, nz.noise_sd);
  }
  for (double tr : r_times) {
    const double amp = 1.0 + rng.normal(0.0, nz.amplitude_sd);
    const double wid = std::max(0.5, 1.0 + rng.normal(0.0, nz.width_sd));
    for (const Wave* w : {&cls.p, &cls.q, &cls.r, &cls.s, &cls.t}) {
      if (w->amplitude == 0.0) continue;
      const double center = tr + w->center + (w == &cls.r ? 0.0 : rng.normal(0.0, nz.timing_sd));
      const double sd = w->width * wid;
      const auto lo = static_cast<std::ptrdiff_t>(std::floor((center - 5.0 * sd) * fs));
      const auto hi = static_cast<std::ptrdiff_t>(std::ceil((center + 5.0 * sd) * fs));
      for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, lo);
           i <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, hi); ++i) {
        const double z = (static_cast<double>(i) / fs - center) / sd;
        rec.samples[static_cast<std::size_t>(i)] += amp * w->amplitude * std::exp(-0.5 * z * z);
      }
    }
    rec.annotations.push_back({static_cast<std::size_t>(round_half_up(tr * fs)), cls.symbol});
  }
  rec.validate();
  return rec;
}

/// 64-bit FNV-1a over beat contents and labels; identifies a training set.
inline std::uint64_t dataset_digest(std::span<const Beat> beats) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& b : beats) {
    for (double v : b.samples) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      mix(&bits, sizeof bits);
    }
    const std::string& l = b.label ? *b.label : std::string();
    mix(l.data(), l.size());
    mix("\0", 1);
  }
  return h;
}

}  // namespace snnecg
