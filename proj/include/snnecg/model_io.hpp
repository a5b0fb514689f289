#pragma once

// Binary model container.
//
//   "SNNECGM1"                      8 bytes
//   u32 version
//   u64 length, config text         (RunConfig::to_text)
//   u64 length, metadata text       (key=value lines)
//   u32 tensor count
//   per tensor: u32 name length, name, u64 rows, u64 cols, rows*cols f64
//
// All integers and floats are little-endian. The config text alone fixes
// every tensor shape, so loading rebuilds an initial model from it and
// checks each stored tensor against that.

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "snnecg/config.hpp"
#include "snnecg/errors.hpp"
#include "snnecg/pipeline.hpp"

namespace snnecg {

inline constexpr char kModelMagic[8] = {'S', 'N', 'N', 'E', 'C', 'G', 'M', '1'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace model_detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_text(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}

  std::uint64_t u64() { return uint_n(8); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint_n(4)); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string bytes(std::uint64_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string text() { return bytes(u64()); }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > buf_.size() - pos_) throw ModelMismatch("model file truncated");
  }

  std::uint64_t uint_n(int n) {
    need(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }

  const std::string& buf_;
  std::size_t pos_ = 0;
};

inline std::string metadata_text(const Provenance& p) {
  std::ostringstream o;
  o << "seed=" << p.seed << "\n";
  o << "dataset_digest=" << p.dataset_digest << "\n";
  o << "train_beats=" << p.train_beats << "\n";
  o << "gaussian_epochs=" << p.gaussian_epochs << "\n";
  o << "gaussian_converged=" << (p.gaussian_converged ? "true" : "false") << "\n";
  o << "stdp_epochs=" << p.stdp_epochs << "\n";
  o << "rstdp_epochs=" << p.rstdp_epochs << "\n";
  for (const auto& w : p.warnings) o << "warning=" << w << "\n";
  return o.str();
}

inline Provenance parse_metadata(const std::string& text) {
  Provenance p;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ModelMismatch("bad metadata line '" + line + "'");
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "seed") p.seed = std::stoull(v);
    else if (k == "dataset_digest") p.dataset_digest = std::stoull(v);
    else if (k == "train_beats") p.train_beats = std::stoull(v);
    else if (k == "gaussian_epochs") p.gaussian_epochs = std::stoi(v);
    else if (k == "gaussian_converged") p.gaussian_converged = v == "true";
    else if (k == "stdp_epochs") p.stdp_epochs = std::stoi(v);
    else if (k == "rstdp_epochs") p.rstdp_epochs = std::stoi(v);
    else if (k == "warning") p.warnings.push_back(v);
  }
  return p;
}

// Flat views of every learned array, in file order.
template <class Vec>
struct Slot {
  std::string name;
  std::size_t rows, cols;
  Vec* data;
};

template <class M>
auto slots(M& m) {
  using Vec = std::conditional_t<std::is_const_v<M>, const std::vector<double>, std::vector<double>>;
  std::vector<Slot<Vec>> s;
  s.push_back({"gaussian.kernel", 1, m.gaussian.kernel.size(), &m.gaussian.kernel});
  s.push_back({"gaussian.beta", 1, m.gaussian.beta.size(), &m.gaussian.beta});
  for (std::size_t c = 0; c < m.stdp.size(); ++c) {
    auto& ch = m.stdp[c];
    s.push_back({"stdp." + std::to_string(c) + ".w", ch.w.rows, ch.w.cols, &ch.w.data});
    s.push_back({"stdp." + std::to_string(c) + ".w_inhib", ch.w_inhib.rows, ch.w_inhib.cols, &ch.w_inhib.data});
  }
  s.push_back({"classifier.psi", m.classifier.psi.rows, m.classifier.psi.cols, &m.classifier.psi.data});
  return s;
}

}  // namespace model_detail

inline std::string serialize_model(const Model& model) {
  using namespace model_detail;
  const Model& m = model;
  std::string out(kModelMagic, sizeof kModelMagic);
  put_u32(out, kModelVersion);
  put_text(out, m.config.to_text());
  put_text(out, metadata_text(m.provenance));
  const auto sl = slots(m);
  put_u32(out, static_cast<std::uint32_t>(sl.size()));
  for (const auto& s : sl) {
    put_u32(out, static_cast<std::uint32_t>(s.name.size()));
    out += s.name;
    put_u64(out, s.rows);
    put_u64(out, s.cols);
    for (double v : *s.data) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

inline Model deserialize_model(const std::string& buf) {
  using namespace model_detail;
  Reader r(buf);
  if (r.bytes(sizeof kModelMagic) != std::string(kModelMagic, sizeof kModelMagic))
    throw ModelMismatch("not a model file (bad magic)");
  const auto version = r.u32();
  if (version != kModelVersion) throw ModelMismatch("unsupported model version " + std::to_string(version));
  RunConfig cfg;
  try {
    cfg = parse_config(r.text());
  } catch (const ConfigError& e) {
    throw ModelMismatch(std::string("embedded config invalid: ") + e.what());
  }
  Model m = init_model(cfg);
  m.provenance = parse_metadata(r.text());
  auto sl = slots(m);
  const auto count = r.u32();
  if (count != sl.size())
    throw ModelMismatch("model holds " + std::to_string(count) + " tensors, config implies " + std::to_string(sl.size()));
  for (auto& s : sl) {
    const std::string name = r.bytes(r.u32());
    const auto rows = r.u64(), cols = r.u64();
    if (name != s.name || rows != s.rows || cols != s.cols) {
      throw ModelMismatch("tensor '" + name + "' " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " does not match expected '" + s.name + "' " + std::to_string(s.rows) + "x" +
                          std::to_string(s.cols));
    }
    for (auto& v : *s.data) v = r.f64();
  }
  if (!r.done()) throw ModelMismatch("trailing bytes after last tensor");
  return m;
}

inline void save_model(const Model& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write model file '" + path + "'");
  const std::string buf = serialize_model(m);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw DataError("failed writing model file '" + path + "'");
}

inline Model load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read model file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_model(ss.str());
}

/// Throws ModelMismatch when `cfg` describes a different network than `m`.
inline void check_topology(const Model& m, const RunConfig& cfg) {
  const RunConfig& a = m.config;
  auto fail = [](const std::string& what, const std::string& x, const std::string& y) {
    throw ModelMismatch(what + ": model has " + x + ", config has " + y);
  };
  if (a.fs != cfg.fs) fail("fs", config_detail::fmt(a.fs), config_detail::fmt(cfg.fs));
  if (a.windows != cfg.windows) fail("windows", std::to_string(a.windows), std::to_string(cfg.windows));
  if (a.stdp.neurons_per_window != cfg.stdp.neurons_per_window)
    fail("stdp.neurons_per_window", std::to_string(a.stdp.neurons_per_window),
         std::to_string(cfg.stdp.neurons_per_window));
  if (a.classes.names() != cfg.classes.names())
    fail("classes", config_detail::join(a.classes.names()), config_detail::join(cfg.classes.names()));
}

}  // namespace snnecg
