#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "snnecg/energy.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("snnecg_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Result cli(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const std::string cmd = std::string(SNNECG_CLI) + " " + args + " > " + out.string() + " 2> " +
                          (work_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  return r;
}

// Every `key=value` token of the output; the first occurrence of a key wins.
std::map<std::string, std::string> fields(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) kv.emplace(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return kv;
}

fs::path write_config(const std::string& name, const std::string& extra = "") {
  const fs::path data = work_dir() / "data";
  std::ofstream f(work_dir() / name);
  f << "[run]\nseed = 3\nthreads = 2\n"
    << "[data]\ndir = " << data.string() << "\n"
    << "[stdp]\nneurons_per_window = 3\nepochs = 1\n"
    << "[gaussian]\nmax_epochs = 5\n"
    << "[rstdp]\nepochs = 2\n"
    << "[split]\nmode = holdout\ntrain_records = n0,v0,a0\ntest_records = n1,v1,a1\n"
    << "[classes]\nN = N\nV = V\nS = A\n"
    << extra;
  return work_dir() / name;
}

class Cli : public ::testing::Test {
 protected:
  static void TearDownTestSuite() { fs::remove_all(work_dir()); }

  static void SetUpTestSuite() {
    const std::string data = (work_dir() / "data").string();
    const char* classes[3][2] = {{"normal", "n"}, {"wide-qrs", "v"}, {"inverted-qrs", "a"}};
    int seed = 1;
    for (auto& c : classes)
      for (int part = 0; part < 2; ++part) {
        const Result r = cli(std::string("synth --class ") + c[0] + " -n 6 --seed " + std::to_string(seed++) + " -o " +
                          data + " --id " + c[1] + std::to_string(part));
        ASSERT_EQ(r.code, 0) << r.out;
      }
    ASSERT_EQ(cli("synth --class fusion -n 0 -o " + data + " --id empty").code, 0);
  }
};

}  // namespace

TEST_F(Cli, SynthWritesRequestedBeats) {
  const Result r = cli("synth --class normal -n 10 --seed 4 -o " + (work_dir() / "s1").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(fields(r.out)["beats"], "10");
  const std::string ann = slurp(work_dir() / "s1" / "normal_ann.csv");
  EXPECT_EQ(std::count(ann.begin(), ann.end(), '\n'), 10);
}

TEST_F(Cli, SynthIsDeterministic) {
  ASSERT_EQ(cli("synth --class fusion -n 5 --seed 9 -o " + (work_dir() / "d1").string()).code, 0);
  ASSERT_EQ(cli("synth --class fusion -n 5 --seed 9 -o " + (work_dir() / "d2").string()).code, 0);
  EXPECT_EQ(slurp(work_dir() / "d1" / "fusion_signal.csv"), slurp(work_dir() / "d2" / "fusion_signal.csv"));
  EXPECT_EQ(slurp(work_dir() / "d1" / "fusion_ann.csv"), slurp(work_dir() / "d2" / "fusion_ann.csv"));
}

TEST_F(Cli, SynthUnknownClassExits2) {
  EXPECT_EQ(cli("synth --class nope -o " + (work_dir() / "x").string()).code, 2);
}

TEST_F(Cli, TrainThenEval) {
  const fs::path cfg = write_config("ok.ini");
  const fs::path model = work_dir() / "ok.snn";
  const fs::path log = work_dir() / "train.log";
  const Result t = cli("train -c " + cfg.string() + " -m " + model.string() + " --log " + log.string());
  ASSERT_EQ(t.code, 0) << t.out;
  EXPECT_TRUE(fs::exists(model));
  EXPECT_NE(slurp(log).find("stage=rstdp"), std::string::npos);

  const fs::path summary = work_dir() / "summary.json";
  const fs::path beats = work_dir() / "beats.log";
  const Result e = cli("eval -m " + model.string() + " --summary " + summary.string() + " --beats " + beats.string());
  ASSERT_EQ(e.code, 0) << e.out;
  auto kv = fields(e.out);
  ASSERT_TRUE(kv.count("accuracy"));
  const double acc = std::stod(kv["accuracy"]);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
  EXPECT_EQ(kv["beats"], "18");
  EXPECT_TRUE(kv.count("mean_wall_ms"));
  EXPECT_NE(slurp(summary).find("\"accuracy\""), std::string::npos);

  // Re-tally the beat log by hand and through the energy subcommand.
  std::ifstream in(beats);
  std::string line;
  std::uint64_t spikes = 0, events = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    std::uint64_t s = 0, d = 0;
    while (ls >> tok) {
      if (tok.rfind("spikes=", 0) == 0) s = std::stoull(tok.substr(7));
      if (tok.rfind("out_degree=", 0) == 0) d = std::stoull(tok.substr(11));
    }
    spikes += s;
    events += s * d;
  }
  EXPECT_EQ(kv["spikes"], std::to_string(spikes));
  EXPECT_EQ(kv["synaptic_events"], std::to_string(events));
  const Result en = cli("energy --log " + beats.string());
  ASSERT_EQ(en.code, 0);
  auto ekv = fields(en.out);
  EXPECT_EQ(ekv["spikes"], std::to_string(spikes));
  EXPECT_EQ(ekv["synaptic_events"], std::to_string(events));
  EXPECT_EQ(std::stod(ekv["energy_pj"]), snnecg::tally_energy(spikes, events).energy_pj);
}

TEST_F(Cli, RepeatedTrainIsByteIdentical) {
  const fs::path cfg = write_config("det.ini");
  ASSERT_EQ(cli("train -c " + cfg.string() + " -m " + (work_dir() / "a.snn").string()).code, 0);
  ASSERT_EQ(cli("train -c " + cfg.string() + " -m " + (work_dir() / "b.snn").string() + " --run.threads=1").code, 0);
  const std::string a = slurp(work_dir() / "a.snn");
  const std::string b = slurp(work_dir() / "b.snn");
  ASSERT_FALSE(a.empty());
  // The embedded config records the thread count; compare everything else.
  const Result ra = cli("eval -m " + (work_dir() / "a.snn").string());
  const Result rb = cli("eval -m " + (work_dir() / "b.snn").string() + " --run.threads=2");
  auto ka = fields(ra.out), kb = fields(rb.out);
  ka.erase("mean_wall_ms");
  kb.erase("mean_wall_ms");
  EXPECT_EQ(ka, kb);
  ASSERT_EQ(cli("train -c " + cfg.string() + " -m " + (work_dir() / "c.snn").string()).code, 0);
  EXPECT_EQ(a, slurp(work_dir() / "c.snn"));
}

TEST_F(Cli, BadConfigExits2) {
  const fs::path cfg = write_config("bad.ini", "[stdp_lif]\nu_th = banana\n");
  const Result r = cli("train -c " + cfg.string() + " -m " + (work_dir() / "bad.snn").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(slurp(work_dir() / "stderr.txt").find("stdp_lif.u_th"), std::string::npos);
}

TEST_F(Cli, MissingDataPathExits2) {
  const fs::path cfg = work_dir() / "nodata.ini";
  std::ofstream(cfg) << "[data]\ndir = " << (work_dir() / "no_such_dir").string() << "\n";
  EXPECT_EQ(cli("train -c " + cfg.string() + " -m " + (work_dir() / "nd.snn").string()).code, 2);
}

TEST_F(Cli, UnknownOverrideExits2) {
  const fs::path cfg = write_config("ov.ini");
  EXPECT_EQ(cli("train -c " + cfg.string() + " --stdp.nonsense=1").code, 2);
}

TEST_F(Cli, TopologyMismatchExits3) {
  const fs::path cfg = write_config("topo.ini");
  const fs::path model = work_dir() / "topo.snn";
  ASSERT_EQ(cli("train -c " + cfg.string() + " -m " + model.string()).code, 0);
  EXPECT_EQ(cli("eval -m " + model.string() + " -c " + cfg.string() + " --stdp.neurons_per_window=4").code, 3);
  std::ofstream(work_dir() / "junk.snn") << "not a model";
  EXPECT_EQ(cli("eval -m " + (work_dir() / "junk.snn").string()).code, 3);
}

TEST_F(Cli, EmptyTestSetExits4) {
  const fs::path cfg = write_config("empty.ini");
  const fs::path model = work_dir() / "empty.snn";
  ASSERT_EQ(cli("train -c " + cfg.string() + " -m " + model.string()).code, 0);
  const Result r = cli("eval -m " + model.string() + " -c " + cfg.string() + " --split.test_records=empty");
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(slurp(work_dir() / "stderr.txt").find("no test beats"), std::string::npos);
}
