#include <stdexcept>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "asyncell/cli.hpp"
#include "asyncell/snapshots.hpp"
#include "doctest.h"

using namespace asyncell;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;

  /// key=value lines of the report
  std::map<std::string, std::string> values() const {
    std::map<std::string, std::string> kv;
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (line.empty() || line[0] == '#' || eq == std::string::npos || line.find(' ') < eq) continue;
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
  }
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "asyncell_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("simulate prints its configuration and a hash") {
  const Run r = cli({"simulate", "--engine", "agg", "--n", "16", "--m", "8", "--end-time", "2", "--seed", "5"});
  REQUIRE(r.code == exit_ok);
  CHECK(r.out.rfind("# config command=simulate engine=agg dim=2 n=16 m=8", 0) == 0);
  CHECK(r.out.find("seed=5") != std::string::npos);
  const auto kv = r.values();
  CHECK(kv.at("hash").size() == 16);
  CHECK(kv.at("tie_fault") == "none");
  CHECK(std::stoul(kv.at("events")) > 0);

  const Run again = cli({"simulate", "--engine", "agg", "--n", "16", "--m", "8", "--end-time", "2", "--seed", "5"});
  CHECK(again.out == r.out);
  const Run oracle = cli({"simulate", "--engine", "serial-eventlist", "--n", "16", "--end-time", "2", "--seed", "5"});
  CHECK(oracle.values().at("hash") == kv.at("hash"));
}

TEST_CASE("every engine runs from the command line") {
  for (const char* engine : {"serial-standard", "serial-eventlist", "serial-bkl", "async1", "sync1", "agg",
                             "agg-poisson"}) {
    CAPTURE(engine);
    const Run r = cli({"simulate", "--engine", engine, "--n", "8", "--end-time", "1", "--pes", "2"});
    CHECK(r.code == exit_ok);
    CHECK(r.values().count("hash") == 1);
  }
  const Run sync = cli({"simulate", "--engine", "sync1", "--n", "16", "--end-time", "3"});
  CHECK(sync.values().count("eligible_fraction") == 1);
  const Run bkl = cli({"simulate", "--engine", "agg-poisson", "--bkl", "--n", "16", "--m", "8", "--end-time", "2"});
  CHECK(bkl.values().count("kernel_fraction") == 1);
}

TEST_CASE("print-config stops before running") {
  const Run r = cli({"simulate", "--print-config", "--seed", "77"});
  CHECK(r.code == exit_ok);
  CHECK(r.out.find("seed=77") != std::string::npos);
  CHECK(r.values().count("hash") == 0);
  CHECK(cli({"predict", "--print-config"}).out.rfind("# config command=predict", 0) == 0);
}

TEST_CASE("argument errors exit with 2") {
  CHECK(cli({"simulate", "--engine", "warp"}).code == exit_bad_arguments);
  CHECK(cli({"simulate", "--engine", "agg", "--bkl"}).code == exit_bad_arguments);
  CHECK(cli({"simulate", "--engine", "agg-poisson", "--law", "uniform"}).code == exit_bad_arguments);
  CHECK(cli({"simulate", "--model", "life"}).code == exit_ok);
  CHECK(cli({"simulate", "--model", "ising:T=-1"}).code == exit_bad_arguments);
  CHECK(cli({"simulate", "--n", "10", "--m", "4"}).code == exit_bad_arguments);
  CHECK(cli({"simulate", "--engine", "async1", "--m", "4"}).code == exit_bad_arguments);
  CHECK(cli({"simulate", "--pes", "0"}).code == exit_bad_arguments);
  CHECK(cli({"simulate", "--law", "levy"}).code == exit_bad_arguments);
  CHECK(cli({"predict", "--mode", "magic"}).code == exit_bad_arguments);
  CHECK(cli({"predict", "--mode", "aggregated", "--m", "2", "--n", "20"}).code == exit_bad_arguments);
  CHECK(cli({"frobnicate"}).code == exit_bad_arguments);
  CHECK(cli({"simulate", "--seed", "-3"}).code == exit_bad_arguments);
  CHECK(cli({"--help"}).code == exit_ok);
}

TEST_CASE("I/O errors exit with 3") {
  CHECK(cli({"simulate", "--n", "8", "--csv", "/nonexistent-dir/out.csv"}).code == exit_io_error);
  const fs::path file = scratch("plain-file");
  std::ofstream(file) << "x";
  CHECK(cli({"simulate", "--n", "8", "--m", "4", "--snapshot-dt", "0.5", "--out-dir", (file / "sub").string()}).code ==
        exit_io_error);
  CHECK(cli({"predict", "--n", "16", "--rounds", "200", "--replicates", "2", "--csv", "/nonexistent-dir/p.csv"}).code ==
        exit_io_error);
}

TEST_CASE("simulate CSV is stable") {
  const fs::path a = scratch("a.csv");
  const fs::path b = scratch("b.csv");
  const std::vector<std::string> base{"simulate", "--engine", "agg", "--n", "16", "--m", "4", "--end-time", "2"};
  auto with = [&](const fs::path& p) {
    auto v = base;
    v.push_back("--csv");
    v.push_back(p.string());
    return v;
  };
  REQUIRE(cli(with(a)).code == exit_ok);
  REQUIRE(cli(with(b)).code == exit_ok);
  const std::string text = slurp(a);
  CHECK(text == slurp(b));
  CHECK(text.rfind("engine,dim,n,m,pes,seed,end_time,events,changes,hash,tie_fault,eligible_fraction,kernel_fraction\n",
                   0) == 0);
  CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("snapshots are written as pattern files") {
  const fs::path dir = scratch("patterns");
  fs::remove_all(dir);
  const Run r = cli({"simulate", "--engine", "agg", "--n", "8", "--m", "4", "--end-time", "2", "--snapshot-dt", "0.5",
                     "--frames", "2", "--out-dir", dir.string(), "--audit", "--pes", "2"});
  REQUIRE(r.code == exit_ok);
  const auto kv = r.values();
  CHECK(kv.at("snapshots") == "4");
  CHECK(kv.at("audit_below_local_time") == "0");
  for (int k = 0; k < 4; ++k) {
    const PatternImage img = read_pattern(pattern_path(dir, static_cast<std::uint64_t>(k)));
    CHECK(img.width == 8);
    CHECK(img.time == 0.5 * k);
  }
  CHECK_FALSE(fs::exists(pattern_path(dir, 4)));
}

TEST_CASE("predict output and CSV") {
  const fs::path csv = scratch("predict.csv");
  const std::vector<std::string> args{"predict", "--mode", "aggregated", "--n", "120", "--m", "24", "--rounds", "600",
                                      "--replicates", "2", "--csv", csv.string()};
  const Run r = cli(args);
  REQUIRE(r.code == exit_ok);
  const double eff = std::stod(r.values().at("efficiency"));
  CHECK(eff > 0.5);
  CHECK(eff < 0.8);
  const std::string text = slurp(csv);
  CHECK(text.rfind("n,m,law,lag_bound,efficiency,ci_low,ci_high,rounds\n120,24,poisson:1,inf,", 0) == 0);
  CHECK(cli(args).out == r.out);
  CHECK(slurp(csv) == text);
}

TEST_CASE("verify passes on a 16x16 lattice") {
  const Run r = cli({"verify", "--n", "16", "--end-time", "3", "--seeds", "1,2,3", "--m", "4,8", "--pes", "1,2",
                     "--one-cell"});
  CHECK(r.code == exit_ok);
  CHECK(r.values().at("verification") == "PASS");
  CHECK(r.out.find("MISMATCH") == std::string::npos);
  CHECK(r.out.find("weak uniqueness") != std::string::npos);
  CHECK(cli({"verify", "--n", "16", "--end-time", "3", "--seeds", "1,2,3", "--m", "4,8", "--pes", "1,2",
             "--one-cell"})
            .out == r.out);
}

TEST_CASE("verify reports ties under the fixed law") {
  const Run r = cli({"verify", "--n", "8", "--end-time", "3", "--law", "fixed"});
  CHECK(r.code == exit_verification_failed);
  CHECK(r.values().at("verification") == "FAIL");
  CHECK(r.values().at("tie_faults") != "0");
}

TEST_CASE("bench compares matched event counts") {
  const fs::path csv = scratch("bench.csv");
  const Run r = cli({"bench", "--engine", "agg-poisson", "--n", "64", "--m", "64", "--end-time", "30", "--pes", "1",
                     "--csv", csv.string()});
  REQUIRE(r.code == exit_ok);
  const auto kv = r.values();
  CHECK(kv.at("events_match") == "1");
  const double eff = std::stod(kv.at("efficiency"));
  MESSAGE("single-worker efficiency " << eff);
  CHECK(eff > 0.4);
  CHECK(eff < 2.5);
  CHECK(slurp(csv).rfind("engine,n,m,pes,events,parallel_seconds,serial_seconds,efficiency,speedup,events_match\n", 0) ==
        0);
}

TEST_CASE("bench efficiency grows with the subarray side") {
  auto best = [](const char* m) {
    double e = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Run r = cli({"bench", "--engine", "agg-poisson", "--n", "48", "--m", m, "--end-time", "100", "--pes", "2"});
      REQUIRE(r.code == exit_ok);
      e = std::max(e, std::stod(r.values().at("efficiency")));
    }
    return e;
  };
  const double small = best("4");
  const double large = best("24");
  MESSAGE("m=4 " << small << " m=24 " << large);
  CHECK(large > small);
}
