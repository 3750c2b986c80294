#include "asyncell/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "asyncell/asynchrony.hpp"
#include "asyncell/engine_parallel.hpp"
#include "asyncell/engine_serial.hpp"
#include "asyncell/models.hpp"
#include "asyncell/perf_model.hpp"
#include "asyncell/snapshots.hpp"
#include "asyncell/topology.hpp"
#include "asyncell/trajectory.hpp"

namespace asyncell {
namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

std::string hex(std::uint64_t v) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

/// Writes `text` to `path`, replacing it. I/O problems surface as ios_base::failure.
void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

const std::vector<std::string> engine_names = {"serial-standard", "serial-eventlist", "serial-bkl", "async1",
                                               "sync1",           "agg",              "agg-poisson"};

bool is_serial(const std::string& e) { return e.rfind("serial-", 0) == 0; }

struct Setup {
  Lattice lattice;
  ModelSpec spec;
  NeighborTable table;
  CellModel model;
  ArrivalLaw law;

  Setup(int dim, int n, int q, const std::string& model_text, const std::string& law_text)
      : lattice(dim, n),
        spec(ModelSpec::parse(model_text)),
        table(lattice, q, spec.neighborhood()),
        model(CellModel::bind(spec, table)),
        law(ArrivalLaw::parse(law_text)) {}
};

double poisson_rate(const ArrivalLaw& law, const std::string& engine) {
  if (law.kind != ArrivalLaw::Kind::poisson) throw std::invalid_argument(engine + " needs a poisson law");
  return law.rate;
}

/// Flags shared by simulate, verify and bench.
struct CommonArgs {
  int dim = 2;
  int n = 16;
  int q = 1;
  std::string model = "ising:J=1,H=0,T=2";
  std::string law = "poisson:1";
  double end_time = 1.0;
  std::uint64_t seed = 1;
  std::string init = "random";
  bool jitter = false;
};

void add_common(CLI::App& app, CommonArgs& a) {
  app.add_option("--dim", a.dim, "lattice dimension (1, 2 or 3)")->capture_default_str();
  app.add_option("--n", a.n, "lattice side")->capture_default_str();
  app.add_option("--q", a.q, "neighborhood degree")->capture_default_str();
  app.add_option("--model", a.model, "ising:J=<f>,H=<f>,T=<f> | life")->capture_default_str();
  app.add_option("--law", a.law, "poisson:<rate> | uniform | power:<k> | gaussian:<m>,<sd> | gaussian-fixed:<m>,<sd> | fixed")
      ->capture_default_str();
  app.add_option("--end-time", a.end_time, "simulated end time")->capture_default_str();
  app.add_option("--seed", a.seed, "run seed")->capture_default_str();
  app.add_option("--init", a.init, "initial configuration: random | up | down")->capture_default_str();
  app.add_flag("--jitter", a.jitter, "inject random scheduling delays");
}

struct SimulateArgs {
  CommonArgs common;
  std::string engine = "agg";
  std::optional<int> m;
  int pes = 1;
  std::optional<double> lag_bound;
  bool bkl = false;
  std::optional<double> snapshot_dt;
  std::size_t frames = 2;
  std::string out_dir = ".";
  std::string csv;
  bool print_config = false;
  bool audit = false;
};

EngineConfig engine_config(const CommonArgs& c, int pes) {
  EngineConfig cfg;
  cfg.workers = pes;
  cfg.seed = c.seed;
  cfg.end_time = c.end_time;
  cfg.init = parse_initial_config(c.init);
  cfg.jitter = c.jitter;
  return cfg;
}

SerialOptions serial_options(const EngineConfig& cfg) {
  SerialOptions o;
  o.seed = cfg.seed;
  o.end_time = cfg.end_time;
  o.init = cfg.init;
  o.record_events = cfg.record_events;
  return o;
}

Trajectory run_engine(const std::string& engine, const Setup& st, const EngineConfig& cfg, int m, int q) {
  if (engine == "serial-standard") {
    return run_serial_standard(st.model, st.table, poisson_rate(st.law, engine), serial_options(cfg));
  }
  if (engine == "serial-eventlist") return run_serial_eventlist(st.model, st.table, st.law, serial_options(cfg));
  if (engine == "serial-bkl") {
    return run_serial_bkl(st.model, st.table, poisson_rate(st.law, engine), serial_options(cfg));
  }
  if (engine == "async1") return run_async_one_cell(cfg, st.model, st.table, st.law);
  if (engine == "sync1") return run_sync_one_cell(cfg, st.model, st.table, st.law);
  const Partition partition(st.lattice, m, q, st.spec.neighborhood());
  if (engine == "agg") return run_aggregated_general(cfg, st.model, partition, st.law);
  if (engine == "agg-poisson") return run_aggregated_poisson(cfg, st.model, partition, poisson_rate(st.law, engine));
  throw std::invalid_argument("unknown engine '" + engine + "'");
}

std::string tie_text(const Trajectory& t) {
  if (!t.tie_fault) return "none";
  return fmt(t.tie_fault->time) + ":" + std::to_string(t.tie_fault->a) + ":" + std::to_string(t.tie_fault->b);
}

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto& c = a.common;
  const int m = a.m.value_or(c.n);
  const bool aggregated = a.engine == "agg" || a.engine == "agg-poisson";
  if (a.bkl && a.engine != "agg-poisson") throw std::invalid_argument("--bkl applies to agg-poisson (use serial-bkl for serial BKL)");
  if ((a.snapshot_dt || a.lag_bound) && !aggregated) {
    throw std::invalid_argument("--snapshot-dt and --lag-bound apply to agg and agg-poisson");
  }
  if (a.m && !aggregated) throw std::invalid_argument("--m applies to agg and agg-poisson");
  if (a.pes < 1) throw std::invalid_argument("--pes must be at least 1");

  Setup st(c.dim, c.n, c.q, c.model, c.law);
  if (a.engine == "agg-poisson" || a.engine == "serial-standard" || a.engine == "serial-bkl") poisson_rate(st.law, a.engine);

  std::ostringstream cfg_line;
  cfg_line << "# config command=simulate engine=" << a.engine << " dim=" << c.dim << " n=" << c.n << " m=" << m
           << " q=" << c.q << " model=" << st.spec.to_string() << " law=" << st.law.to_string()
           << " end_time=" << fmt(c.end_time) << " seed=" << c.seed << " pes=" << a.pes << " init=" << c.init
           << " lag_bound=" << (a.lag_bound ? fmt(*a.lag_bound) : "none") << " bkl=" << (a.bkl ? 1 : 0)
           << " snapshot_dt=" << (a.snapshot_dt ? fmt(*a.snapshot_dt) : "none") << " frames=" << a.frames
           << " out_dir=" << a.out_dir << " jitter=" << (c.jitter ? 1 : 0) << " audit=" << (a.audit ? 1 : 0) << "\n";
  out << cfg_line.str();
  if (a.print_config) return exit_ok;

  EngineConfig cfg = engine_config(c, a.pes);
  cfg.lag_bound = a.lag_bound;
  cfg.bkl = a.bkl;
  cfg.audit = a.audit;
  if (a.snapshot_dt) {
    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir = a.out_dir;
    const Lattice lattice = st.lattice;
    const CellModel model = st.model;
    cfg.snapshots = SnapshotOptions{*a.snapshot_dt, a.frames,
                                    [dir, lattice, model](std::uint64_t k, double time, std::span<const State> image) {
                                      write_pattern(make_pattern(model, lattice, image, time), pattern_path(dir, k));
                                    }};
  }

  const Trajectory traj = run_engine(a.engine, st, cfg, m, c.q);
  const auto& s = traj.stats;
  const double cells = static_cast<double>(st.lattice.cell_count());
  out << "hash=" << hex(traj.hash()) << "\n";
  out << "events=" << s.arrivals << "\n";
  out << "changes=" << s.changes << "\n";
  out << "tie_fault=" << tie_text(traj) << "\n";
  std::string eligible = "";
  if (a.engine == "sync1" && s.rounds > 0) {
    eligible = fmt(static_cast<double>(s.eligible_total) / (static_cast<double>(s.rounds) * cells));
    out << "rounds=" << s.rounds << "\n";
    out << "eligible_fraction=" << eligible << "\n";
  }
  std::string kernel_fraction = "";
  if (a.bkl) {
    const auto total = s.kernel_selections + s.boundary_selections;
    kernel_fraction = total > 0 ? fmt(static_cast<double>(s.kernel_selections) / static_cast<double>(total)) : "0";
    out << "kernel_selections=" << s.kernel_selections << "\n";
    out << "boundary_selections=" << s.boundary_selections << "\n";
    out << "kernel_fraction=" << kernel_fraction << "\n";
  }
  if (s.frozen) out << "frozen=1\n";
  if (!is_serial(a.engine) && a.engine != "sync1") out << "blocked_polls=" << s.blocked_polls << "\n";
  if (a.snapshot_dt) out << "snapshots=" << s.snapshots_emitted << "\n";
  if (a.audit) {
    out << "audit_below_local_time=" << s.below_local_time << "\n";
    out << "audit_nonmonotone_local_time=" << s.nonmonotone_local_time << "\n";
    out << "audit_class_failures=" << s.class_audit_failures << "\n";
    out << "audit_rejected_kernel_moves=" << s.rejected_kernel_moves << "\n";
    out << "audit_max_frontier_lag=" << fmt(s.max_frontier_lag) << "\n";
    out << "audit_max_lvt_spread=" << fmt(s.max_lvt_spread) << "\n";
  }
  if (!a.csv.empty()) {
    std::ostringstream csv;
    csv << "engine,dim,n,m,pes,seed,end_time,events,changes,hash,tie_fault,eligible_fraction,kernel_fraction\n";
    csv << a.engine << "," << c.dim << "," << c.n << "," << m << "," << a.pes << "," << c.seed << ","
        << fmt(c.end_time) << "," << s.arrivals << "," << s.changes << "," << hex(traj.hash()) << ","
        << tie_text(traj) << "," << eligible << "," << kernel_fraction << "\n";
    write_file(a.csv, csv.str());
  }
  return exit_ok;
}

struct PredictArgs {
  std::string mode = "one-cell";
  int dim = 2;
  int n = 128;
  int m = 24;
  std::string law = "poisson:1";
  std::size_t rounds = 2500;
  std::optional<std::size_t> warmup;
  std::size_t replicates = 5;
  double lag_bound = std::numeric_limits<double>::infinity();
  double level = 0.9999;
  std::uint64_t seed = 1;
  int pes = 0;
  std::string csv;
  bool print_config = false;
};

int do_predict(const PredictArgs& a, std::ostream& out) {
  if (a.mode != "one-cell" && a.mode != "aggregated") throw std::invalid_argument("--mode must be one-cell or aggregated");
  const bool one_cell = a.mode == "one-cell";
  const ArrivalLaw law = ArrivalLaw::parse(a.law);
  if (!one_cell && (law.kind != ArrivalLaw::Kind::poisson || law.rate != 1.0)) {
    throw std::invalid_argument("the aggregated predictor uses unit-rate poisson arrivals");
  }
  out << "# config command=predict mode=" << a.mode << " dim=" << a.dim << " n=" << a.n
      << " m=" << (one_cell ? 1 : a.m) << " law=" << law.to_string() << " rounds=" << a.rounds
      << " warmup=" << (a.warmup ? std::to_string(*a.warmup) : "default") << " replicates=" << a.replicates
      << " lag_bound=" << fmt(a.lag_bound) << " level=" << fmt(a.level) << " seed=" << a.seed << " pes=" << a.pes
      << "\n";
  if (a.print_config) return exit_ok;

  EfficiencyEstimate est;
  if (one_cell) {
    OneCellOptions o;
    o.dim = a.dim;
    o.n = a.n;
    o.law = law;
    o.rounds = a.rounds;
    o.warmup = a.warmup;
    o.replicates = a.replicates;
    o.seed = a.seed;
    o.level = a.level;
    o.workers = a.pes;
    est = predict_one_cell(o);
  } else {
    if (a.dim != 2) throw std::invalid_argument("the aggregated predictor is two-dimensional");
    AggregatedOptions o;
    o.n = a.n;
    o.m = a.m;
    o.rounds = a.rounds;
    o.warmup = a.warmup;
    o.replicates = a.replicates;
    o.seed = a.seed;
    o.lag_bound = a.lag_bound;
    o.level = a.level;
    o.workers = a.pes;
    est = predict_aggregated(o);
  }
  out << "efficiency=" << fmt(est.mean) << "\n";
  out << "ci_low=" << fmt(est.low()) << "\n";
  out << "ci_high=" << fmt(est.high()) << "\n";
  out << "level=" << fmt(est.level) << "\n";
  out << "rounds=" << est.rounds << "\n";
  out << "warmup=" << est.warmup << "\n";
  out << "replicates=" << est.replicates << "\n";
  if (!a.csv.empty()) {
    std::ostringstream csv;
    csv << "n,m,law,lag_bound,efficiency,ci_low,ci_high,rounds\n";
    csv << a.n << "," << (one_cell ? 1 : a.m) << "," << law.to_string() << "," << fmt(a.lag_bound) << ","
        << fmt(est.mean) << "," << fmt(est.low()) << "," << fmt(est.high()) << "," << est.rounds << "\n";
    write_file(a.csv, csv.str());
  }
  return exit_ok;
}

struct VerifyArgs {
  CommonArgs common;
  std::vector<std::uint64_t> seeds{1};
  std::vector<int> ms;
  std::vector<int> pes{1, 2};
  bool one_cell = false;
  bool print_config = false;
};

void dump_divergence(std::ostream& out, const Trajectory& oracle, const Trajectory& other) {
  const auto at = first_divergence(oracle.events(), other.events());
  if (!at) return;
  const auto show = [&](const char* who, const Trajectory& t) {
    if (*at < t.events().size()) {
      const Event& e = t.events()[*at];
      out << "  " << who << " event " << *at << ": t=" << fmt(e.time) << " cell=" << e.cell
          << " old=" << int{e.old_state} << " new=" << int{e.new_state} << "\n";
    } else {
      out << "  " << who << " event " << *at << ": <end of trajectory>\n";
    }
  };
  out << "  first divergence at event " << *at << "\n";
  show("oracle", oracle);
  show("engine", other);
}

int do_verify(VerifyArgs a, std::ostream& out) {
  const auto& c = a.common;
  if (a.ms.empty()) {
    for (int m : {4, 8}) {
      if (m <= c.n && c.n % m == 0) a.ms.push_back(m);
    }
    if (a.ms.empty()) a.ms.push_back(c.n);
  }
  Setup st(c.dim, c.n, c.q, c.model, c.law);
  out << "# config command=verify dim=" << c.dim << " n=" << c.n << " q=" << c.q << " model=" << st.spec.to_string()
      << " law=" << st.law.to_string() << " end_time=" << fmt(c.end_time) << " init=" << c.init
      << " jitter=" << (c.jitter ? 1 : 0) << " seeds=";
  for (std::size_t i = 0; i < a.seeds.size(); ++i) out << (i ? "," : "") << a.seeds[i];
  out << " m=";
  for (std::size_t i = 0; i < a.ms.size(); ++i) out << (i ? "," : "") << a.ms[i];
  out << " pes=";
  for (std::size_t i = 0; i < a.pes.size(); ++i) out << (i ? "," : "") << a.pes[i];
  out << " one_cell=" << (a.one_cell ? 1 : 0) << "\n";
  if (a.print_config) return exit_ok;

  bool ok = true;
  std::uint64_t ties = 0;
  for (std::uint64_t seed : a.seeds) {
    CommonArgs per_seed = c;
    per_seed.seed = seed;
    const EngineConfig base = engine_config(per_seed, 1);
    const Trajectory oracle = run_engine("serial-eventlist", st, base, c.n, c.q);
    out << "seed=" << seed << " serial-eventlist hash=" << hex(oracle.hash()) << " events=" << oracle.event_count()
        << " tie_fault=" << tie_text(oracle) << "\n";
    if (oracle.tie_fault) {
      ++ties;
      ok = false;
      continue;
    }
    const auto check = [&](const std::string& label, const Trajectory& t) {
      const bool same = !t.tie_fault && t.hash() == oracle.hash() && !first_divergence(oracle.events(), t.events());
      out << "seed=" << seed << " " << label << " hash=" << hex(t.hash()) << " events=" << t.event_count()
          << " tie_fault=" << tie_text(t) << (same ? " match" : " MISMATCH") << "\n";
      if (t.tie_fault) ++ties;
      if (!same) {
        ok = false;
        dump_divergence(out, oracle, t);
      }
    };
    for (int m : a.ms) {
      for (int p : a.pes) {
        const EngineConfig cfg = engine_config(per_seed, p);
        check("agg m=" + std::to_string(m) + " pes=" + std::to_string(p), run_engine("agg", st, cfg, m, c.q));
      }
    }
    if (a.one_cell) {
      for (int p : a.pes) {
        const EngineConfig cfg = engine_config(per_seed, p);
        check("async1 pes=" + std::to_string(p), run_engine("async1", st, cfg, 1, c.q));
        check("sync1 pes=" + std::to_string(p), run_engine("sync1", st, cfg, 1, c.q));
      }
    }
    if (st.law.kind == ArrivalLaw::Kind::poisson && a.ms.size() >= 2) {
      std::vector<std::uint64_t> hashes;
      for (int m : a.ms) {
        hashes.push_back(run_engine("agg-poisson", st, base, m, c.q).hash());
        out << "seed=" << seed << " agg-poisson m=" << m << " hash=" << hex(hashes.back()) << "\n";
      }
      const bool all_equal = std::all_of(hashes.begin(), hashes.end(), [&](auto h) { return h == hashes.front(); });
      out << "seed=" << seed << " agg-poisson across m: " << (all_equal ? "equal" : "differ")
          << " (weak uniqueness: allowed to differ)\n";
    }
  }
  out << "tie_faults=" << ties << "\n";
  out << "verification=" << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? exit_ok : exit_verification_failed;
}

struct BenchArgs {
  CommonArgs common;
  std::string engine = "agg";
  int m = 16;
  int pes = 1;
  bool bkl = false;
  std::string csv;
  bool print_config = false;
};

int do_bench(BenchArgs a, std::ostream& out) {
  auto& c = a.common;
  if (is_serial(a.engine)) throw std::invalid_argument("bench compares a parallel engine against serial-standard");
  if (a.bkl && a.engine != "agg-poisson") throw std::invalid_argument("--bkl applies to agg-poisson");
  if (a.pes < 1) throw std::invalid_argument("--pes must be at least 1");
  Setup st(c.dim, c.n, c.q, c.model, c.law);
  const int m = a.engine == "agg" || a.engine == "agg-poisson" ? a.m : 1;
  out << "# config command=bench engine=" << a.engine << " dim=" << c.dim << " n=" << c.n << " m=" << m
      << " q=" << c.q << " model=" << st.spec.to_string() << " law=" << st.law.to_string()
      << " end_time=" << fmt(c.end_time) << " seed=" << c.seed << " pes=" << a.pes << " init=" << c.init
      << " bkl=" << (a.bkl ? 1 : 0) << "\n";
  if (a.print_config) return exit_ok;

  using clock = std::chrono::steady_clock;
  EngineConfig cfg = engine_config(c, a.pes);
  cfg.record_events = false;
  cfg.bkl = a.bkl;
  const auto t0 = clock::now();
  const Trajectory par = run_engine(a.engine, st, cfg, m, c.q);
  const auto t1 = clock::now();

  SerialOptions so = serial_options(cfg);
  so.end_time = std::numeric_limits<double>::infinity();
  so.max_events = par.stats.arrivals;
  const double rate = st.law.kind == ArrivalLaw::Kind::poisson ? st.law.rate : 1.0;
  const auto t2 = clock::now();
  const Trajectory ser = run_serial_standard(st.model, st.table, rate, so);
  const auto t3 = clock::now();

  const double par_s = std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
  const double ser_s = std::max(std::chrono::duration<double>(t3 - t2).count(), 1e-9);
  const double eff = measured_efficiency(ser_s, a.pes, par_s);
  const bool match = par.stats.arrivals == ser.stats.arrivals;
  out << "parallel_events=" << par.stats.arrivals << "\n";
  out << "serial_events=" << ser.stats.arrivals << "\n";
  out << "events_match=" << (match ? 1 : 0) << "\n";
  out << "parallel_seconds=" << fmt(par_s) << "\n";
  out << "serial_seconds=" << fmt(ser_s) << "\n";
  out << "efficiency=" << fmt(eff) << "\n";
  out << "speedup=" << fmt(speedup(eff, a.pes)) << "\n";
  if (!a.csv.empty()) {
    std::ostringstream csv;
    csv << "engine,n,m,pes,events,parallel_seconds,serial_seconds,efficiency,speedup,events_match\n";
    csv << a.engine << "," << c.n << "," << m << "," << a.pes << "," << par.stats.arrivals << "," << fmt(par_s) << ","
        << fmt(ser_s) << "," << fmt(eff) << "," << fmt(speedup(eff, a.pes)) << "," << (match ? 1 : 0) << "\n";
    write_file(a.csv, csv.str());
  }
  return exit_ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conservative parallel simulation of asynchronous cellular arrays", "asyncell"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run one engine and print its trajectory hash and counters");
  add_common(*simulate, sim.common);
  simulate->add_option("--engine", sim.engine)->check(CLI::IsMember(engine_names))->capture_default_str();
  simulate->add_option("--m", sim.m, "subarray side (aggregated engines)");
  simulate->add_option("--pes", sim.pes, "worker threads")->capture_default_str();
  simulate->add_option("--lag-bound", sim.lag_bound, "maximum local-time lead without snapshots");
  simulate->add_flag("--bkl", sim.bkl, "modified BKL in agg-poisson");
  simulate->add_option("--snapshot-dt", sim.snapshot_dt, "snapshot interval");
  simulate->add_option("--frames", sim.frames, "snapshot frames B")->capture_default_str();
  simulate->add_option("--out-dir", sim.out_dir, "directory for pattern files")->capture_default_str();
  simulate->add_option("--csv", sim.csv, "write a CSV summary");
  simulate->add_flag("--print-config", sim.print_config, "print the configuration and exit");
  simulate->add_flag("--audit", sim.audit, "check engine invariants after every event");

  PredictArgs pred;
  auto* predict = app.add_subcommand("predict", "efficiency predictors");
  predict->add_option("--mode", pred.mode, "one-cell | aggregated")->capture_default_str();
  predict->add_option("--dim", pred.dim)->capture_default_str();
  predict->add_option("--n", pred.n)->capture_default_str();
  predict->add_option("--m", pred.m)->capture_default_str();
  predict->add_option("--law", pred.law)->capture_default_str();
  predict->add_option("--rounds", pred.rounds)->capture_default_str();
  predict->add_option("--warmup", pred.warmup, "rounds discarded (default 10%, at least 100)");
  predict->add_option("--replicates", pred.replicates)->capture_default_str();
  predict->add_option("--lag-bound", pred.lag_bound)->capture_default_str();
  predict->add_option("--level", pred.level, "confidence level")->capture_default_str();
  predict->add_option("--seed", pred.seed)->capture_default_str();
  predict->add_option("--pes", pred.pes, "worker threads (0: OpenMP default)")->capture_default_str();
  predict->add_option("--csv", pred.csv);
  predict->add_flag("--print-config", pred.print_config);

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "compare parallel engines against the serial event-list oracle");
  add_common(*verify, ver.common);
  verify->add_option("--seeds", ver.seeds)->delimiter(',')->capture_default_str();
  verify->add_option("--m", ver.ms, "subarray sides (default 4,8)")->delimiter(',');
  verify->add_option("--pes", ver.pes)->delimiter(',')->capture_default_str();
  verify->add_flag("--one-cell", ver.one_cell, "also check async1 and sync1");
  verify->add_flag("--print-config", ver.print_config);

  BenchArgs bench;
  auto* benchcmd = app.add_subcommand("bench", "time a parallel engine against serial-standard");
  add_common(*benchcmd, bench.common);
  benchcmd->add_option("--engine", bench.engine)
      ->check(CLI::IsMember(std::vector<std::string>{"async1", "sync1", "agg", "agg-poisson"}))
      ->capture_default_str();
  benchcmd->add_option("--m", bench.m)->capture_default_str();
  benchcmd->add_option("--pes", bench.pes)->capture_default_str();
  benchcmd->add_flag("--bkl", bench.bkl);
  benchcmd->add_option("--csv", bench.csv);
  benchcmd->add_flag("--print-config", bench.print_config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_bad_arguments;
  }

  try {
    if (simulate->parsed()) return do_simulate(sim, out);
    if (predict->parsed()) return do_predict(pred, out);
    if (verify->parsed()) return do_verify(ver, out);
    return do_bench(bench, out);
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << "\n";
    return exit_io_error;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_io_error;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_bad_arguments;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_verification_failed;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"asyncell"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace asyncell
