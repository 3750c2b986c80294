#include "asyncell/engine_parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

#include "asyncell/bkl.hpp"
#include "asyncell/engine_serial.hpp"
#include "asyncell/rand_streams.hpp"

namespace asyncell {
namespace {

constexpr int step_budget = 256;

/// Cell states shared between workers. Each cell is written only by the
/// worker owning it; other workers read through relaxed atomic loads and
/// rely on the acquire/release pairing of the published times.
class SharedStates {
 public:
  explicit SharedStates(std::vector<State> init) : s_(std::move(init)) {}

  State load(CellId c) const noexcept {
    return std::atomic_ref<State>(const_cast<State&>(s_[c])).load(std::memory_order_relaxed);
  }
  void store(CellId c, State v) noexcept { std::atomic_ref<State>(s_[c]).store(v, std::memory_order_relaxed); }
  int neighbor_sum(const NeighborTable& table, CellId c) const noexcept {
    int sum = 0;
    for (CellId x : table.of(c)) sum += load(x);
    return sum;
  }
  /// Plain view; callers may only read cells they own.
  std::span<const State> owned() const noexcept { return s_; }
  std::vector<State> copy() const { return s_; }

 private:
  std::vector<State> s_;
};

class TimeArray {
 public:
  explicit TimeArray(std::size_t n) : n_(n), t_(std::make_unique<std::atomic<double>[]>(n)) {}
  std::atomic<double>& operator[](std::size_t i) noexcept { return t_[i]; }
  const std::atomic<double>& operator[](std::size_t i) const noexcept { return t_[i]; }
  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
  std::unique_ptr<std::atomic<double>[]> t_;
};

enum class StepResult : std::uint8_t { progressed, blocked, done };

StepResult blocked_or(bool progressed) { return progressed ? StepResult::progressed : StepResult::blocked; }

struct FaultBox {
  std::atomic<bool> abort{false};
  std::mutex mutex;
  std::optional<TieFault> tie;
  std::exception_ptr error;

  void report_tie(double time, CellId a, CellId b) {
    std::lock_guard lock(mutex);
    if (!tie) tie = TieFault{time, std::min(a, b), std::max(a, b)};
    abort.store(true, std::memory_order_relaxed);
  }
  void report_error(std::exception_ptr e) {
    std::lock_guard lock(mutex);
    if (!error) error = e;
    abort.store(true, std::memory_order_relaxed);
  }
  bool aborted() const noexcept { return abort.load(std::memory_order_relaxed); }
};

void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_ia32_pause();
#endif
}

void backoff(unsigned idle) {
  if (idle < 8) {
    for (int i = 0; i < 16; ++i) cpu_relax();
  } else if (idle < 256) {
    std::this_thread::yield();
  } else {
    std::this_thread::sleep_for(std::chrono::microseconds(20));
  }
}

void jitter_pause() {
  thread_local std::minstd_rand rng{std::random_device{}()};
  const auto x = rng();
  if (x % 8 == 0) {
    std::this_thread::sleep_for(std::chrono::microseconds(x / 8 % 30));
  } else if (x % 8 == 1) {
    std::this_thread::yield();
  }
}

/// Deals `pes` logical PEs round-robin over the workers and calls
/// step(pe) until every PE is done or the run aborts.
template <class Step>
void run_pool(int workers, std::size_t pes, FaultBox& box, bool jitter, const Step& step) {
#pragma omp parallel num_threads(workers)
  {
    const auto tid = static_cast<std::size_t>(omp_get_thread_num());
    const auto nt = static_cast<std::size_t>(omp_get_num_threads());
    std::vector<std::size_t> mine;
    for (std::size_t p = tid; p < pes; p += nt) mine.push_back(p);
    unsigned idle = 0;
    try {
      while (!mine.empty() && !box.aborted()) {
        bool progress = false;
        for (std::size_t i = 0; i < mine.size();) {
          const StepResult r = step(mine[i]);
          if (r == StepResult::done) {
            mine[i] = mine.back();
            mine.pop_back();
            progress = true;
            continue;
          }
          progress = progress || r == StepResult::progressed;
          ++i;
        }
        if (progress) {
          idle = 0;
        } else {
          backoff(idle++);
        }
        if (jitter) jitter_pause();
      }
    } catch (...) {
      box.report_error(std::current_exception());
    }
  }
  if (box.error) std::rethrow_exception(box.error);
}

void merge_stats(EngineStats& into, const EngineStats& from) {
  into.arrivals += from.arrivals;
  into.changes += from.changes;
  into.blocked_polls += from.blocked_polls;
  into.kernel_selections += from.kernel_selections;
  into.boundary_selections += from.boundary_selections;
  into.poisson_ties += from.poisson_ties;
  into.frozen = into.frozen || from.frozen;
  into.below_local_time += from.below_local_time;
  into.nonmonotone_local_time += from.nonmonotone_local_time;
  into.class_audit_failures += from.class_audit_failures;
  into.rejected_kernel_moves += from.rejected_kernel_moves;
  into.max_frontier_lag = std::max(into.max_frontier_lag, from.max_frontier_lag);
  into.max_lvt_spread = std::max(into.max_lvt_spread, from.max_lvt_spread);
}

void check_config(const EngineConfig& config, const CellModel& model, const NeighborTable& table) {
  if (config.workers < 1) throw std::invalid_argument("worker count must be at least 1");
  if (!(config.end_time >= 0.0)) throw std::invalid_argument("end time must be non-negative");
  if (config.lag_bound && !(*config.lag_bound > 0.0)) throw std::invalid_argument("lag bound must be positive");
  if (static_cast<std::size_t>(model.neighbor_count()) != table.degree()) {
    throw std::invalid_argument("model neighbor count does not match the neighborhood");
  }
}

/// Per-PE record kept private to the worker running the PE.
struct PeLog {
  std::vector<Event> events;
  EngineStats stats;
  double last_published = -std::numeric_limits<double>::infinity();

  void record(const Event& e, bool keep) {
    ++stats.arrivals;
    if (e.old_state != e.new_state) ++stats.changes;
    if (keep) events.push_back(e);
  }
};

Trajectory assemble(std::vector<State> initial, const EngineConfig& config, std::span<PeLog> logs,
                    std::vector<State> final_states, const FaultBox& box) {
  Trajectory traj(std::move(initial), config.end_time);
  for (auto& log : logs) {
    traj.append(log.events);
    merge_stats(traj.stats, log.stats);
  }
  traj.tie_fault = box.tie;
  traj.finish(std::move(final_states));
  return traj;
}

std::unique_ptr<FrameRing> make_ring(const EngineConfig& config, const Partition& partition) {
  if (config.snapshots) {
    return std::make_unique<FrameRing>(partition, config.snapshots->frames, config.snapshots->dt, config.end_time,
                                       config.snapshots->sink);
  }
  if (config.lag_bound) {
    return std::make_unique<FrameRing>(partition, 1, *config.lag_bound, config.end_time, SnapshotSink{});
  }
  return nullptr;
}

bool store_due(FrameRing* ring, SubarrayId c, std::uint64_t& next_k, double upto, std::span<const State> states) {
  return ring == nullptr || emit_due_snapshots(*ring, c, next_k, upto, states);
}

void finish_ring(FrameRing* ring, const FaultBox& box, EngineStats& stats) {
  if (ring == nullptr) return;
  ring->drain();
  ring->rethrow_if_failed();
  stats.snapshots_emitted = ring->emitted_count();
  if (!box.aborted() && ring->due(ring->next_emit())) throw std::logic_error("snapshot frames left incomplete");
}

void publish(std::atomic<double>& slot, double value, PeLog& log, bool audit) {
  if (audit && value < log.last_published) ++log.stats.nonmonotone_local_time;
  log.last_published = value;
  slot.store(value, std::memory_order_release);
}

void audit_commit(PeLog& log, double time, const FrameRing* ring, const TimeArray& local_times, double end_time) {
  if (ring != nullptr) {
    const double lag = time - static_cast<double>(ring->min_frontier()) * ring->dt();
    log.stats.max_frontier_lag = std::max(log.stats.max_frontier_lag, lag);
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < local_times.size(); ++i) {
    const double v = std::min(local_times[i].load(std::memory_order_acquire), end_time);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  log.stats.max_lvt_spread = std::max(log.stats.max_lvt_spread, hi - lo);
}

}  // namespace

WaitResult wait_until(double local, std::span<const double> observed) noexcept {
  bool tie = false;
  for (double t : observed) {
    if (t < local) return WaitResult::block;
    if (t == local) tie = true;
  }
  return tie ? WaitResult::tie : WaitResult::proceed;
}

Trajectory run_async_one_cell(const EngineConfig& config, const CellModel& model, const NeighborTable& table,
                              const ArrivalLaw& law) {
  check_config(config, model, table);
  const std::size_t n = table.lattice().cell_count();
  std::vector<State> initial = initial_configuration(model, config.init, config.seed, n);
  SharedStates s(initial);
  const ArrivalClock clock(law, config.seed);
  std::vector<Stream> streams;
  streams.reserve(n);
  TimeArray t(n);
  for (CellId c = 0; c < n; ++c) {
    streams.emplace_back(config.seed, StreamId{StreamKind::per_cell, c});
    t[c].store(clock.next(c, 0.0, streams[c]), std::memory_order_relaxed);
  }
  std::vector<PeLog> logs(n);
  FaultBox box;

  const auto step = [&](std::size_t pe) {
    const auto c = static_cast<CellId>(pe);
    PeLog& log = logs[pe];
    bool progressed = false;
    for (int budget = 0; budget < step_budget; ++budget) {
      const double tc = t[c].load(std::memory_order_relaxed);
      if (tc >= config.end_time) return StepResult::done;
      for (CellId x : table.of(c)) {
        if (config.jitter) jitter_pause();
        const double tx = t[x].load(std::memory_order_acquire);
        const WaitResult w = wait_until(tc, {&tx, 1});
        if (w == WaitResult::block) {
          ++log.stats.blocked_polls;
          return blocked_or(progressed);
        }
        if (w == WaitResult::tie) {
          box.report_tie(tc, c, x);
          return StepResult::blocked;
        }
      }
      const State old = s.load(c);
      const State next = model.next_state(old, s.neighbor_sum(table, c), streams[c].next_uniform());
      s.store(c, next);
      t[c].store(clock.next(c, tc, streams[c]), std::memory_order_release);
      log.record({tc, c, old, next}, config.record_events);
      progressed = true;
    }
    return blocked_or(progressed);
  };
  run_pool(config.workers, n, box, config.jitter, step);
  return assemble(std::move(initial), config, logs, s.copy(), box);
}

Trajectory run_sync_one_cell(const EngineConfig& config, const CellModel& model, const NeighborTable& table,
                             const ArrivalLaw& law) {
  check_config(config, model, table);
  const std::size_t n = table.lattice().cell_count();
  std::vector<State> initial = initial_configuration(model, config.init, config.seed, n);
  std::vector<State> s = initial;
  std::vector<State> next_s(n);
  const ArrivalClock clock(law, config.seed);
  std::vector<Stream> streams;
  streams.reserve(n);
  std::vector<double> t(n);
  std::vector<double> next_t(n);
  std::vector<std::uint8_t> eligible(n, 0);
  for (CellId c = 0; c < n; ++c) {
    streams.emplace_back(config.seed, StreamId{StreamKind::per_cell, c});
    t[c] = clock.next(c, 0.0, streams[c]);
  }
  std::vector<PeLog> logs(static_cast<std::size_t>(config.workers));
  const auto count = static_cast<std::int64_t>(n);
  EngineStats rounds;

  for (;;) {
    std::uint64_t n0 = 0;
    // compute phase; the implicit barrier at the end is barrier 1
#pragma omp parallel for num_threads(config.workers) schedule(static) reduction(+ : n0)
    for (std::int64_t i = 0; i < count; ++i) {
      const auto c = static_cast<CellId>(i);
      double lowest = std::numeric_limits<double>::infinity();
      for (CellId x : table.of(c)) lowest = std::min(lowest, t[x]);
      eligible[c] = t[c] < config.end_time && t[c] <= lowest;
      if (!eligible[c]) continue;
      ++n0;
      int sum = 0;
      for (CellId x : table.of(c)) sum += s[x];
      next_s[c] = model.next_state(s[c], sum, streams[c].next_uniform());
      next_t[c] = clock.next(c, t[c], streams[c]);
      logs[static_cast<std::size_t>(omp_get_thread_num())].record({t[c], c, s[c], next_s[c]}, config.record_events);
    }
    if (n0 == 0) break;
    ++rounds.rounds;
    rounds.eligible_total += n0;
    // publish phase; barrier 2
#pragma omp parallel for num_threads(config.workers) schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
      const auto c = static_cast<CellId>(i);
      if (!eligible[c]) continue;
      s[c] = next_s[c];
      t[c] = next_t[c];
    }
  }
  FaultBox box;
  Trajectory traj = assemble(std::move(initial), config, logs, std::move(s), box);
  traj.stats.rounds = rounds.rounds;
  traj.stats.eligible_total = rounds.eligible_total;
  return traj;
}

Trajectory run_aggregated_general(const EngineConfig& config, const CellModel& model, const Partition& partition,
                                  const ArrivalLaw& law) {
  const NeighborTable& table = partition.neighbor_table();
  check_config(config, model, table);
  const std::size_t n = table.lattice().cell_count();
  const std::size_t pes = partition.subarray_count();
  std::vector<State> initial = initial_configuration(model, config.init, config.seed, n);
  SharedStates s(initial);
  const ArrivalClock clock(law, config.seed);
  std::vector<Stream> streams;
  streams.reserve(n);
  TimeArray t(n);
  TimeArray local_time(pes);
  auto ring = make_ring(config, partition);

  enum class Phase : std::uint8_t { select, snapshot, wait, update };
  using Entry = std::pair<double, CellId>;
  struct Pe {
    std::vector<Entry> heap;  // min-heap on (t, cell)
    Phase phase = Phase::select;
    CellId cur = 0;
    double cur_t = 0.0;
    std::uint64_t next_k = 0;
  };
  std::vector<Pe> pe_state(pes);
  std::vector<PeLog> logs(pes);

  for (CellId c = 0; c < n; ++c) {
    streams.emplace_back(config.seed, StreamId{StreamKind::per_cell, c});
    t[c].store(clock.next(c, 0.0, streams[c]), std::memory_order_relaxed);
  }
  for (SubarrayId p = 0; p < pes; ++p) {
    auto& heap = pe_state[p].heap;
    for (CellId c : partition.cells_of(p)) heap.emplace_back(t[c].load(std::memory_order_relaxed), c);
    std::make_heap(heap.begin(), heap.end(), std::greater<>{});
    publish(local_time[p], heap.front().first, logs[p], config.audit);
  }
  FaultBox box;

  const auto step = [&](std::size_t index) {
    const auto p = static_cast<SubarrayId>(index);
    Pe& pe = pe_state[p];
    PeLog& log = logs[p];
    bool progressed = false;
    for (int budget = 0; budget < step_budget; ++budget) {
      switch (pe.phase) {
        case Phase::select: {
          pe.cur_t = pe.heap.front().first;
          pe.cur = pe.heap.front().second;
          // published before any snapshot store so a PE blocked on a frame
          // never hides its progress from neighbors
          publish(local_time[p], pe.cur_t, log, config.audit);
          if (config.audit) {
            for (CellId c : partition.cells_of(p)) {
              if (t[c].load(std::memory_order_relaxed) < pe.cur_t) ++log.stats.below_local_time;
            }
          }
          pe.phase = Phase::snapshot;
          [[fallthrough]];
        }
        case Phase::snapshot: {
          if (!store_due(ring.get(), p, pe.next_k, pe.cur_t, s.owned())) return blocked_or(progressed);
          if (pe.cur_t >= config.end_time) return StepResult::done;
          pe.phase = Phase::wait;
          [[fallthrough]];
        }
        case Phase::wait: {
          for (SubarrayId other : partition.w_set(pe.cur)) {
            if (config.jitter) jitter_pause();
            const double seen = local_time[other].load(std::memory_order_acquire);
            const WaitResult w = wait_until(pe.cur_t, {&seen, 1});
            if (w == WaitResult::block) {
              ++log.stats.blocked_polls;
              return blocked_or(progressed);
            }
            if (w == WaitResult::tie) {
              for (CellId x : table.of(pe.cur)) {
                if (partition.subarray_of(x) == other && t[x].load(std::memory_order_acquire) == pe.cur_t) {
                  box.report_tie(pe.cur_t, pe.cur, x);
                  return StepResult::blocked;
                }
              }
            }
          }
          pe.phase = Phase::update;
          [[fallthrough]];
        }
        case Phase::update: {
          const CellId c = pe.cur;
          const State old = s.load(c);
          const State next = model.next_state(old, s.neighbor_sum(table, c), streams[c].next_uniform());
          s.store(c, next);
          const double nt = clock.next(c, pe.cur_t, streams[c]);
          t[c].store(nt, std::memory_order_release);
          std::pop_heap(pe.heap.begin(), pe.heap.end(), std::greater<>{});
          pe.heap.back() = {nt, c};
          std::push_heap(pe.heap.begin(), pe.heap.end(), std::greater<>{});
          log.record({pe.cur_t, c, old, next}, config.record_events);
          if (config.audit) audit_commit(log, pe.cur_t, ring.get(), local_time, config.end_time);
          pe.phase = Phase::select;
          progressed = true;
          break;
        }
      }
    }
    return blocked_or(progressed);
  };
  run_pool(config.workers, pes, box, config.jitter, step);
  Trajectory traj = assemble(std::move(initial), config, logs, s.copy(), box);
  finish_ring(ring.get(), box, traj.stats);
  return traj;
}

Trajectory run_aggregated_poisson(const EngineConfig& config, const CellModel& model, const Partition& partition,
                                  double rate) {
  const NeighborTable& table = partition.neighbor_table();
  check_config(config, model, table);
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  const std::size_t n = table.lattice().cell_count();
  const std::size_t pes = partition.subarray_count();
  const std::size_t k = partition.cells_per_subarray();
  std::vector<State> initial = initial_configuration(model, config.init, config.seed, n);
  SharedStates s(initial);
  TimeArray local_time(pes);
  auto ring = make_ring(config, partition);

  enum class Phase : std::uint8_t { snapshot, select, wait, update };
  struct Pe {
    Stream stream;
    std::optional<BklRegion> region;
    Phase phase = Phase::snapshot;
    double now = 0.0;
    CellId cur = 0;
    bool kernel_pick = false;
    std::uint64_t next_k = 0;
  };
  std::vector<Pe> pe_state(pes);
  std::vector<PeLog> logs(pes);

  const auto next_time = [&](Pe& pe, PeLog& log) {
    if (!pe.region) return cumulative_next_arrival(rate, k, pe.now, pe.stream.next_uniform());
    const double w = pe.region->classes().total_weight();
    if (!(w > 0.0)) {
      log.stats.frozen = true;
      return std::max(pe.now, config.end_time);
    }
    return bkl_advance_time(pe.now, rate, w, pe.stream.next_uniform());
  };

  for (SubarrayId p = 0; p < pes; ++p) {
    Pe& pe = pe_state[p];
    pe.stream = Stream(config.seed, {StreamKind::per_pe, p});
    if (config.bkl) {
      pe.region.emplace(partition, p, model, true);
      pe.region->rebuild(s.owned());
    }
    pe.now = next_time(pe, logs[p]);
    publish(local_time[p], pe.now, logs[p], config.audit);
  }
  FaultBox box;

  const auto step = [&](std::size_t index) {
    const auto p = static_cast<SubarrayId>(index);
    Pe& pe = pe_state[p];
    PeLog& log = logs[p];
    bool progressed = false;
    for (int budget = 0; budget < step_budget; ++budget) {
      switch (pe.phase) {
        case Phase::snapshot: {
          if (!store_due(ring.get(), p, pe.next_k, pe.now, s.owned())) return blocked_or(progressed);
          if (pe.now >= config.end_time) return StepResult::done;
          pe.phase = Phase::select;
          [[fallthrough]];
        }
        case Phase::select: {
          if (pe.region) {
            const double r1 = pe.stream.next_uniform();
            const auto pick = pe.region->classes().select(r1, pe.stream.next_uniform());
            pe.cur = pe.region->cell(pick.local);
            pe.kernel_pick = pick.cls != 0;
          } else {
            auto i = static_cast<std::size_t>(pe.stream.next_uniform() * static_cast<double>(k));
            if (i >= k) i = k - 1;
            pe.cur = partition.cells_of(p)[i];
            pe.kernel_pick = false;
          }
          pe.phase = Phase::wait;
          [[fallthrough]];
        }
        case Phase::wait: {
          for (SubarrayId other : partition.w_set(pe.cur)) {
            if (config.jitter) jitter_pause();
            const double seen = local_time[other].load(std::memory_order_acquire);
            const WaitResult w = wait_until(pe.now, {&seen, 1});
            if (w == WaitResult::block) {
              ++log.stats.blocked_polls;
              return blocked_or(progressed);
            }
            if (w == WaitResult::tie) ++log.stats.poisson_ties;
          }
          pe.phase = Phase::update;
          [[fallthrough]];
        }
        case Phase::update: {
          const CellId c = pe.cur;
          const State old = s.load(c);
          const int sum = s.neighbor_sum(table, c);
          State next = old;
          if (pe.kernel_pick) {
            ++log.stats.kernel_selections;
            if (config.audit && !(model.change_probability(old, sum) > 0.0)) ++log.stats.rejected_kernel_moves;
            next = model.flipped(old);
          } else {
            if (pe.region) ++log.stats.boundary_selections;
            next = model.next_state(old, sum, pe.stream.next_uniform());
          }
          s.store(c, next);
          if (pe.region && next != old) pe.region->update_after_change(c, s.owned());
          log.record({pe.now, c, old, next}, config.record_events);
          if (config.audit) {
            if (pe.region && !pe.region->audit(s.owned())) ++log.stats.class_audit_failures;
            audit_commit(log, pe.now, ring.get(), local_time, config.end_time);
          }
          pe.now = next_time(pe, log);
          publish(local_time[p], pe.now, log, config.audit);
          pe.phase = Phase::snapshot;
          progressed = true;
          break;
        }
      }
    }
    return blocked_or(progressed);
  };
  run_pool(config.workers, pes, box, config.jitter, step);
  Trajectory traj = assemble(std::move(initial), config, logs, s.copy(), box);
  finish_ring(ring.get(), box, traj.stats);
  return traj;
}

}  // namespace asyncell
