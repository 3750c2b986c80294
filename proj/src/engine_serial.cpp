#include "asyncell/engine_serial.hpp"

#include <cmath>
#include <functional>
#include <queue>
#include <stdexcept>
#include <utility>

#include "asyncell/bkl.hpp"
#include "asyncell/rand_streams.hpp"

namespace asyncell {
namespace {

void check_common(const CellModel& model, const NeighborTable& table, double end_time) {
  if (!(end_time >= 0.0)) throw std::invalid_argument("end time must be non-negative");
  if (static_cast<std::size_t>(model.neighbor_count()) != table.degree()) {
    throw std::invalid_argument("model neighbor count does not match the neighborhood");
  }
}

class Recorder {
 public:
  Recorder(Trajectory& traj, const SerialOptions& options) : traj_(traj), options_(options) {}

  bool limit_reached() const noexcept {
    return options_.max_events && traj_.stats.arrivals >= *options_.max_events;
  }

  void record(const Event& e, std::span<const State> states) {
    ++traj_.stats.arrivals;
    if (e.old_state != e.new_state) ++traj_.stats.changes;
    if (options_.record_events) traj_.add(e);
    if (options_.observer) options_.observer(e, states);
  }

 private:
  Trajectory& traj_;
  const SerialOptions& options_;
};

}  // namespace

std::vector<State> initial_configuration(const CellModel& model, InitialConfig init, std::uint64_t seed,
                                         std::size_t cell_count) {
  std::vector<State> s(cell_count);
  for (CellId c = 0; c < cell_count; ++c) s[c] = initial_state(model, init, seed, c);
  return s;
}

Trajectory run_serial_standard(const CellModel& model, const NeighborTable& table, double rate,
                               const SerialOptions& options) {
  check_common(model, table, options.end_time);
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  const std::size_t n = table.lattice().cell_count();
  std::vector<State> s = initial_configuration(model, options.init, options.seed, n);
  Trajectory traj(s, options.end_time);
  Recorder rec(traj, options);
  Stream stream(options.seed, {StreamKind::scalar, 0});
  double t = 0.0;
  while (!rec.limit_reached()) {
    t = cumulative_next_arrival(rate, n, t, stream.next_uniform());
    if (t >= options.end_time) break;
    auto c = static_cast<CellId>(stream.next_uniform() * static_cast<double>(n));
    if (c >= n) c = static_cast<CellId>(n - 1);
    const State old = s[c];
    s[c] = model.next_state(old, neighbor_sum(table, s, c), stream.next_uniform());
    rec.record({t, c, old, s[c]}, s);
  }
  traj.finish(std::move(s));
  return traj;
}

Trajectory run_serial_eventlist(const CellModel& model, const NeighborTable& table, const ArrivalLaw& law,
                                const SerialOptions& options) {
  check_common(model, table, options.end_time);
  const std::size_t n = table.lattice().cell_count();
  std::vector<State> s = initial_configuration(model, options.init, options.seed, n);
  Trajectory traj(s, options.end_time);
  Recorder rec(traj, options);
  const ArrivalClock clock(law, options.seed);

  std::vector<Stream> streams;
  streams.reserve(n);
  std::vector<double> t(n);
  using Entry = std::pair<double, CellId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (CellId c = 0; c < n; ++c) {
    streams.emplace_back(options.seed, StreamId{StreamKind::per_cell, c});
    t[c] = clock.next(c, 0.0, streams[c]);
    heap.emplace(t[c], c);
  }

  while (!heap.empty() && !rec.limit_reached()) {
    const auto [time, c] = heap.top();
    if (time >= options.end_time) break;
    heap.pop();
    for (CellId x : table.of(c)) {
      if (t[x] == time) {
        traj.tie_fault = TieFault{time, std::min(c, x), std::max(c, x)};
        break;
      }
    }
    if (traj.tie_fault) break;
    const State old = s[c];
    s[c] = model.next_state(old, neighbor_sum(table, s, c), streams[c].next_uniform());
    t[c] = clock.next(c, time, streams[c]);
    heap.emplace(t[c], c);
    rec.record({time, c, old, s[c]}, s);
  }
  traj.finish(std::move(s));
  return traj;
}

Trajectory run_serial_bkl(const CellModel& model, const NeighborTable& table, double rate,
                          const SerialOptions& options) {
  check_common(model, table, options.end_time);
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  const Lattice& lattice = table.lattice();
  const Partition whole(lattice, lattice.side(), table.degree_q(), table.kind());
  const std::size_t n = lattice.cell_count();
  std::vector<State> s = initial_configuration(model, options.init, options.seed, n);
  Trajectory traj(s, options.end_time);
  Recorder rec(traj, options);

  BklRegion region(whole, 0, model, false);
  region.rebuild(s);
  Stream stream(options.seed, {StreamKind::scalar, 0});
  double t = 0.0;
  while (!rec.limit_reached()) {
    const double w = region.classes().total_weight();
    if (!(w > 0.0)) {
      traj.stats.frozen = true;
      break;
    }
    t = bkl_advance_time(t, rate, w, stream.next_uniform());
    if (t >= options.end_time) break;
    const double r1 = stream.next_uniform();
    const auto pick = region.classes().select(r1, stream.next_uniform());
    const CellId c = region.cell(pick.local);
    const State old = s[c];
    s[c] = model.flipped(old);
    region.update_after_change(c, s);
    rec.record({t, c, old, s[c]}, s);
  }
  traj.finish(std::move(s));
  return traj;
}

}  // namespace asyncell
