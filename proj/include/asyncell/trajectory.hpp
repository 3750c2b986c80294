#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "asyncell/models.hpp"
#include "asyncell/topology.hpp"

namespace asyncell {

/// One arrival: the cell's state just before (old) and after (new) the
/// update at `time`. old == new for an arrival that changed nothing.
struct Event {
  double time = 0.0;
  CellId cell = 0;
  State old_state = 0;
  State new_state = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Canonical order: by time, then by cell id.
inline bool event_less(const Event& a, const Event& b) noexcept {
  return a.time < b.time || (a.time == b.time && a.cell < b.cell);
}

/// Two neighboring cells with bit-identical arrival times.
struct TieFault {
  double time = 0.0;
  CellId a = 0;
  CellId b = 0;
};

/// Counters filled by the engines; fields that do not apply stay zero.
struct EngineStats {
  std::uint64_t arrivals = 0;
  std::uint64_t changes = 0;
  std::uint64_t rounds = 0;          // sync1 rounds
  std::uint64_t eligible_total = 0;  // sum of per-round eligible cells (sync1)
  std::uint64_t blocked_polls = 0;   // wait attempts that had to back off
  std::uint64_t kernel_selections = 0;
  std::uint64_t boundary_selections = 0;
  std::uint64_t poisson_ties = 0;  // equal PE times seen by the Poisson engine
  bool frozen = false;             // BKL ran out of weight

  // audit mode only
  std::uint64_t below_local_time = 0;  // t(c) < T(C) observations
  std::uint64_t nonmonotone_local_time = 0;
  std::uint64_t class_audit_failures = 0;
  std::uint64_t rejected_kernel_moves = 0;
  double max_frontier_lag = 0.0;  // committed time minus slowest snapshot frontier
  double max_lvt_spread = 0.0;    // max_C T(C) - min_C T(C) at commit points
  std::uint64_t snapshots_emitted = 0;
};

/// Result of a run: the initial configuration, every arrival in canonical
/// order, the final configuration and engine counters.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::vector<State> initial, double end_time);

  void add(const Event& e) { events_.push_back(e); }
  void append(std::span<const Event> events);
  /// Sorts events canonically and computes the hash.
  void finish(std::vector<State> final_states);

  double end_time() const noexcept { return end_time_; }
  std::span<const State> initial_states() const noexcept { return initial_; }
  std::span<const State> final_states() const noexcept { return final_; }
  std::span<const Event> events() const noexcept { return events_; }
  std::size_t event_count() const noexcept { return events_.size(); }
  std::size_t change_count() const noexcept;
  std::uint64_t hash() const noexcept { return hash_; }

  /// Configuration after applying every event with time <= tau.
  std::vector<State> configuration_at(double tau) const;

  /// Pairs of neighboring cells with equal event times.
  std::vector<TieFault> neighbor_ties(const NeighborTable& table) const;

  std::optional<TieFault> tie_fault;
  EngineStats stats;

 private:
  double end_time_ = 0.0;
  std::vector<State> initial_;
  std::vector<State> final_;
  std::vector<Event> events_;
  std::uint64_t hash_ = 0;
};

/// 64-bit rolling hash over (time bits, cell, new state) in the given order.
std::uint64_t hash_events(std::span<const Event> events) noexcept;

/// Index of the first position where the event lists differ, or nullopt if identical.
std::optional<std::size_t> first_divergence(std::span<const Event> a, std::span<const Event> b) noexcept;

/// Sum of states, with up = +1 and down/dead = -1.
int magnetization(const CellModel& model, std::span<const State> states) noexcept;

/// Sum of neighbor states of c, the argument of the next-state rule.
inline int neighbor_sum(const NeighborTable& table, std::span<const State> states, CellId c) noexcept {
  int sum = 0;
  for (CellId x : table.of(c)) sum += states[x];
  return sum;
}

}  // namespace asyncell
