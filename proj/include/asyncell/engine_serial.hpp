#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include "asyncell/asynchrony.hpp"
#include "asyncell/models.hpp"
#include "asyncell/topology.hpp"
#include "asyncell/trajectory.hpp"

namespace asyncell {

struct SerialOptions {
  std::uint64_t seed = 1;
  double end_time = 1.0;
  InitialConfig init = InitialConfig::random;
  /// Keep every event in the trajectory (the hash needs them).
  bool record_events = true;
  /// Stop after this many arrivals even before end_time.
  std::optional<std::uint64_t> max_events;
  /// Called after each arrival with the event and the updated configuration.
  std::function<void(const Event&, std::span<const State>)> observer;
};

/// Single global Poisson stream of rate rate*N; each arrival picks a
/// uniform cell. Draw order per arrival: time, cell, state.
Trajectory run_serial_standard(const CellModel& model, const NeighborTable& table, double rate,
                               const SerialOptions& options);

/// Per-cell streams processed in global (time, cell) order with a binary
/// heap. Stops with `tie_fault` set when two neighbors share a time.
Trajectory run_serial_eventlist(const CellModel& model, const NeighborTable& table, const ArrivalLaw& law,
                                const SerialOptions& options);

/// Rejection-free n-fold way: every event is a change. Draw order per
/// event: time, class, cell.
Trajectory run_serial_bkl(const CellModel& model, const NeighborTable& table, double rate,
                          const SerialOptions& options);

std::vector<State> initial_configuration(const CellModel& model, InitialConfig init, std::uint64_t seed,
                                         std::size_t cell_count);

}  // namespace asyncell
