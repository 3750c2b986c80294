#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "asyncell/asynchrony.hpp"
#include "asyncell/models.hpp"
#include "asyncell/snapshots.hpp"
#include "asyncell/topology.hpp"
#include "asyncell/trajectory.hpp"

namespace asyncell {

struct SnapshotOptions {
  double dt = 1.0;
  std::size_t frames = 2;
  SnapshotSink sink;  // may be empty
};

/// Settings shared by the parallel engines.
struct EngineConfig {
  /// Physical workers; logical PEs (cells or subarrays) are dealt round-robin.
  int workers = 1;
  std::uint64_t seed = 1;
  double end_time = 1.0;
  InitialConfig init = InitialConfig::random;
  /// Without snapshots, a bound on how far a PE may run ahead (one frame of this width).
  std::optional<double> lag_bound;
  /// Modified BKL inside the Poisson aggregated engine.
  bool bkl = false;
  /// Extra invariant checks per event (slow), reported in EngineStats.
  bool audit = false;
  /// Random sleeps between polls, for scheduling stress tests.
  bool jitter = false;
  bool record_events = true;
  std::optional<SnapshotOptions> snapshots;
};

enum class WaitResult : std::uint8_t { proceed, block, tie };

/// Proceed iff local <= every observed time; an exactly equal time is a tie.
WaitResult wait_until(double local, std::span<const double> observed) noexcept;

/// One logical PE per cell, each waiting until its time is at most every
/// neighbor's time. Stops with `tie_fault` set on equal neighbor times.
Trajectory run_async_one_cell(const EngineConfig& config, const CellModel& model, const NeighborTable& table,
                              const ArrivalLaw& law);

/// Round-structured variant: all eligible cells compute from the same
/// configuration, then publish together. Ties are handled natively.
Trajectory run_sync_one_cell(const EngineConfig& config, const CellModel& model, const NeighborTable& table,
                             const ArrivalLaw& law);

/// One logical PE per subarray, per-cell streams; the trajectory does not
/// depend on the partition or on the worker count.
Trajectory run_aggregated_general(const EngineConfig& config, const CellModel& model, const Partition& partition,
                                  const ArrivalLaw& law);

/// One cumulative Poisson stream of rate rate*k per subarray of k cells,
/// with a uniformly chosen cell per arrival (or modified BKL with `bkl`).
Trajectory run_aggregated_poisson(const EngineConfig& config, const CellModel& model, const Partition& partition,
                                  double rate);

}  // namespace asyncell
