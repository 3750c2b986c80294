#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "asyncell/models.hpp"
#include "asyncell/topology.hpp"

namespace asyncell {

/// Receives complete snapshots in increasing index order. `image` is indexed by cell id.
using SnapshotSink = std::function<void(std::uint64_t index, double time, std::span<const State> image)>;

/// B full-lattice frames filled cooperatively by the PEs.
///
/// Snapshot K goes to frame K mod B and is accepted only once snapshot
/// K - B has been drained. Each PE stores its own subarray; the frame is
/// complete when every subarray has stored. One drain agent at a time (any
/// caller may become it) hands complete frames to the sink in order.
class FrameRing {
 public:
  FrameRing(const Partition& partition, std::size_t frames, double dt, double end_time, SnapshotSink sink,
            std::uint64_t first_index = 0);

  std::size_t frames() const noexcept { return frames_.size(); }
  double dt() const noexcept { return dt_; }
  std::uint64_t first_index() const noexcept { return first_; }

  /// True when snapshot K is part of the run (K dt < end time).
  bool due(std::uint64_t k) const noexcept { return static_cast<double>(k) * dt_ < end_time_; }

  /// Stores subarray C's cells of `states` (global ids) as snapshot K.
  /// Returns false, storing nothing, while the frame still holds K - B.
  bool try_store(SubarrayId c, std::uint64_t k, std::span<const State> states);

  /// Emits every complete frame that is next in order. Returns the emitted
  /// indices; empty when another caller is draining. Sink exceptions are
  /// captured, see `error()`.
  std::vector<std::uint64_t> drain();

  /// Index of the next snapshot the sink will receive.
  std::uint64_t next_emit() const noexcept { return next_emit_.load(std::memory_order_acquire); }
  std::uint64_t emitted_count() const noexcept { return next_emit() - first_; }
  /// Snapshot index PE C will store next.
  std::uint64_t frontier(SubarrayId c) const noexcept { return frontier_[c].value.load(std::memory_order_acquire); }
  std::uint64_t min_frontier() const noexcept;

  bool failed() const noexcept { return failed_.load(std::memory_order_acquire); }
  /// Rethrows a captured sink exception, if any.
  void rethrow_if_failed() const;

 private:
  struct alignas(64) Counter {
    std::atomic<std::uint64_t> value{0};
  };

  const Partition* partition_;
  double dt_;
  double end_time_;
  SnapshotSink sink_;
  std::uint64_t first_;
  std::vector<std::vector<State>> frames_;
  std::unique_ptr<Counter[]> slot_;  // snapshot index each frame accepts
  std::unique_ptr<Counter[]> fill_;  // subarrays stored so far
  std::unique_ptr<Counter[]> frontier_;
  std::atomic<std::uint64_t> next_emit_;
  std::mutex drain_mutex_;
  std::atomic<bool> failed_{false};
  std::exception_ptr error_;
};

/// Stores snapshots K, K+1, ... of subarray C while K dt < new_t and K is
/// due, advancing K. Returns false, with K at the busy snapshot, when a
/// frame is still in use; the caller retries later. Rethrows sink errors.
bool emit_due_snapshots(FrameRing& ring, SubarrayId c, std::uint64_t& k, double new_t,
                        std::span<const State> states);

/// Image read back from a pattern file.
struct PatternImage {
  int width = 0;
  int height = 0;
  double time = 0.0;
  std::vector<std::uint8_t> bits;  // row-major, 1 = up/live
};

/// Lattice image as a bitmap: width = side, height = N / side (3-D slices stacked).
PatternImage make_pattern(const CellModel& model, const Lattice& lattice, std::span<const State> image, double time);

/// Writes `P1 <w> <h> t=<time>` then rows of space-separated 0/1.
/// Throws std::ios_base::failure when the file cannot be written.
void write_pattern(const PatternImage& image, const std::filesystem::path& path);
PatternImage read_pattern(const std::filesystem::path& path);

/// `pattern_K<index>.pbm`
std::filesystem::path pattern_path(const std::filesystem::path& dir, std::uint64_t index);

}  // namespace asyncell
