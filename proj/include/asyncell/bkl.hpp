#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "asyncell/models.hpp"
#include "asyncell/topology.hpp"

namespace asyncell {

/// Cells of one region grouped by flip probability.
///
/// Class 0 is the fixed boundary class (weight = its size); classes 1..d
/// hold one distinct change probability each, in increasing order. Cells
/// are addressed by a local index in [0, size).
class ClassPartition {
 public:
  static constexpr int unassigned = -1;

  ClassPartition(const CellModel& model, std::size_t size);

  std::size_t size() const noexcept { return class_of_.size(); }
  /// d + 1, including the boundary class.
  int class_count() const noexcept { return static_cast<int>(prob_.size()); }
  /// p_k for k >= 1; 1 for the boundary class.
  double probability(int k) const noexcept { return prob_[static_cast<std::size_t>(k)]; }
  int class_of_key(int key) const noexcept { return key_class_[static_cast<std::size_t>(key)]; }

  int class_of(std::uint32_t local) const noexcept { return class_of_[local]; }
  std::size_t class_size(int k) const noexcept { return members_[static_cast<std::size_t>(k)].size(); }
  std::span<const std::uint32_t> members(int k) const noexcept { return members_[static_cast<std::size_t>(k)]; }

  /// Moves (or inserts) a cell into class k in constant time.
  void assign(std::uint32_t local, int k);

  double weight(int k) const noexcept { return static_cast<double>(class_size(k)) * probability(k); }
  /// |Gamma_0| + sum_k |Gamma_k| p_k, recomputed exactly.
  double total_weight() const noexcept;

  struct Pick {
    int cls = 0;
    std::uint32_t local = 0;
  };
  /// Class by inverse CDF over the weights using r1, then a uniform member
  /// using r2. Throws std::domain_error when the total weight is zero.
  Pick select(double r1, double r2) const;

 private:
  std::vector<double> prob_;
  std::vector<int> key_class_;
  std::vector<int> class_of_;
  std::vector<std::uint32_t> slot_;
  std::vector<std::vector<std::uint32_t>> members_;
};

/// T - ln(r) / (rate * W). Throws for r outside (0,1) or W <= 0.
double bkl_advance_time(double t, double rate, double total_weight, double r);

/// Class bookkeeping for one subarray of a partition.
///
/// With `boundary_class` the non-kernel cells are pinned in class 0 and
/// only kernel cells are classified by state.
class BklRegion {
 public:
  BklRegion(const Partition& partition, SubarrayId subarray, const CellModel& model, bool boundary_class);

  const ClassPartition& classes() const noexcept { return classes_; }
  SubarrayId subarray() const noexcept { return subarray_; }
  CellId cell(std::uint32_t local) const noexcept { return cells_[local]; }
  bool pinned(CellId c) const noexcept { return boundary_ && !partition_->is_kernel(c); }

  /// Class the cell belongs to under the configuration `states` (global ids).
  int classify(CellId c, std::span<const State> states) const;
  /// Classifies every cell from scratch.
  void rebuild(std::span<const State> states);
  /// Reclassifies c and its same-subarray neighbors after c changed state.
  void update_after_change(CellId c, std::span<const State> states);
  /// True when every stored class matches a fresh classification.
  bool audit(std::span<const State> states) const;

 private:
  const Partition* partition_;
  const CellModel* model_;
  SubarrayId subarray_;
  bool boundary_;
  std::span<const CellId> cells_;
  ClassPartition classes_;
};

}  // namespace asyncell
