#include "asyncell/bkl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "asyncell/trajectory.hpp"

namespace asyncell {

ClassPartition::ClassPartition(const CellModel& model, std::size_t size)
    : class_of_(size, unassigned), slot_(size, 0) {
  std::vector<double> distinct;
  for (std::size_t k = 0; k < model.key_count(); ++k) distinct.push_back(model.key_probability(static_cast<int>(k)));
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  prob_.push_back(1.0);
  prob_.insert(prob_.end(), distinct.begin(), distinct.end());
  key_class_.resize(model.key_count());
  for (std::size_t k = 0; k < model.key_count(); ++k) {
    const auto it = std::lower_bound(distinct.begin(), distinct.end(), model.key_probability(static_cast<int>(k)));
    key_class_[k] = 1 + static_cast<int>(it - distinct.begin());
  }
  members_.resize(prob_.size());
}

void ClassPartition::assign(std::uint32_t local, int k) {
  const int old = class_of_[local];
  if (old == k) return;
  if (old != unassigned) {
    auto& list = members_[static_cast<std::size_t>(old)];
    const std::uint32_t moved = list.back();
    list[slot_[local]] = moved;
    slot_[moved] = slot_[local];
    list.pop_back();
  }
  auto& list = members_[static_cast<std::size_t>(k)];
  slot_[local] = static_cast<std::uint32_t>(list.size());
  list.push_back(local);
  class_of_[local] = k;
}

double ClassPartition::total_weight() const noexcept {
  double w = 0.0;
  for (int k = 0; k < class_count(); ++k) w += weight(k);
  return w;
}

ClassPartition::Pick ClassPartition::select(double r1, double r2) const {
  const double total = total_weight();
  if (!(total > 0.0)) throw std::domain_error("all class weights are zero");
  const double target = r1 * total;
  double acc = 0.0;
  int chosen = -1;
  for (int k = 0; k < class_count(); ++k) {
    const double w = weight(k);
    if (w <= 0.0) continue;
    chosen = k;
    acc += w;
    if (target < acc) break;
  }
  const auto& list = members_[static_cast<std::size_t>(chosen)];
  auto i = static_cast<std::size_t>(r2 * static_cast<double>(list.size()));
  if (i >= list.size()) i = list.size() - 1;
  return {chosen, list[i]};
}

double bkl_advance_time(double t, double rate, double total_weight, double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("uniform draw must lie in (0,1)");
  if (!(total_weight > 0.0) || !(rate > 0.0)) throw std::invalid_argument("rate and total weight must be positive");
  const double next = t - std::log(r) / (rate * total_weight);
  return next > t ? next : std::nextafter(t, INFINITY);
}

BklRegion::BklRegion(const Partition& partition, SubarrayId subarray, const CellModel& model, bool boundary_class)
    : partition_(&partition),
      model_(&model),
      subarray_(subarray),
      boundary_(boundary_class),
      cells_(partition.cells_of(subarray)),
      classes_(model, partition.cells_per_subarray()) {
  check_subarray(partition, subarray);
}

int BklRegion::classify(CellId c, std::span<const State> states) const {
  if (pinned(c)) return 0;
  const int sum = neighbor_sum(partition_->neighbor_table(), states, c);
  return classes_.class_of_key(model_->key(states[c], sum));
}

void BklRegion::rebuild(std::span<const State> states) {
  for (std::uint32_t i = 0; i < cells_.size(); ++i) classes_.assign(i, classify(cells_[i], states));
}

void BklRegion::update_after_change(CellId c, std::span<const State> states) {
  if (!pinned(c)) classes_.assign(partition_->local_index(c), classify(c, states));
  for (CellId x : partition_->neighbor_table().of(c)) {
    if (partition_->subarray_of(x) != subarray_ || pinned(x)) continue;
    classes_.assign(partition_->local_index(x), classify(x, states));
  }
}

bool BklRegion::audit(std::span<const State> states) const {
  for (std::uint32_t i = 0; i < cells_.size(); ++i) {
    if (classes_.class_of(i) != classify(cells_[i], states)) return false;
  }
  return true;
}

}  // namespace asyncell
