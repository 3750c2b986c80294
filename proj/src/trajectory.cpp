#include "asyncell/trajectory.hpp"

#include <algorithm>
#include <bit>

#include "asyncell/rand_streams.hpp"

namespace asyncell {

Trajectory::Trajectory(std::vector<State> initial, double end_time)
    : end_time_(end_time), initial_(std::move(initial)) {}

void Trajectory::append(std::span<const Event> events) {
  events_.insert(events_.end(), events.begin(), events.end());
}

void Trajectory::finish(std::vector<State> final_states) {
  std::sort(events_.begin(), events_.end(), event_less);
  final_ = std::move(final_states);
  hash_ = hash_events(events_);
}

std::size_t Trajectory::change_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(events_.begin(), events_.end(), [](const Event& e) { return e.old_state != e.new_state; }));
}

std::vector<State> Trajectory::configuration_at(double tau) const {
  std::vector<State> config = initial_;
  for (const Event& e : events_) {
    if (e.time > tau) break;
    config[e.cell] = e.new_state;
  }
  return config;
}

std::vector<TieFault> Trajectory::neighbor_ties(const NeighborTable& table) const {
  std::vector<TieFault> out;
  std::size_t i = 0;
  while (i < events_.size()) {
    std::size_t j = i + 1;
    while (j < events_.size() && events_[j].time == events_[i].time) ++j;
    for (std::size_t a = i; a < j; ++a) {
      for (std::size_t b = a + 1; b < j; ++b) {
        if (table.adjacent(events_[a].cell, events_[b].cell)) {
          out.push_back({events_[a].time, events_[a].cell, events_[b].cell});
        }
      }
    }
    i = j;
  }
  return out;
}

std::uint64_t hash_events(std::span<const Event> events) noexcept {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (const Event& e : events) {
    h = mix64(h ^ std::bit_cast<std::uint64_t>(e.time));
    h = mix64(h ^ (static_cast<std::uint64_t>(e.cell) << 8 | static_cast<std::uint8_t>(e.new_state)));
  }
  return h;
}

std::optional<std::size_t> first_divergence(std::span<const Event> a, std::span<const Event> b) noexcept {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a[i] == b[i])) return i;
  }
  if (a.size() != b.size()) return n;
  return std::nullopt;
}

int magnetization(const CellModel& model, std::span<const State> states) noexcept {
  int m = 0;
  for (State s : states) m += model.is_up(s) ? 1 : -1;
  return m;
}

}  // namespace asyncell
