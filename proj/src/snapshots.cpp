#include "asyncell/snapshots.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace asyncell {

FrameRing::FrameRing(const Partition& partition, std::size_t frames, double dt, double end_time, SnapshotSink sink,
                     std::uint64_t first_index)
    : partition_(&partition),
      dt_(dt),
      end_time_(end_time),
      sink_(std::move(sink)),
      first_(first_index),
      next_emit_(first_index) {
  if (frames < 1) throw std::invalid_argument("frame count must be at least 1");
  if (!(dt > 0.0)) throw std::invalid_argument("snapshot interval must be positive");
  const std::size_t n = partition.lattice().cell_count();
  frames_.assign(frames, std::vector<State>(n, 0));
  slot_ = std::make_unique<Counter[]>(frames);
  fill_ = std::make_unique<Counter[]>(frames);
  frontier_ = std::make_unique<Counter[]>(partition.subarray_count());
  for (std::size_t f = 0; f < frames; ++f) {
    // first K >= first_index with K mod B == f
    const std::uint64_t base = first_index - first_index % frames;
    std::uint64_t k = base + f;
    if (k < first_index) k += frames;
    slot_[f].value.store(k, std::memory_order_relaxed);
  }
  for (std::size_t c = 0; c < partition.subarray_count(); ++c) frontier_[c].value.store(first_index);
}

bool FrameRing::try_store(SubarrayId c, std::uint64_t k, std::span<const State> states) {
  const std::size_t f = k % frames_.size();
  if (slot_[f].value.load(std::memory_order_acquire) != k) return false;
  auto& frame = frames_[f];
  for (CellId x : partition_->cells_of(c)) frame[x] = states[x];
  frontier_[c].value.store(k + 1, std::memory_order_release);
  const auto filled = fill_[f].value.fetch_add(1, std::memory_order_acq_rel) + 1;
  if (filled == partition_->subarray_count()) drain();
  return true;
}

std::vector<std::uint64_t> FrameRing::drain() {
  std::vector<std::uint64_t> out;
  std::unique_lock lock(drain_mutex_, std::try_to_lock);
  if (!lock.owns_lock() || failed()) return out;
  const std::uint64_t total = partition_->subarray_count();
  for (;;) {
    const std::uint64_t k = next_emit_.load(std::memory_order_relaxed);
    const std::size_t f = k % frames_.size();
    if (slot_[f].value.load(std::memory_order_acquire) != k) break;
    if (fill_[f].value.load(std::memory_order_acquire) != total) break;
    try {
      if (sink_) sink_(k, static_cast<double>(k) * dt_, frames_[f]);
    } catch (...) {
      error_ = std::current_exception();
      failed_.store(true, std::memory_order_release);
      break;
    }
    fill_[f].value.store(0, std::memory_order_relaxed);
    next_emit_.store(k + 1, std::memory_order_release);
    slot_[f].value.store(k + frames_.size(), std::memory_order_release);
    out.push_back(k);
  }
  return out;
}

std::uint64_t FrameRing::min_frontier() const noexcept {
  std::uint64_t m = UINT64_MAX;
  for (std::size_t c = 0; c < partition_->subarray_count(); ++c) {
    m = std::min(m, frontier_[c].value.load(std::memory_order_acquire));
  }
  return m;
}

void FrameRing::rethrow_if_failed() const {
  if (failed() && error_) std::rethrow_exception(error_);
}

bool emit_due_snapshots(FrameRing& ring, SubarrayId c, std::uint64_t& k, double new_t,
                        std::span<const State> states) {
  ring.rethrow_if_failed();
  while (ring.due(k) && static_cast<double>(k) * ring.dt() < new_t) {
    if (!ring.try_store(c, k, states)) {
      ring.drain();
      return false;
    }
    ++k;
  }
  return true;
}

PatternImage make_pattern(const CellModel& model, const Lattice& lattice, std::span<const State> image, double time) {
  if (image.size() != lattice.cell_count()) throw std::invalid_argument("image size does not match the lattice");
  PatternImage p;
  p.width = lattice.side();
  p.height = static_cast<int>(lattice.cell_count() / static_cast<std::size_t>(lattice.side()));
  p.time = time;
  p.bits.resize(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) p.bits[i] = model.is_up(image[i]) ? 1 : 0;
  return p;
}

void write_pattern(const PatternImage& image, const std::filesystem::path& path) {
  if (image.bits.size() != static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height)) {
    throw std::invalid_argument("pattern dimensions do not match its data");
  }
  std::string text = "P1 " + std::to_string(image.width) + " " + std::to_string(image.height) + " t=";
  char buf[64];
  text.append(buf, std::to_chars(buf, buf + sizeof buf, image.time).ptr);
  text += '\n';
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (x > 0) text += ' ';
      text += image.bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width) +
                         static_cast<std::size_t>(x)]
                  ? '1'
                  : '0';
    }
    text += '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

PatternImage read_pattern(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::string magic, tfield;
  PatternImage p;
  in >> magic >> p.width >> p.height >> tfield;
  if (!in || magic != "P1" || tfield.rfind("t=", 0) != 0 || p.width < 1 || p.height < 1) {
    throw std::runtime_error("bad pattern header in " + path.string());
  }
  const auto [ptr, ec] = std::from_chars(tfield.data() + 2, tfield.data() + tfield.size(), p.time);
  if (ec != std::errc{} || ptr != tfield.data() + tfield.size()) throw std::runtime_error("bad pattern time");
  p.bits.resize(static_cast<std::size_t>(p.width) * static_cast<std::size_t>(p.height));
  for (auto& b : p.bits) {
    int v = -1;
    in >> v;
    if (!in || (v != 0 && v != 1)) throw std::runtime_error("bad pattern data in " + path.string());
    b = static_cast<std::uint8_t>(v);
  }
  return p;
}

std::filesystem::path pattern_path(const std::filesystem::path& dir, std::uint64_t index) {
  return dir / ("pattern_K" + std::to_string(index) + ".pbm");
}

}  // namespace asyncell
