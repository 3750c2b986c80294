#pragma once

#include <cstdint>

namespace asyncell {

/// What a stream is attached to. Each (kind, index) pair names one
/// independent sequence for a given run seed.
enum class StreamKind : std::uint8_t {
  per_cell = 0,     ///< arrival/state draws of one cell (general engines)
  per_pe = 1,       ///< cumulative stream of one subarray (Poisson engine)
  scalar = 2,       ///< single global stream (standard serial procedure)
  cell_period = 3,  ///< fixed per-cell period of the Gaussian-period law
  cell_init = 4,    ///< initial configuration
  replicate = 5,    ///< predictor replicates
};

struct StreamId {
  StreamKind kind = StreamKind::scalar;
  std::uint64_t index = 0;

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Maps a 64-bit integer to a double strictly inside (0, 1).
/// Keeps the top 52 bits: (k + 0.5) / 2^52 is exact in a double, so the
/// result never rounds to either endpoint.
constexpr double to_open_unit(std::uint64_t bits) noexcept {
  constexpr double scale = 1.0 / 4503599627370496.0;  // 2^-52
  return (static_cast<double>(bits >> 12) + 0.5) * scale;
}

/// Counter-based pseudo-random stream.
///
/// The n-th value is a pure function of (seed, id, n), so a cell sees the
/// same sequence however cells are grouped onto workers, and a stream can be
/// re-created at any position without replaying others.
class Stream {
 public:
  Stream() = default;
  Stream(std::uint64_t seed, StreamId id) noexcept;

  /// Raw 64-bit draw; advances the counter.
  std::uint64_t next_u64() noexcept { return raw(key_, counter_++); }

  /// Uniform draw in the open interval (0, 1); advances the counter.
  double next_uniform() noexcept { return to_open_unit(next_u64()); }

  std::uint64_t counter() const noexcept { return counter_; }
  std::uint64_t key() const noexcept { return key_; }
  StreamId id() const noexcept { return id_; }

  /// Value at position `counter` of the stream with the given key.
  static constexpr std::uint64_t raw(std::uint64_t key, std::uint64_t counter) noexcept {
    const std::uint64_t x = key + (counter + 1) * 0x9e3779b97f4a7c15ULL;
    return mix64(mix64(x) ^ (key >> 7 | key << 57));
  }

  static std::uint64_t derive_key(std::uint64_t seed, StreamId id) noexcept;

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  StreamId id_{};
};

inline Stream make_stream(std::uint64_t seed, StreamId id) noexcept { return Stream(seed, id); }

}  // namespace asyncell
