#include "asyncell/rand_streams.hpp"

namespace asyncell {

std::uint64_t Stream::derive_key(std::uint64_t seed, StreamId id) noexcept {
  const std::uint64_t seed_key = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  const std::uint64_t tag = (static_cast<std::uint64_t>(id.kind) << 56) ^ id.index;
  return mix64(seed_key + mix64(tag * 0xd1342543de82ef95ULL + 0x3c6ef372fe94f82bULL));
}

Stream::Stream(std::uint64_t seed, StreamId id) noexcept : key_(derive_key(seed, id)), id_(id) {}

}  // namespace asyncell
