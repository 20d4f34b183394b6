#pragma once

#include <cstdint>

namespace bsq {

/// Counter-based random stream keyed by (master_seed, stream_id).
///
/// The i-th draw of a stream is a pure function of (key, i): a SplitMix64
/// finalizer applied to key + i * golden. Streams can therefore be created
/// in any order, on any thread, and always produce the same numbers.
class CounterRng {
 public:
  CounterRng(std::uint64_t master_seed, std::uint64_t stream_id)
      : key_(mix(master_seed ^ mix(stream_id + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  /// Uniform double in the open interval (0, 1).
  double uniform_open01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace bsq
