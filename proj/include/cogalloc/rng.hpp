#pragma once

#include <cstdint>
#include <limits>

namespace cogalloc {

/// Advances state and returns the next splitmix64 output.
std::uint64_t splitmix64(std::uint64_t& state);

/// PCG32 (XSH-RR output, 64-bit LCG state) with a selectable stream.
class Pcg32 {
 public:
  using result_type = std::uint32_t;

  Pcg32(std::uint64_t seed, std::uint64_t stream);

  result_type operator()();

  /// Uniform in the open interval (0, 1) from 53 random bits.
  double uniform();

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 1;
};

enum class StreamPurpose : std::uint32_t {
  PuActivity = 1,
  Votes = 2,
  FcGain = 3,
  SensingGain = 4,
  Traffic = 5,
};

/// One independent generator per (master seed, trial, SU, purpose).
Pcg32 derive_stream(std::uint64_t master_seed, std::uint64_t trial, std::uint32_t su,
                    StreamPurpose purpose);

}  // namespace cogalloc
