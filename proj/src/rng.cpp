#include "cogalloc/rng.hpp"

namespace cogalloc {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Pcg32::Pcg32(std::uint64_t seed, std::uint64_t stream) : inc_((stream << 1u) | 1u) {
  (*this)();
  state_ += seed;
  (*this)();
}

Pcg32::result_type Pcg32::operator()() {
  const std::uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  const auto rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
}

double Pcg32::uniform() {
  const std::uint64_t hi = (*this)() >> 5;  // 27 bits
  const std::uint64_t lo = (*this)() >> 6;  // 26 bits
  const std::uint64_t bits = (hi << 26) | lo;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

Pcg32 derive_stream(std::uint64_t master_seed, std::uint64_t trial, std::uint32_t su,
                    StreamPurpose purpose) {
  std::uint64_t s = master_seed;
  std::uint64_t key = splitmix64(s);
  s = key ^ trial;
  key = splitmix64(s);
  s = key ^ (static_cast<std::uint64_t>(su) << 8 | static_cast<std::uint64_t>(purpose));
  const std::uint64_t seed = splitmix64(s);
  const std::uint64_t stream = splitmix64(s);
  return Pcg32(seed, stream);
}

}  // namespace cogalloc
