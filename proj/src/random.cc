#include "autocalib/random.h"

#include <cmath>
#include <numbers>

namespace autocalib {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t StreamSeed(uint64_t seed, std::initializer_list<uint64_t> keys) {
  uint64_t h = SplitMix64(seed);
  for (uint64_t k : keys) {
    h = SplitMix64(h ^ SplitMix64(k + 0x632be59bd9b4e019ULL));
  }
  return h;
}

double CounterNormal(uint64_t seed, std::initializer_list<uint64_t> keys) {
  const uint64_t a = StreamSeed(seed, keys);
  const uint64_t b = SplitMix64(a);
  // 53-bit uniforms; u1 in (0, 1] keeps the log finite.
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace autocalib
