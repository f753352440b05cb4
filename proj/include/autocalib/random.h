#pragma once

#include <cstdint>
#include <initializer_list>

namespace autocalib {

// SplitMix64 finalizer; a bijective 64-bit mixer.
uint64_t SplitMix64(uint64_t x);

// Derives an independent stream seed from a base seed and a list of counters
// (hypothesis index, sensor, axis, sample, ...). Streams for different key
// tuples never depend on the order in which they are requested.
uint64_t StreamSeed(uint64_t seed, std::initializer_list<uint64_t> keys);

// Standard normal draw that is a pure function of (seed, keys).
double CounterNormal(uint64_t seed, std::initializer_list<uint64_t> keys);

}  // namespace autocalib
