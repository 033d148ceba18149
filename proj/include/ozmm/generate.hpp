#pragma once

#include "ozmm/types.hpp"

#include <cstdint>

namespace ozmm {

/// Counter-based generator step: SplitMix64 finalizer over seed + ctr*golden.
/// Stateless, so any element of a stream can be produced independently.
inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t ctr) {
  std::uint64_t z = seed + ctr * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Uniform draw on the open interval (0,1): an odd 53-bit numerator over 2^53.
inline double uniform_open(std::uint64_t h) {
  return static_cast<double>((h >> 11) | 1ull) * 0x1p-53;
}

/// Test matrix with entries (U - 0.5) * exp(phi * N), U uniform on (0,1) and
/// N standard normal (Box-Muller). phi controls the dynamic range and hence
/// the difficulty of multiplying such matrices accurately. Deterministic per
/// (m, n, phi, seed) on a given platform; entries are generated independently
/// from a counter, so the result does not depend on the thread count.
MatrixF64 gen_phi_matrix(Index m, Index n, double phi, std::uint64_t seed);

}  // namespace ozmm
