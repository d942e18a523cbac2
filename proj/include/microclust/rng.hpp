#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace microclust {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a master seed and a path of
/// stream coordinates (experiment tag, grid value, replicate index, ...).
///
/// The seed is folded through SplitMix64 one coordinate at a time:
///   s_0 = splitmix64(master), s_{i+1} = splitmix64(s_i ^ splitmix64(path_i + i + 1)).
/// Stream seeds therefore depend only on their coordinates, never on the
/// order in which worker threads pick up replicates.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path);

inline Engine make_engine(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path) {
  return Engine{derive_seed(master, path)};
}

// Bit pattern of a double, for keying streams on grid values such as c.
std::uint64_t double_bits(double value);

// Stable 64-bit tag for a short ASCII name (FNV-1a).
std::uint64_t stream_tag(const char* name);

}  // namespace microclust
