#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace idealobs {

/// Per-chain random engine. Streams are never shared between chains.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a hash of a stream label.
std::uint64_t fnv1a64(std::string_view text);

/// Child seed for (master, label, index):
///
///   h = splitmix64(master)
///   h = splitmix64(h ^ fnv1a64(label))
///   h = splitmix64(h ^ index)
///
/// The mix is fixed; changing it changes every dataset and score file.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index);

struct SeedSpec {
  std::uint64_t master_seed = 0;

  Rng stream(std::string_view label, std::uint64_t index) const {
    return Rng(derive_seed(master_seed, label, index));
  }
};

}  // namespace idealobs
