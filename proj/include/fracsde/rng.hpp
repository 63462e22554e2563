#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string_view>

namespace fracsde {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a over the bytes of `text`.
std::uint64_t fnv1a(std::string_view text);

/// Counter-based seed derivation: every random stream in the project is
/// addressed by (master seed, purpose string, index). Streams with
/// different purposes or indices are decorrelated by two SplitMix64 rounds.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, std::string_view purpose,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(master, purpose, index));
}

Eigen::VectorXd standard_normal(Rng& rng, Eigen::Index n);

}  // namespace fracsde
