#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace varsplit {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to turn structured seeds into well-mixed ones.
std::uint64_t mix_seed(std::uint64_t value);

/// Derives an independent stream seed from a base seed and a path of indices,
/// e.g. derive_seed(cfg.seed, {member, epoch}).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(base, path));
}

} // namespace varsplit
