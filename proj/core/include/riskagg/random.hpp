#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace riskagg {

using Rng = std::mt19937_64;

/// Derives an independent seed for a named consumer (one per trained network,
/// per simulation, ...) from a single run seed.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view stream_name) noexcept;

inline Rng make_rng(std::uint64_t base_seed, std::string_view stream_name) {
  return Rng(derive_seed(base_seed, stream_name));
}

}  // namespace riskagg
