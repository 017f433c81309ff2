#ifndef SHAPEDYN_SEEDING_HPP
#define SHAPEDYN_SEEDING_HPP

#include <cstdint>
#include <random>

namespace shapedyn {

/// Seed of the independent stream `stream` under `root`. Mixes both through
/// std::seed_seq so neighbouring streams are uncorrelated.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t{out[0]} << 32) | out[1];
}

}  // namespace shapedyn

#endif  // SHAPEDYN_SEEDING_HPP
