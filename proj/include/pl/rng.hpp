#ifndef PL_RNG_HPP
#define PL_RNG_HPP

#include <cstdint>

namespace pl::rng
{

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream seed for task `index` of a run seeded with `seed`;
/// depends only on the pair, never on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

} // namespace pl::rng

#endif
