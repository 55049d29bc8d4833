// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace zsp {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream per (seed, coordinates...). Streams never depend on
// scheduling order, only on the coordinates.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> coords)
{
    std::uint64_t h = splitmix64(seed);
    for (auto c : coords) {
        h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
    }
    return h;
}

// FNV-1a finished with splitmix64; stable across platforms, unlike std::hash.
inline std::uint64_t stable_hash(std::string_view s, std::uint64_t salt = 0)
{
    std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(salt);
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> coords = {})
{
    return Rng(derive_seed(seed, coords));
}

} // namespace zsp
