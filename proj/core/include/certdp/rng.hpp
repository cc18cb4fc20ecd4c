#pragma once

// Counter-based randomness. Every random number in the library is a pure
// function of (seed, stream tag, indices), so results do not depend on the
// order in which work is scheduled.

#include <cstdint>
#include <initializer_list>

namespace certdp::rng {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t c : counters) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
    return h;
}

// Uniform in the open interval (0, 1); never returns exactly 0 or 1.
constexpr double to_open01(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

inline double uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept {
    return to_open01(hash(seed, counters));
}

// Stream tags used when deriving child seeds.
enum class Stream : std::uint64_t {
    TruthDraws = 1,
    Shocks = 2,
    Transitions = 3,
    Replication = 4,
    EstimationDraws = 5,
    CertificateDraws = 6,
    SolveDraws = 7,
};

constexpr std::uint64_t derive(std::uint64_t seed, Stream tag, std::uint64_t index = 0) noexcept {
    return hash(seed, {static_cast<std::uint64_t>(tag), index});
}

}  // namespace certdp::rng
