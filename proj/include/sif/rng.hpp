#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace sif::rng {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t v) noexcept {
    return mix64(key ^ (v + 0x9E3779B97F4A7C15ull + (key << 6) + (key >> 2)));
}

// Key for an independent stream identified by up to three indices
// (e.g. seed / ensemble member / lag). Streams with distinct keys are
// statistically independent for Monte-Carlo purposes.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a = 0,
                                   std::uint64_t b = 0, std::uint64_t c = 0) noexcept {
    return combine(combine(combine(mix64(seed), a), b), c);
}

// Counter-based raw draw: a pure function of (key, ctr), so any (key, ctr)
// cell can be evaluated out of order and in parallel.
constexpr std::uint64_t bits_at(std::uint64_t key, std::uint64_t ctr) noexcept {
    return mix64(mix64(ctr) ^ key);
}

// Uniform on the open interval (0,1); never returns 0 or 1, so log() is safe.
inline double uniform_at(std::uint64_t key, std::uint64_t ctr) noexcept {
    return (static_cast<double>(bits_at(key, ctr) >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal at cell ctr; consumes the uniform cells (2*ctr, 2*ctr+1).
inline double normal_at(std::uint64_t key, std::uint64_t ctr) noexcept {
    const double u1 = uniform_at(key, 2 * ctr);
    const double u2 = uniform_at(key, 2 * ctr + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692529 * u2);
}

// Sequential view over a counter-based stream. Cheap value type; state is
// (key, position), so a stream is reproducible from its key alone.
class Stream {
public:
    explicit Stream(std::uint64_t key) noexcept : key_(key) {}

    static Stream keyed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                        std::uint64_t c = 0) noexcept {
        return Stream(stream_key(seed, a, b, c));
    }

    std::uint64_t key() const noexcept { return key_; }

    double uniform() noexcept { return uniform_at(key_, ctr_++); }

    double normal() noexcept {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692529 * u2);
    }

    void normal_fill(std::span<double> out) noexcept {
        for (double& v : out) v = normal();
    }

    // Unbiased-enough index draw via 128-bit multiply (bias < n * 2^-64).
    std::uint64_t index_below(std::uint64_t n) noexcept {
        const auto r = static_cast<unsigned __int128>(bits_at(key_, ctr_++));
        return static_cast<std::uint64_t>((r * n) >> 64);
    }

    template <class T>
    void shuffle(std::span<T> v) noexcept {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::uint64_t j = index_below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

}  // namespace sif::rng
