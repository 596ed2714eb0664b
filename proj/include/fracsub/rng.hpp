#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace fracsub {

/// SplitMix64 finalizer; used to expand (seed, stream id) keys into state.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Independent, reproducible random stream.
///
/// A stream is identified by a (seed, id) pair. Streams with distinct ids are
/// statistically independent, so Monte Carlo path k always draws from
/// Stream(seed, k) no matter which thread simulates it. The generator is
/// xoshiro256++ keyed through SplitMix64.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t id) noexcept
    {
        std::uint64_t key = seed ^ (0xD1B54A32D192ED03ULL * (id + 1));
        std::uint64_t mix = splitmix64(key) ^ id;
        for (auto& word : s_) {
            word = splitmix64(mix);
        }
    }

    /// Child stream derived from this stream's identity; does not advance it.
    [[nodiscard]] Stream split(std::uint64_t child) const noexcept
    {
        return Stream(s_[0] ^ s_[3], child);
    }

    std::uint64_t next_u64() noexcept
    {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept
    {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard exponential.
    double exponential() noexcept { return -std::log(uniform()); }

    /// Standard normal (Marsaglia polar method, spare value cached).
    double normal() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        double v = 0.0;
        double s = 0.0;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace fracsub
