#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace gridse::rng {

/// splitmix64 finalizer; the key-derivation workhorse.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    return mix64(mix64(base ^ 0x5851f42d4c957f2dULL) ^ salt);
}

/// Namespaces for channel ids so draws made for different purposes can never
/// collide even when entity/component indices coincide.
enum class Domain : std::uint64_t {
    assign = 1,     // device-kind assignment shuffle
    degraded = 2,   // degraded-RTU selection shuffle
    gen_meas = 3,   // measurement-error superposition at case generation
    mc_meas = 4,    // Monte Carlo measurement redraw
    mc_net = 5,     // Monte Carlo branch-parameter redraw
    trial = 6,      // per-trial seed derivation
    misc = 7,
};

constexpr std::uint64_t channel_id(Domain d, std::uint64_t entity, std::uint64_t component = 0) {
    return (static_cast<std::uint64_t>(d) << 56) | (entity << 8) | (component & 0xff);
}

/// One independent substream keyed by (seed, sample, channel): a PCG32
/// generator whose state and increment are derived from the key, so any
/// draw is a pure function of the key and its position in the stream.
/// Thread scheduling can never influence a draw.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t sample, std::uint64_t channel) {
        std::uint64_t k = mix64(seed ^ 0x853c49e6748fea9bULL);
        k = mix64(k ^ sample);
        k = mix64(k ^ channel);
        state_ = k;
        inc_ = (mix64(k ^ 0xda3e39cb94b95bdbULL) << 1u) | 1u;
        next_u32();
        next_u32();
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        auto rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    /// Unbiased integer in [0, bound) by rejection.
    std::uint32_t next_below(std::uint32_t bound) {
        std::uint32_t threshold = (-bound) % bound;
        for (;;) {
            std::uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

    /// 53-bit uniform in [0, 1).
    double uniform01() {
        std::uint64_t hi = next_u32();
        std::uint64_t lo = next_u32();
        std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return static_cast<double>(bits) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second draw of each pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 1;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Deterministic Fisher-Yates; std::shuffle is implementation-defined, this is not.
template <typename T>
void shuffle(std::vector<T>& v, Stream& s) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = s.next_below(static_cast<std::uint32_t>(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace gridse::rng
