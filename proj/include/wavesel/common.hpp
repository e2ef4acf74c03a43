#pragma once

// Shared numeric utilities: physical constants, deterministic RNG streams
// and the seed-derivation scheme used to split a master seed into
// independent, labelled sub-streams.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace wavesel {

using cplx = std::complex<double>;

// Propagation speed. All range/Doppler bin bookkeeping in this library is
// derived from this value, so tests that assert exact bin indices depend on
// it being exactly 3e8.
inline constexpr double kSpeedOfLight = 3.0e8;  // m/s

inline constexpr double kPi = 3.14159265358979323846;

namespace detail {

// splitmix64 output mixer. Bijective, so chaining it between xor steps keeps
// distinct (master, stream, coordinate) tuples from aliasing.
inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline uint64_t splitmix64(uint64_t& state) {
    return mix64(state += 0x9E3779B97F4A7C15ull);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x00000100000001B3ull;
    }
    return h;
}

}  // namespace detail

// Derives a sub-seed from a master seed, a stream label and up to two
// integer coordinates (e.g. run id, frame index). Labelled streams keep the
// scene draw, the per-frame noise and each policy's action randomness
// independent while staying bit-reproducible for a given master seed.
inline uint64_t derive_seed(uint64_t master, std::string_view stream,
                            uint64_t a = 0, uint64_t b = 0) {
    uint64_t x = master ^ detail::fnv1a64(stream);
    x = detail::mix64(x + 0x9E3779B97F4A7C15ull);
    x = detail::mix64(x ^ a);
    x = detail::mix64(x ^ b);
    return x;
}

// xoshiro256++ (Blackman & Vigna). Deterministic across platforms, unlike
// the distributions in <random>.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(uint64_t seed = 1) {
        uint64_t x = seed;
        for (auto& si : s_) si = detail::splitmix64(x);
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased uniform integer in [0, n).
    uint64_t uniform_below(uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            const uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

// Standard-normal sampler (Marsaglia polar method). Holds the spare deviate,
// so draw counts from the underlying stream depend only on the sequence of
// calls made through one sampler instance.
class NormalSampler {
public:
    double operator()(Xoshiro256pp& rng) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * rng.uniform() - 1.0;
            v = 2.0 * rng.uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

private:
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace wavesel
