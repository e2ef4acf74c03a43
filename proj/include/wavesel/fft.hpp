#pragma once

// Iterative radix-2 FFT for power-of-two lengths. Unnormalized forward
// kernel exp(-j 2 pi n k / N); the inverse applies no 1/N scaling either,
// callers own the normalization convention.

#include <bit>
#include <complex>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "wavesel/common.hpp"

namespace wavesel {

inline int next_pow2(int n) {
    if (n < 1) return 1;
    return static_cast<int>(std::bit_ceil(static_cast<uint32_t>(n)));
}

namespace detail {

struct FftPlan {
    std::vector<cplx> twiddle;     // twiddle[j] = exp(-j 2 pi j / n), j < n/2
    std::vector<uint32_t> bitrev;  // bit-reversal permutation
};

inline const FftPlan& fft_plan(size_t n) {
    static std::map<size_t, FftPlan> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    FftPlan plan;
    plan.twiddle.resize(n / 2);
    for (size_t j = 0; j < n / 2; ++j) {
        const double ang = -2.0 * kPi * static_cast<double>(j) / static_cast<double>(n);
        plan.twiddle[j] = cplx(std::cos(ang), std::sin(ang));
    }
    plan.bitrev.resize(n);
    uint32_t bits = 0;
    while ((size_t{1} << bits) < n) ++bits;
    for (size_t i = 0; i < n; ++i) {
        uint32_t r = 0;
        for (uint32_t b = 0; b < bits; ++b)
            if (i & (size_t{1} << b)) r |= uint32_t{1} << (bits - 1 - b);
        plan.bitrev[i] = r;
    }
    return cache.emplace(n, std::move(plan)).first->second;
}

}  // namespace detail

// In-place transform of n contiguous values; n must be a power of two.
inline void fft(cplx* x, size_t n, bool inverse = false) {
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft: length must be a nonzero power of two");
    if (n == 1) return;
    const auto& plan = detail::fft_plan(n);
    for (size_t i = 0; i < n; ++i) {
        const uint32_t j = plan.bitrev[i];
        if (i < j) std::swap(x[i], x[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const size_t half = len >> 1;
        const size_t step = n / len;
        for (size_t base = 0; base < n; base += len) {
            for (size_t j = 0; j < half; ++j) {
                cplx w = plan.twiddle[j * step];
                if (inverse) w = std::conj(w);
                const cplx t = x[base + j + half] * w;
                x[base + j + half] = x[base + j] - t;
                x[base + j] = x[base + j] + t;
            }
        }
    }
}

inline void fft(std::vector<cplx>& x, bool inverse = false) {
    fft(x.data(), x.size(), inverse);
}

}  // namespace wavesel
