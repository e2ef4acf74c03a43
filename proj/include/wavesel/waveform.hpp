#pragma once

// Chirp parameters, slow-time unimodular codes and the ordered waveform
// catalog the selection policies draw from. The catalog order
// (bandwidth-major ascending, code id minor) is part of the contract:
// index-based satisficing rules depend on it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavesel/common.hpp"

namespace wavesel {

struct ChirpParams {
    double fc_hz = 77.0e9;      // carrier frequency
    double chirp_T_s = 4.4e-6;  // single chirp duration
    int n_chirps = 128;         // chirps per frame (CPI)
    double tx_power = 1.0;      // normalized transmit power

    void validate() const {
        if (!(fc_hz > 0.0)) throw std::invalid_argument("ChirpParams: fc_hz must be positive");
        if (!(chirp_T_s > 0.0)) throw std::invalid_argument("ChirpParams: chirp_T_s must be positive");
        if (n_chirps < 1) throw std::invalid_argument("ChirpParams: n_chirps must be >= 1");
        if (tx_power != 1.0) throw std::invalid_argument("ChirpParams: tx_power is fixed at 1.0");
    }
};

// Per-chirp +-1 amplitude sequence A_k. Self-cancels on the radar's own
// echoes (A_k^2 = 1) but decorrelates an interferer's slow-time sequence.
struct SlowTimeCode {
    std::vector<int8_t> symbols;  // each +1 or -1
    int id = 0;

    bool operator==(const SlowTimeCode&) const = default;
};

enum class CodeKind { all_ones, seeded_random };

inline SlowTimeCode generate_code(int n, CodeKind kind, uint64_t seed = 0, int id = 0) {
    if (n < 1) throw std::invalid_argument("generate_code: length must be >= 1");
    SlowTimeCode code;
    code.id = id;
    code.symbols.resize(static_cast<size_t>(n));
    if (kind == CodeKind::all_ones) {
        for (auto& s : code.symbols) s = 1;
    } else {
        Xoshiro256pp rng(seed);
        for (auto& s : code.symbols) s = (rng.next() >> 63) ? int8_t{1} : int8_t{-1};
    }
    return code;
}

struct Waveform {
    double bandwidth_hz = 0.0;
    SlowTimeCode code;
    int index = 0;  // position in the catalog
};

struct WaveformCatalog {
    ChirpParams chirp;
    std::vector<double> bandwidths_hz;   // ascending
    std::vector<SlowTimeCode> codes;     // by code id
    std::vector<Waveform> entries;       // bandwidth-major product

    size_t size() const { return entries.size(); }
    const Waveform& operator[](size_t i) const { return entries[i]; }
};

// Default bandwidth grid: n log-spaced values covering [lo, hi].
inline std::vector<double> log_spaced_bandwidths(double lo = 30.0e6, double hi = 1.5e9, int n = 8) {
    if (!(lo > 0.0) || !(hi >= lo) || n < 1)
        throw std::invalid_argument("log_spaced_bandwidths: need 0 < lo <= hi and n >= 1");
    std::vector<double> out(static_cast<size_t>(n));
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double ratio = std::log(hi / lo) / static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = lo * std::exp(ratio * i);
    out.back() = hi;  // pin the endpoint against rounding
    return out;
}

// Builds the full bandwidth x code product catalog. Code id 0 is the
// all-ones (uncoded) sequence when include_all_ones is set; the remaining
// codes are random +-1 sequences with seeds derived per code id, so the
// catalog is bit-identical across rebuilds.
inline WaveformCatalog build_catalog(const ChirpParams& chirp,
                                     std::vector<double> bandwidths_hz,
                                     int n_codes,
                                     uint64_t code_seed,
                                     bool include_all_ones = true) {
    chirp.validate();
    if (bandwidths_hz.empty())
        throw std::invalid_argument("build_catalog: bandwidth list must not be empty");
    for (double b : bandwidths_hz)
        if (!(b > 0.0) || !std::isfinite(b))
            throw std::invalid_argument("build_catalog: bandwidths must be positive and finite");
    if (n_codes < 1) throw std::invalid_argument("build_catalog: n_codes must be >= 1");

    std::sort(bandwidths_hz.begin(), bandwidths_hz.end());

    WaveformCatalog cat;
    cat.chirp = chirp;
    cat.bandwidths_hz = std::move(bandwidths_hz);
    cat.codes.reserve(static_cast<size_t>(n_codes));
    for (int id = 0; id < n_codes; ++id) {
        if (id == 0 && include_all_ones) {
            cat.codes.push_back(generate_code(chirp.n_chirps, CodeKind::all_ones, 0, id));
        } else {
            cat.codes.push_back(generate_code(chirp.n_chirps, CodeKind::seeded_random,
                                              derive_seed(code_seed, "code", static_cast<uint64_t>(id)), id));
        }
    }
    cat.entries.reserve(cat.bandwidths_hz.size() * cat.codes.size());
    int index = 0;
    for (double b : cat.bandwidths_hz)
        for (const auto& code : cat.codes)
            cat.entries.push_back(Waveform{b, code, index++});
    return cat;
}

}  // namespace wavesel
