#pragma once

// Frame synthesis: decoded, dechirped beat signal for one frame and the
// complex range-Doppler map produced by an unnormalized 2D DFT.
//
// Measurement-level model: every contribution (target sub-scatterer or
// interferer) is a delay-Doppler point. After multiplying receive chirp k
// by the ego code A_k, the slow-time factor is A_k^2 = 1 for the radar's
// own echoes and A_k * A'_k for an interferer with code A'. Scatterers
// beyond r_max alias circularly through the DFT; that is documented
// behavior, not an error.

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "wavesel/common.hpp"
#include "wavesel/fft.hpp"
#include "wavesel/scene.hpp"
#include "wavesel/waveform.hpp"

namespace wavesel {

// Fast-time sample count for one chirp: next power of two covering the
// beat band out to r_max, floored at 32 so small-bandwidth maps still fit
// a CFAR window.
inline int fast_time_samples(double bandwidth_hz, double r_max_m) {
    if (!(bandwidth_hz > 0.0))
        throw std::invalid_argument("fast_time_samples: bandwidth must be positive");
    const int needed = static_cast<int>(std::ceil(2.0 * r_max_m * bandwidth_hz / kSpeedOfLight));
    return next_pow2(std::max(32, needed));
}

struct RDMap {
    std::vector<cplx> data;  // row-major [range bin][doppler bin]
    int n_range = 0;
    int n_doppler = 0;
    double range_bin_m = 0.0;
    double vel_bin_mps = 0.0;
    int waveform_index = -1;

    cplx& at(int r, int d) { return data[static_cast<size_t>(r) * n_doppler + d]; }
    const cplx& at(int r, int d) const { return data[static_cast<size_t>(r) * n_doppler + d]; }

    double range_of(int r) const { return r * range_bin_m; }

    // Doppler bins are periodic; bins at and above n_doppler/2 map to
    // negative velocities (centered spectrum convention).
    int signed_doppler(int d) const { return d < n_doppler - n_doppler / 2 ? d : d - n_doppler; }
    double velocity_of(int d) const { return signed_doppler(d) * vel_bin_mps; }
};

enum class WindowKind { none, hann };

struct RdOptions {
    WindowKind window = WindowKind::none;
};

namespace detail {

inline std::vector<double> hann_window(int n) {
    std::vector<double> w(static_cast<size_t>(n), 1.0);
    if (n > 1)
        for (int i = 0; i < n; ++i)
            w[static_cast<size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / (n - 1)));
    return w;
}

// Adds one delay-Doppler point to the beat matrix. modulation[k] is the
// slow-time factor after decoding (nullptr means identically 1).
inline void add_scatterer(std::vector<cplx>& beat, int n_chirps, int n_fast,
                          double amp, double range_m, double vel_mps,
                          double bandwidth_hz, const ChirpParams& chirp,
                          const int8_t* modulation) {
    if (!std::isfinite(amp) || !std::isfinite(range_m) || !std::isfinite(vel_mps))
        throw std::invalid_argument("simulate_frame: scatterer has non-finite parameters");
    const double beat_bin = 2.0 * range_m * bandwidth_hz / kSpeedOfLight;  // fractional range bin
    const double wr = 2.0 * kPi * beat_bin / n_fast;                       // per-sample phase step
    const double fd = 2.0 * vel_mps * chirp.fc_hz / kSpeedOfLight;
    const double wd = 2.0 * kPi * fd * chirp.chirp_T_s;                    // per-chirp phase step
    const double phi = -4.0 * kPi * chirp.fc_hz * range_m / kSpeedOfLight;

    std::vector<cplx> fast(static_cast<size_t>(n_fast));
    for (int n = 0; n < n_fast; ++n) fast[static_cast<size_t>(n)] = std::polar(1.0, wr * n);

    const cplx base = std::polar(amp, phi);
    for (int k = 0; k < n_chirps; ++k) {
        cplx coef = base * std::polar(1.0, wd * k);
        if (modulation) coef *= static_cast<double>(modulation[k]);
        cplx* row = beat.data() + static_cast<size_t>(k) * n_fast;
        for (int n = 0; n < n_fast; ++n) row[static_cast<size_t>(n)] += coef * fast[static_cast<size_t>(n)];
    }
}

}  // namespace detail

// Synthesizes the decoded beat matrix, row-major [chirp][fast-time sample].
// Noise is complex white Gaussian with per-sample variance noise_psd * fs
// (fs = n_fast / T); decoding by +-1 leaves its law unchanged, so it is
// drawn post-decode.
inline std::vector<cplx> synthesize_beat(const Scene& scene, const Waveform& waveform,
                                         const ChirpParams& chirp, double r_max_m,
                                         Xoshiro256pp* noise_rng = nullptr,
                                         const RdOptions& opt = {}) {
    chirp.validate();
    const int n_fast = fast_time_samples(waveform.bandwidth_hz, r_max_m);
    const int n_chirps = chirp.n_chirps;
    if (static_cast<int>(waveform.code.symbols.size()) != n_chirps)
        throw std::invalid_argument("synthesize_beat: code length does not match n_chirps");

    std::vector<cplx> beat(static_cast<size_t>(n_chirps) * n_fast, cplx{0.0, 0.0});

    for (const auto& target : scene.targets) {
        for (const auto& s : target.scatterers) {
            detail::add_scatterer(beat, n_chirps, n_fast, target.amp * s.rel_amp,
                                  target.range_m + s.dr_m, target.vel_mps + s.dv_mps,
                                  waveform.bandwidth_hz, chirp, nullptr);
        }
    }

    std::vector<int8_t> mod(static_cast<size_t>(n_chirps));
    for (const auto& intf : scene.interferers) {
        if (static_cast<int>(intf.code.symbols.size()) != n_chirps)
            throw std::invalid_argument("synthesize_beat: interferer code length mismatch");
        for (int k = 0; k < n_chirps; ++k)
            mod[static_cast<size_t>(k)] =
                static_cast<int8_t>(waveform.code.symbols[static_cast<size_t>(k)] *
                                    intf.code.symbols[static_cast<size_t>(k)]);
        detail::add_scatterer(beat, n_chirps, n_fast, intf.amp, intf.range_m, intf.vel_mps,
                              waveform.bandwidth_hz, chirp, mod.data());
    }

    if (scene.noise_psd > 0.0 && noise_rng) {
        const double fs = n_fast / chirp.chirp_T_s;
        const double sigma = std::sqrt(scene.noise_psd * fs / 2.0);
        NormalSampler gauss;
        for (auto& v : beat) v += cplx(sigma * gauss(*noise_rng), sigma * gauss(*noise_rng));
    }

    if (opt.window == WindowKind::hann) {
        const auto wk = detail::hann_window(n_chirps);
        const auto wn = detail::hann_window(n_fast);
        for (int k = 0; k < n_chirps; ++k)
            for (int n = 0; n < n_fast; ++n)
                beat[static_cast<size_t>(k) * n_fast + n] *= wk[static_cast<size_t>(k)] * wn[static_cast<size_t>(n)];
    }

    return beat;
}

// Unnormalized 2D DFT of the beat matrix: fast time -> range axis, chirp
// index -> Doppler axis.
inline RDMap rd_transform(const std::vector<cplx>& beat, const Waveform& waveform,
                          const ChirpParams& chirp, double r_max_m) {
    const int n_fast = fast_time_samples(waveform.bandwidth_hz, r_max_m);
    const int n_chirps = chirp.n_chirps;
    if (beat.size() != static_cast<size_t>(n_chirps) * n_fast)
        throw std::invalid_argument("rd_transform: beat matrix has wrong shape");

    // Range FFT per chirp row.
    std::vector<cplx> stage(beat);
    for (int k = 0; k < n_chirps; ++k) fft(stage.data() + static_cast<size_t>(k) * n_fast, static_cast<size_t>(n_fast));

    RDMap map;
    map.n_range = n_fast;
    map.n_doppler = n_chirps;
    map.range_bin_m = kSpeedOfLight / (2.0 * waveform.bandwidth_hz);
    map.vel_bin_mps = kSpeedOfLight / (2.0 * chirp.fc_hz * n_chirps * chirp.chirp_T_s);
    map.waveform_index = waveform.index;
    map.data.resize(static_cast<size_t>(n_fast) * n_chirps);

    // Doppler FFT per range column, gathered across chirp rows.
    std::vector<cplx> col(static_cast<size_t>(n_chirps));
    for (int r = 0; r < n_fast; ++r) {
        for (int k = 0; k < n_chirps; ++k) col[static_cast<size_t>(k)] = stage[static_cast<size_t>(k) * n_fast + r];
        fft(col.data(), static_cast<size_t>(n_chirps));
        for (int d = 0; d < n_chirps; ++d) map.at(r, d) = col[static_cast<size_t>(d)];
    }
    return map;
}

// Full frame simulation: beat synthesis followed by the 2D DFT.
inline RDMap simulate_frame(const Scene& scene, const Waveform& waveform,
                            const ChirpParams& chirp, double r_max_m,
                            Xoshiro256pp* noise_rng = nullptr, const RdOptions& opt = {}) {
    const auto beat = synthesize_beat(scene, waveform, chirp, r_max_m, noise_rng, opt);
    return rd_transform(beat, waveform, chirp, r_max_m);
}

// Per-run frame renderer. The deterministic part of the map depends only on
// (scene, waveform), so it is rendered once per waveform through
// simulate_frame and cached; per-frame noise is then injected directly in
// the range-Doppler domain. The unnormalized DFT maps iid complex Gaussian
// time samples of variance N0*fs onto iid complex Gaussian bins of variance
// N0*fs*Nr*Nd, so the rendered maps are distributed exactly as the full
// time-domain path. With a window enabled the noise is no longer white in
// the map domain and the renderer falls back to full synthesis per frame.
class FrameRenderer {
public:
    FrameRenderer(Scene scene, WaveformCatalog catalog, double r_max_m, RdOptions opt = {})
        : scene_(std::move(scene)), catalog_(std::move(catalog)), r_max_m_(r_max_m), opt_(opt),
          cacheable_(opt.window == WindowKind::none),
          base_(catalog_.size()) {
        quiet_scene_ = scene_;
        quiet_scene_.noise_psd = 0.0;
    }

    const Scene& scene() const { return scene_; }
    const WaveformCatalog& catalog() const { return catalog_; }

    // Noise-free map for one catalog entry (built lazily, then cached).
    const RDMap& base(int waveform_index) {
        auto& slot = base_.at(static_cast<size_t>(waveform_index));
        if (!slot) {
            slot = std::make_unique<RDMap>(simulate_frame(
                quiet_scene_, catalog_[static_cast<size_t>(waveform_index)], catalog_.chirp, r_max_m_, nullptr, opt_));
        }
        return *slot;
    }

    RDMap render(int waveform_index, Xoshiro256pp& noise_rng) {
        if (!cacheable_) {
            return simulate_frame(scene_, catalog_[static_cast<size_t>(waveform_index)], catalog_.chirp,
                                  r_max_m_, &noise_rng, opt_);
        }
        RDMap map = base(waveform_index);
        if (scene_.noise_psd > 0.0) {
            const double fs = map.n_range / catalog_.chirp.chirp_T_s;
            const double bin_var = scene_.noise_psd * fs * map.n_range * map.n_doppler;
            const double sigma = std::sqrt(bin_var / 2.0);
            NormalSampler gauss;
            for (auto& v : map.data) v += cplx(sigma * gauss(noise_rng), sigma * gauss(noise_rng));
        }
        return map;
    }

private:
    Scene scene_;
    Scene quiet_scene_;
    WaveformCatalog catalog_;
    double r_max_m_;
    RdOptions opt_;
    bool cacheable_;
    std::vector<std::unique_ptr<RDMap>> base_;
};

}  // namespace wavesel
