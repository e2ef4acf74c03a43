#pragma once

// Ground-truth radar scene: extended targets with class labels plus
// interfering emitters. A scene is sampled once per learning run and then
// frozen; per-frame variation comes from noise realizations.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavesel/common.hpp"
#include "wavesel/waveform.hpp"

namespace wavesel {

struct TargetClass {
    std::string name;
    double extent_m = 1.0;        // nominal along-range physical length
    double vel_spread_mps = 0.0;  // nominal intra-target velocity spread

    bool operator==(const TargetClass&) const = default;
};

inline std::vector<TargetClass> default_target_classes() {
    return {
        {"pedestrian", 0.8, 1.0},
        {"car", 4.0, 0.5},
        {"truck", 10.0, 0.5},
    };
}

// One point contribution of an extended target, relative to its center.
struct Scatterer {
    double dr_m = 0.0;
    double dv_mps = 0.0;
    double rel_amp = 1.0;

    bool operator==(const Scatterer&) const = default;
};

struct Target {
    double range_m = 0.0;
    double vel_mps = 0.0;
    double amp = 1.0;
    int class_idx = 0;
    std::vector<Scatterer> scatterers;

    bool operator==(const Target&) const = default;
};

struct Interferer {
    double range_m = 0.0;  // apparent (one-way) range
    double vel_mps = 0.0;
    double amp = 1.0;
    SlowTimeCode code;     // the interferer's own slow-time sequence

    bool operator==(const Interferer&) const = default;
};

struct Scene {
    std::vector<Target> targets;
    std::vector<Interferer> interferers;
    double noise_psd = 0.0;  // N0, linear per Hz
    std::vector<TargetClass> classes;

    bool operator==(const Scene&) const = default;
};

struct SceneConfig {
    int n_targets = 3;
    int n_interferers = 1;
    double r_min_m = 10.0;
    double r_max_m = 110.0;
    double v_min_mps = -25.0;
    double v_max_mps = 25.0;
    double target_amp = 1.0;
    double interferer_amp = 10.0;  // must exceed target_amp (one-way propagation)
    // Sets the working SNR. A single unit-amplitude scatterer sits near the
    // CFAR threshold, so detection leans on the coherent pile-up of several
    // scatterers per range cell. Coarse bandwidths keep that pile-up and stay
    // detectable; fine bandwidths split target energy across many cells and
    // fade out, which is the resolution-versus-sensitivity trade-off the
    // waveform learner has to discover.
    double noise_psd = 3.0e-5;
    int n_scatterers = 5;
    int n_chirps = 128;  // length of the interferer's slow-time code
    bool redraw_every_frame = false;
    std::vector<TargetClass> classes = default_target_classes();

    void validate() const {
        if (n_targets < 0 || n_interferers < 0)
            throw std::invalid_argument("SceneConfig: counts must be nonnegative");
        if (!(r_min_m > 0.0) || !(r_min_m < r_max_m))
            throw std::invalid_argument("SceneConfig: need 0 < r_min_m < r_max_m");
        if (!(v_min_mps < v_max_mps))
            throw std::invalid_argument("SceneConfig: need v_min_mps < v_max_mps");
        if (!(target_amp > 0.0))
            throw std::invalid_argument("SceneConfig: target_amp must be positive");
        if (n_interferers > 0 && !(interferer_amp > target_amp))
            throw std::invalid_argument("SceneConfig: interferer_amp must exceed target_amp");
        if (!(noise_psd >= 0.0))
            throw std::invalid_argument("SceneConfig: noise_psd must be nonnegative");
        if (n_scatterers < 1)
            throw std::invalid_argument("SceneConfig: n_scatterers must be >= 1");
        if (classes.empty())
            throw std::invalid_argument("SceneConfig: class set must not be empty");
        for (const auto& c : classes)
            if (!(c.extent_m > 0.0) || !(c.vel_spread_mps >= 0.0))
                throw std::invalid_argument("SceneConfig: class '" + c.name + "' has invalid extent/spread");
    }
};

// Draws a scene deterministically from the seed. Target centers are uniform
// over the configured range/velocity box; each target gets a uniformly
// chosen class and n_scatterers sub-scatterers evenly spanning the class
// extent and velocity spread. Interferers use the all-ones slow-time code
// (an uncoded neighboring radar).
inline Scene sample_scene(const SceneConfig& cfg, uint64_t seed) {
    cfg.validate();
    Xoshiro256pp rng(seed);
    Scene scene;
    scene.noise_psd = cfg.noise_psd;
    scene.classes = cfg.classes;

    scene.targets.reserve(static_cast<size_t>(cfg.n_targets));
    for (int i = 0; i < cfg.n_targets; ++i) {
        Target t;
        t.range_m = rng.uniform(cfg.r_min_m, cfg.r_max_m);
        t.vel_mps = rng.uniform(cfg.v_min_mps, cfg.v_max_mps);
        t.amp = cfg.target_amp;
        t.class_idx = static_cast<int>(rng.uniform_below(cfg.classes.size()));
        const auto& cls = cfg.classes[static_cast<size_t>(t.class_idx)];
        const int k = cfg.n_scatterers;
        t.scatterers.reserve(static_cast<size_t>(k));
        for (int s = 0; s < k; ++s) {
            const double frac = (k == 1) ? 0.0 : static_cast<double>(s) / (k - 1) - 0.5;
            t.scatterers.push_back(Scatterer{frac * cls.extent_m, frac * cls.vel_spread_mps, 1.0});
        }
        scene.targets.push_back(std::move(t));
    }

    scene.interferers.reserve(static_cast<size_t>(cfg.n_interferers));
    for (int j = 0; j < cfg.n_interferers; ++j) {
        Interferer it;
        it.range_m = rng.uniform(cfg.r_min_m, cfg.r_max_m);
        it.vel_mps = rng.uniform(cfg.v_min_mps, cfg.v_max_mps);
        it.amp = cfg.interferer_amp;
        it.code = generate_code(cfg.n_chirps, CodeKind::all_ones);
        scene.interferers.push_back(std::move(it));
    }
    return scene;
}

}  // namespace wavesel
