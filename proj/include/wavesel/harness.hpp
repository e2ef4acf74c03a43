#pragma once

// Experiment harness: ties scene synthesis, detection, perception, and the
// waveform-selection policies into repeatable multi-run experiments.
//
// Seed discipline (master seed S):
//   scene for run r        derive_seed(S, "scene", r)
//   policy stream          derive_seed(S, "policy", r, policy_index)
//   noise for frame f      derive_seed(S, "noise", r, f)
// The noise stream depends only on (run, frame), so every policy in a run sees
// the same measurement noise: loss differences are policy differences.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "wavesel/bandit.hpp"
#include "wavesel/cfar.hpp"
#include "wavesel/common.hpp"
#include "wavesel/config.hpp"
#include "wavesel/dbscan.hpp"
#include "wavesel/perception.hpp"
#include "wavesel/rd_pipeline.hpp"
#include "wavesel/scene.hpp"
#include "wavesel/waveform.hpp"

namespace wavesel {

inline std::string policy_label(const PolicyConfig& cfg) {
    switch (cfg.kind) {
        case PolicyKind::random: return "random";
        case PolicyKind::ts: return "ts";
        case PolicyKind::sts: {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "sts:%g", cfg.d);
            std::string s(buf);
            if (cfg.aspiration == Aspiration::relative) s += ":rel";
            return s;
        }
    }
    throw std::logic_error("unreachable policy kind");
}

// Compact policy spec: "random", "ts", "sts:<d>", "sts:<d>:abs|rel".
inline PolicyConfig parse_policy_spec(const std::string& spec) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : spec) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);

    PolicyConfig cfg;
    if (parts[0] == "random") {
        cfg.kind = PolicyKind::random;
    } else if (parts[0] == "ts") {
        cfg.kind = PolicyKind::ts;
    } else if (parts[0] == "sts") {
        cfg.kind = PolicyKind::sts;
    } else {
        throw ConfigError("unknown policy '" + spec + "'");
    }
    if (parts.size() > 1 && !parts[1].empty()) {
        if (cfg.kind != PolicyKind::sts) throw ConfigError("policy '" + parts[0] + "' takes no parameter");
        try {
            size_t pos = 0;
            cfg.d = std::stod(parts[1], &pos);
            if (pos != parts[1].size()) throw std::invalid_argument(parts[1]);
        } catch (const std::exception&) {
            throw ConfigError("bad distortion in policy spec '" + spec + "'");
        }
    }
    if (parts.size() > 2) {
        if (parts[2] == "abs") {
            cfg.aspiration = Aspiration::absolute;
        } else if (parts[2] == "rel") {
            cfg.aspiration = Aspiration::relative;
        } else {
            throw ConfigError("bad aspiration in policy spec '" + spec + "'");
        }
    }
    if (parts.size() > 3) throw ConfigError("malformed policy spec '" + spec + "'");
    cfg.validate();
    return cfg;
}

// The four-policy comparison set the learning-curve experiments use.
// Satisficing runs in relative-aspiration mode: the measurement-level loss
// floor here sits near 0.4, so an absolute aspiration of d = 0.1 or 0.3 would
// never be met and the policy would degenerate into an index scan.
inline std::vector<PolicyConfig> default_policy_set() {
    return {parse_policy_spec("random"), parse_policy_spec("ts"), parse_policy_spec("sts:0.1:rel"),
            parse_policy_spec("sts:0.3:rel")};
}

struct ExperimentConfig {
    ChirpParams chirp{};
    std::vector<double> bandwidths_hz = log_spaced_bandwidths(30.0e6, 1.5e9, 8);
    int n_codes = 8;
    // Chosen so every random code in the default catalog knocks the C5-style
    // off-grid ghost down by at least 11 dB against the all-ones baseline.
    uint64_t code_seed = 282;
    bool include_all_ones = true;

    SceneConfig scene{};
    // Cross 2D rather than the detector module's 1D default: a decode-spread
    // interferer occupies one range bin across all Doppler, which a
    // range-sliding window cannot see but Doppler-side training cells absorb.
    CfarConfig cfar{.mode = CfarMode::cross_2d};
    // eps_vel below one Doppler bin (3.459 m/s at the default chirp) keeps
    // straddle leakage in the adjacent Doppler bin from joining a cluster and
    // inflating its velocity spread past every class template.
    DbscanConfig dbscan_cfg{.eps_vel_mps = 3.0};
    PerceptionConfig perception{};
    RdOptions rd{};

    double r_max_m = 120.0;
    int horizon = 5000;
    int runs = 20;
    int window = 500;
    int threads = 1;
    uint64_t seed = 1;

    std::vector<PolicyConfig> policies = default_policy_set();

    void validate() const {
        chirp.validate();
        scene.validate();
        cfar.validate();
        dbscan_cfg.validate();
        perception.validate();
        if (bandwidths_hz.empty()) throw std::invalid_argument("bandwidth list is empty");
        if (n_codes < 1) throw std::invalid_argument("n_codes must be >= 1");
        if (r_max_m <= 0.0) throw std::invalid_argument("r_max_m must be positive");
        if (scene.r_max_m > r_max_m) throw std::invalid_argument("scene r_max exceeds map extent r_max_m");
        if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
        if (runs < 1) throw std::invalid_argument("runs must be >= 1");
        if (window < 1) throw std::invalid_argument("window must be >= 1");
        if (threads < 1) throw std::invalid_argument("threads must be >= 1");
        if (policies.empty()) throw std::invalid_argument("policy list is empty");
        for (const auto& p : policies) p.validate();
    }

    WaveformCatalog catalog() const {
        return build_catalog(chirp, bandwidths_hz, n_codes, code_seed, include_all_ones);
    }

    static ExperimentConfig from_config(const Config& c) {
        ExperimentConfig e;
        e.chirp.fc_hz = c.get_double("radar.fc_hz", e.chirp.fc_hz);
        e.chirp.chirp_T_s = c.get_double("radar.chirp_T_s", e.chirp.chirp_T_s);
        e.chirp.n_chirps = c.get_int("radar.n_chirps", e.chirp.n_chirps);
        e.r_max_m = c.get_double("radar.r_max_m", e.r_max_m);

        if (c.has("catalog.bandwidths_hz")) {
            e.bandwidths_hz = c.get_double_list("catalog.bandwidths_hz", e.bandwidths_hz);
        } else {
            const double lo = c.get_double("catalog.bw_min_hz", 30.0e6);
            const double hi = c.get_double("catalog.bw_max_hz", 1.5e9);
            const int n = c.get_int("catalog.n_bandwidths", 8);
            e.bandwidths_hz = log_spaced_bandwidths(lo, hi, n);
        }
        e.n_codes = c.get_int("catalog.n_codes", e.n_codes);
        e.code_seed = static_cast<uint64_t>(c.get_long("catalog.code_seed", static_cast<long>(e.code_seed)));
        e.include_all_ones = c.get_bool("catalog.include_all_ones", e.include_all_ones);

        e.scene.n_targets = c.get_int("scene.n_targets", e.scene.n_targets);
        e.scene.n_interferers = c.get_int("scene.n_interferers", e.scene.n_interferers);
        if (c.has("scene.r_bounds_m")) {
            const auto b = c.get_double_list("scene.r_bounds_m", {});
            if (b.size() != 2) throw ConfigError("scene.r_bounds_m needs exactly two values");
            e.scene.r_min_m = b[0];
            e.scene.r_max_m = b[1];
        }
        if (c.has("scene.v_bounds_mps")) {
            const auto b = c.get_double_list("scene.v_bounds_mps", {});
            if (b.size() != 2) throw ConfigError("scene.v_bounds_mps needs exactly two values");
            e.scene.v_min_mps = b[0];
            e.scene.v_max_mps = b[1];
        }
        e.scene.r_min_m = c.get_double("scene.r_min_m", e.scene.r_min_m);
        e.scene.r_max_m = c.get_double("scene.r_max_m", e.scene.r_max_m);
        e.scene.v_min_mps = c.get_double("scene.v_min_mps", e.scene.v_min_mps);
        e.scene.v_max_mps = c.get_double("scene.v_max_mps", e.scene.v_max_mps);
        if (c.has("scene.classes")) {
            std::vector<TargetClass> classes;
            for (const auto& item : c.get_string_list("scene.classes", {})) {
                // each item: name:extent_m:vel_spread_mps
                std::vector<std::string> f;
                std::string cur;
                for (char ch : item) {
                    if (ch == ':') {
                        f.push_back(cur);
                        cur.clear();
                    } else {
                        cur += ch;
                    }
                }
                f.push_back(cur);
                if (f.size() != 3) throw ConfigError("bad class spec '" + item + "' (want name:extent:spread)");
                try {
                    classes.push_back(TargetClass{f[0], std::stod(f[1]), std::stod(f[2])});
                } catch (const std::exception&) {
                    throw ConfigError("bad number in class spec '" + item + "'");
                }
            }
            e.scene.classes = std::move(classes);
        }
        e.scene.target_amp = c.get_double("scene.target_amp", e.scene.target_amp);
        e.scene.interferer_amp = c.get_double("scene.interferer_amp", e.scene.interferer_amp);
        e.scene.noise_psd = c.get_double("scene.noise_psd", e.scene.noise_psd);
        e.scene.n_scatterers = c.get_int("scene.n_scatterers", e.scene.n_scatterers);
        e.scene.redraw_every_frame = c.get_bool("scene.redraw_every_frame", e.scene.redraw_every_frame);
        e.scene.n_chirps = e.chirp.n_chirps;

        e.cfar.pfa = c.get_double("cfar.pfa", e.cfar.pfa);
        e.cfar.guard = c.get_int("cfar.guard", e.cfar.guard);
        e.cfar.training = c.get_int("cfar.training", e.cfar.training);
        const std::string mode =
            c.get_string("cfar.mode", e.cfar.mode == CfarMode::cross_2d ? "cross_2d" : "range_1d");
        if (mode == "range_1d") {
            e.cfar.mode = CfarMode::range_1d;
        } else if (mode == "cross_2d") {
            e.cfar.mode = CfarMode::cross_2d;
        } else {
            throw ConfigError("bad cfar.mode '" + mode + "'");
        }

        // "auto" clears any preset radius so it resolves from map metadata.
        if (c.has("dbscan.eps_range_m")) {
            if (c.get_string("dbscan.eps_range_m", "") == "auto")
                e.dbscan_cfg.eps_range_m.reset();
            else
                e.dbscan_cfg.eps_range_m = c.get_double("dbscan.eps_range_m", 0.0);
        }
        if (c.has("dbscan.eps_vel_mps")) {
            if (c.get_string("dbscan.eps_vel_mps", "") == "auto")
                e.dbscan_cfg.eps_vel_mps.reset();
            else
                e.dbscan_cfg.eps_vel_mps = c.get_double("dbscan.eps_vel_mps", 0.0);
        }
        e.dbscan_cfg.min_pts = c.get_int("dbscan.min_pts", e.dbscan_cfg.min_pts);

        const std::string loss = c.get_string("perception.loss_mode", "paper");
        if (loss == "paper") {
            e.perception.loss_mode = LossMode::paper;
        } else if (loss == "miss_aware") {
            e.perception.loss_mode = LossMode::miss_aware;
        } else {
            throw ConfigError("bad perception.loss_mode '" + loss + "'");
        }
        e.perception.gate_range_m = c.get_double("perception.gate_range_m", e.perception.gate_range_m);
        e.perception.gate_vel_mps = c.get_double("perception.gate_vel_mps", e.perception.gate_vel_mps);
        e.perception.sigma_extent_m = c.get_double("perception.sigma_extent_m", e.perception.sigma_extent_m);
        e.perception.sigma_vel_mps = c.get_double("perception.sigma_vel_mps", e.perception.sigma_vel_mps);

        const std::string win = c.get_string("rd.window", "none");
        if (win == "none") {
            e.rd.window = WindowKind::none;
        } else if (win == "hann") {
            e.rd.window = WindowKind::hann;
        } else {
            throw ConfigError("bad rd.window '" + win + "'");
        }

        e.horizon = c.get_int("experiment.horizon", e.horizon);
        e.runs = c.get_int("experiment.runs", e.runs);
        e.window = c.get_int("experiment.window", e.window);
        e.threads = c.get_int("experiment.threads", e.threads);
        e.seed = static_cast<uint64_t>(c.get_long("experiment.seed", static_cast<long>(e.seed)));

        if (c.has("experiment.policies")) {
            e.policies.clear();
            for (const auto& spec : c.get_string_list("experiment.policies", {}))
                e.policies.push_back(parse_policy_spec(spec));
        } else if (c.has("policy.kind") || c.has("policy.d") || c.has("policy.aspiration") ||
                   c.has("policy.prior_mean")) {
            PolicyConfig p;
            const std::string kind = c.get_string("policy.kind", "sts");
            std::string spec = kind;
            if (kind == "sts") {
                char buf[48];
                std::snprintf(buf, sizeof(buf), "sts:%.17g:%s", c.get_double("policy.d", 0.0),
                              c.get_string("policy.aspiration", "abs") == "rel" ? "rel" : "abs");
                spec = buf;
            }
            p = parse_policy_spec(spec);
            p.prior_mean = c.get_double("policy.prior_mean", p.prior_mean);
            e.policies = {p};
        }
        e.validate();
        return e;
    }
};

struct FrameRow {
    int frame = 0;
    int waveform = 0;
    double bandwidth_hz = 0.0;
    double loss = 0.0;
};

struct RunRecord {
    std::string policy;
    int policy_index = 0;
    int run = 0;
    std::vector<FrameRow> rows;
    std::vector<double> running_mean;  // cumulative mean loss through each frame
};

namespace detail {

inline void run_one(const ExperimentConfig& cfg, const WaveformCatalog& catalog, int run,
                    std::vector<RunRecord>& out_slots) {
    const Scene scene = sample_scene(cfg.scene, derive_seed(cfg.seed, "scene", static_cast<uint64_t>(run)));
    FrameRenderer renderer(scene, catalog, cfg.r_max_m, cfg.rd);

    for (size_t p = 0; p < cfg.policies.size(); ++p) {
        Policy policy(cfg.policies[p], catalog.entries.size());
        Xoshiro256pp policy_rng(
            derive_seed(cfg.seed, "policy", static_cast<uint64_t>(run), static_cast<uint64_t>(p)));

        RunRecord rec;
        rec.policy = policy_label(cfg.policies[p]);
        rec.policy_index = static_cast<int>(p);
        rec.run = run;
        rec.rows.reserve(static_cast<size_t>(cfg.horizon));
        rec.running_mean.reserve(static_cast<size_t>(cfg.horizon));
        double loss_acc = 0.0;

        for (int f = 0; f < cfg.horizon; ++f) {
            const size_t arm = policy.select_arm(policy_rng);
            Xoshiro256pp noise_rng(
                derive_seed(cfg.seed, "noise", static_cast<uint64_t>(run), static_cast<uint64_t>(f)));

            RDMap map;
            if (cfg.scene.redraw_every_frame) {
                const Scene frame_scene = sample_scene(
                    cfg.scene,
                    derive_seed(cfg.seed, "scene", static_cast<uint64_t>(run), static_cast<uint64_t>(f)));
                map = simulate_frame(frame_scene, catalog.entries[arm], catalog.chirp, cfg.r_max_m,
                                     &noise_rng, cfg.rd);
            } else {
                map = renderer.render(arm, noise_rng);
            }

            const PointCloud cloud = cfar_detect(map, cfg.cfar);
            const DbscanResult clusters = dbscan(cloud, cfg.dbscan_cfg);
            const FrameScore score = score_frame(clusters.clusters, scene, cfg.perception);
            policy.observe(f, arm, score.loss);

            rec.rows.push_back({f, static_cast<int>(arm), catalog.entries[arm].bandwidth_hz, score.loss});
            loss_acc += score.loss;
            rec.running_mean.push_back(loss_acc / (f + 1));
        }
        out_slots[p * static_cast<size_t>(cfg.runs) + static_cast<size_t>(run)] = std::move(rec);
    }
}

}  // namespace detail

// Records are ordered by (policy_index, run); each record's rows by frame.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg,
                                             std::function<void(int, int)> on_run_done = {}) {
    cfg.validate();
    const WaveformCatalog catalog = cfg.catalog();
    std::vector<RunRecord> slots(cfg.policies.size() * static_cast<size_t>(cfg.runs));

    if (cfg.threads <= 1) {
        for (int r = 0; r < cfg.runs; ++r) {
            detail::run_one(cfg, catalog, r, slots);
            if (on_run_done) on_run_done(r + 1, cfg.runs);
        }
        return slots;
    }

    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto worker = [&]() {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= cfg.runs) return;
            try {
                detail::run_one(cfg, catalog, r, slots);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
            const int d = done.fetch_add(1) + 1;
            if (on_run_done) on_run_done(d, cfg.runs);
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min(cfg.threads, cfg.runs);
    pool.reserve(static_cast<size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return slots;
}

struct PolicyCurve {
    std::string label;
    int policy_index = 0;
    std::vector<double> mean_loss;  // per frame, averaged across runs
    std::vector<double> std_loss;   // per frame, sample std across runs (0 for one run)
    std::vector<double> smoothed;   // trailing moving average of mean_loss
};

// Trailing moving average over at most `window` frames ending at each frame.
inline std::vector<double> moving_average(const std::vector<double>& x, int window) {
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    std::vector<double> out(x.size());
    double acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        acc += x[i];
        if (i >= static_cast<size_t>(window)) acc -= x[i - static_cast<size_t>(window)];
        const size_t n = std::min(i + 1, static_cast<size_t>(window));
        out[i] = acc / static_cast<double>(n);
    }
    return out;
}

inline std::vector<PolicyCurve> aggregate(const std::vector<RunRecord>& records, int window) {
    std::vector<PolicyCurve> curves;
    std::vector<std::vector<double>> sumsq;
    std::vector<int> run_counts;
    for (const auto& rec : records) {
        if (curves.empty() || curves.back().policy_index != rec.policy_index) {
            PolicyCurve c;
            c.label = rec.policy;
            c.policy_index = rec.policy_index;
            c.mean_loss.assign(rec.rows.size(), 0.0);
            curves.push_back(std::move(c));
            sumsq.emplace_back(rec.rows.size(), 0.0);
            run_counts.push_back(0);
        }
        PolicyCurve& c = curves.back();
        if (rec.rows.size() != c.mean_loss.size())
            throw std::invalid_argument("records disagree on horizon");
        for (size_t f = 0; f < rec.rows.size(); ++f) {
            c.mean_loss[f] += rec.rows[f].loss;
            sumsq.back()[f] += rec.rows[f].loss * rec.rows[f].loss;
        }
        ++run_counts.back();
    }
    for (size_t i = 0; i < curves.size(); ++i) {
        const double n = run_counts[i] > 0 ? static_cast<double>(run_counts[i]) : 1.0;
        for (auto& v : curves[i].mean_loss) v /= n;
        curves[i].std_loss.assign(curves[i].mean_loss.size(), 0.0);
        if (n > 1.5) {
            for (size_t f = 0; f < curves[i].std_loss.size(); ++f) {
                const double m = curves[i].mean_loss[f];
                const double var = (sumsq[i][f] - n * m * m) / (n - 1.0);
                curves[i].std_loss[f] = var > 0.0 ? std::sqrt(var) : 0.0;
            }
        }
        curves[i].smoothed = moving_average(curves[i].mean_loss, window);
    }
    return curves;
}

// Mean of a policy's smoothed curve over an inclusive frame interval.
inline double interval_mean(const PolicyCurve& curve, int first_frame, int last_frame) {
    if (first_frame < 0 || last_frame >= static_cast<int>(curve.smoothed.size()) || first_frame > last_frame)
        throw std::invalid_argument("bad frame interval");
    double acc = 0.0;
    for (int f = first_frame; f <= last_frame; ++f) acc += curve.smoothed[static_cast<size_t>(f)];
    return acc / static_cast<double>(last_frame - first_frame + 1);
}

inline void write_curves_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << "policy,run,frame,waveform_idx,bandwidth_hz,loss\n";
    char buf[128];
    for (const auto& rec : records) {
        for (const auto& row : rec.rows) {
            std::snprintf(buf, sizeof(buf), "%s,%d,%d,%d,%.17g,%.17g\n", rec.policy.c_str(), rec.run,
                          row.frame, row.waveform, row.bandwidth_hz, row.loss);
            out << buf;
        }
    }
}

inline void write_curves_csv(const std::string& path, const std::vector<RunRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_curves_csv(out, records);
}

// Order-insensitive only in formatting; any change to losses or arm choices changes the digest.
inline uint64_t record_digest(const std::vector<RunRecord>& records) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    for (const auto& rec : records) {
        for (char c : rec.policy) mix(static_cast<uint64_t>(static_cast<unsigned char>(c)));
        mix(static_cast<uint64_t>(rec.run));
        for (const auto& row : rec.rows) {
            mix(static_cast<uint64_t>(row.frame));
            mix(static_cast<uint64_t>(row.waveform));
            uint64_t bits = 0;
            static_assert(sizeof(bits) == sizeof(row.loss));
            std::memcpy(&bits, &row.loss, sizeof(bits));
            mix(bits);
        }
    }
    return h;
}

}  // namespace wavesel
