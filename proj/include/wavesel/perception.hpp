#pragma once

// Cluster classification from hand-crafted features (spatial extent and
// velocity spread against per-class templates) and the per-frame loss in
// [0, 1] used as bandit feedback.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "wavesel/dbscan.hpp"
#include "wavesel/scene.hpp"

namespace wavesel {

enum class LossMode { paper, miss_aware };

struct PerceptionConfig {
    LossMode loss_mode = LossMode::paper;
    double gate_range_m = 5.0;   // cluster-to-target association gate
    double gate_vel_mps = 2.0;
    double sigma_extent_m = 2.0;  // classification kernel widths
    double sigma_vel_mps = 1.0;

    void validate() const {
        if (!(gate_range_m > 0.0) || !(gate_vel_mps > 0.0))
            throw std::invalid_argument("PerceptionConfig: gates must be positive");
        if (!(sigma_extent_m > 0.0) || !(sigma_vel_mps > 0.0))
            throw std::invalid_argument("PerceptionConfig: kernel widths must be positive");
    }
};

struct Classification {
    int class_idx = 0;
    double confidence = 0.0;  // in [0, 1]
};

// Gaussian template kernel on (extent, velocity spread). Ties break to the
// lower class index.
inline Classification classify_cluster(const Cluster& cluster, const std::vector<TargetClass>& classes,
                                       const PerceptionConfig& cfg = {}) {
    if (classes.empty()) throw std::invalid_argument("classify_cluster: class set must not be empty");
    cfg.validate();
    Classification best{0, -1.0};
    for (size_t c = 0; c < classes.size(); ++c) {
        const double de = cluster.extent_m - classes[c].extent_m;
        const double dv = cluster.vel_spread_mps - classes[c].vel_spread_mps;
        const double q = std::exp(-(de * de / (2.0 * cfg.sigma_extent_m * cfg.sigma_extent_m) +
                                    dv * dv / (2.0 * cfg.sigma_vel_mps * cfg.sigma_vel_mps)));
        if (q > best.confidence) best = Classification{static_cast<int>(c), q};
    }
    return best;
}

struct FrameScore {
    std::vector<double> g;  // per-cluster confidence contribution in [0, 1]
    int n_clusters = 0;
    double loss = 1.0;
};

// Scores a frame against ground truth. Clusters are greedily matched
// (best gate-normalized distance first) to at most one true target within
// the gate box; a matched cluster contributes its classification
// confidence when the predicted class equals the target's class, otherwise
// zero (ghost or misclassified). paper mode averages contributions over
// the identified clusters (loss 1 when there are none); miss_aware divides
// by max(n_clusters, n_targets) so undetected targets also cost.
inline FrameScore score_frame(const std::vector<Cluster>& clusters, const Scene& scene,
                              const PerceptionConfig& cfg = {}) {
    cfg.validate();
    const size_t nc = clusters.size();
    const size_t nt = scene.targets.size();

    struct Pair {
        double dist2;
        size_t cluster;
        size_t target;
    };
    std::vector<Pair> candidates;
    for (size_t p = 0; p < nc; ++p) {
        for (size_t t = 0; t < nt; ++t) {
            const double dr = clusters[p].centroid_range_m - scene.targets[t].range_m;
            const double dv = clusters[p].centroid_vel_mps - scene.targets[t].vel_mps;
            if (std::abs(dr) <= cfg.gate_range_m && std::abs(dv) <= cfg.gate_vel_mps) {
                const double nr = dr / cfg.gate_range_m;
                const double nv = dv / cfg.gate_vel_mps;
                candidates.push_back(Pair{nr * nr + nv * nv, p, t});
            }
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Pair& a, const Pair& b) {
        if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
        if (a.cluster != b.cluster) return a.cluster < b.cluster;
        return a.target < b.target;
    });

    std::vector<int> matched_target(nc, -1);
    std::vector<bool> target_used(nt, false);
    std::vector<bool> cluster_used(nc, false);
    for (const auto& cand : candidates) {
        if (cluster_used[cand.cluster] || target_used[cand.target]) continue;
        cluster_used[cand.cluster] = true;
        target_used[cand.target] = true;
        matched_target[cand.cluster] = static_cast<int>(cand.target);
    }

    FrameScore score;
    score.n_clusters = static_cast<int>(nc);
    score.g.resize(nc, 0.0);
    double total = 0.0;
    for (size_t p = 0; p < nc; ++p) {
        if (matched_target[p] < 0) continue;
        const auto cls = classify_cluster(clusters[p], scene.classes, cfg);
        if (cls.class_idx == scene.targets[static_cast<size_t>(matched_target[p])].class_idx) {
            score.g[p] = cls.confidence;
            total += cls.confidence;
        }
    }

    if (cfg.loss_mode == LossMode::paper) {
        score.loss = (nc == 0) ? 1.0 : 1.0 - total / static_cast<double>(nc);
    } else {
        const size_t denom = std::max(nc, nt);
        score.loss = (denom == 0) ? 0.0 : 1.0 - total / static_cast<double>(denom);
    }
    score.loss = std::clamp(score.loss, 0.0, 1.0);
    return score;
}

}  // namespace wavesel
