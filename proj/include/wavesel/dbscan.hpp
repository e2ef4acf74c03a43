#pragma once

// DBSCAN over CFAR point clouds. Distance is Euclidean on coordinates
// scaled per axis, (range / eps_range, vel / eps_vel), with unit radius;
// a point is core iff it has >= min_pts neighbors within radius, counting
// itself. Clusters are the connected components of core points; a border
// point joins the cluster of its first core neighbor in canonical point
// order (sorted by range bin, then Doppler bin), which makes the partition
// independent of input permutation.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "wavesel/cfar.hpp"

namespace wavesel {

struct DbscanConfig {
    // Absent values are resolved from map metadata: eps_range from the
    // range bin (coarse maps need wider neighborhoods), eps_vel from the
    // velocity bin.
    std::optional<double> eps_range_m;
    std::optional<double> eps_vel_mps;
    int min_pts = 3;

    void validate() const {
        if (eps_range_m && !(*eps_range_m > 0.0))
            throw std::invalid_argument("DbscanConfig: eps_range_m must be positive");
        if (eps_vel_mps && !(*eps_vel_mps > 0.0))
            throw std::invalid_argument("DbscanConfig: eps_vel_mps must be positive");
        if (min_pts < 1) throw std::invalid_argument("DbscanConfig: min_pts must be >= 1");
    }
};

struct DbscanParams {
    double eps_range_m = 1.5;
    double eps_vel_mps = 1.0;
    int min_pts = 3;
};

inline DbscanParams resolve_dbscan(const DbscanConfig& cfg, const MapMeta& meta) {
    cfg.validate();
    DbscanParams p;
    p.eps_range_m = cfg.eps_range_m ? *cfg.eps_range_m : std::max(2.0 * meta.range_bin_m, 1.5);
    p.eps_vel_mps = cfg.eps_vel_mps ? *cfg.eps_vel_mps : 2.0 * meta.vel_bin_mps;
    p.min_pts = cfg.min_pts;
    return p;
}

struct Cluster {
    std::vector<Detection> members;  // canonical order
    double centroid_range_m = 0.0;
    double centroid_vel_mps = 0.0;
    double extent_m = 0.0;          // max pairwise range span
    double vel_spread_mps = 0.0;    // max pairwise velocity span
    double total_power = 0.0;       // sum of linear powers
};

struct DbscanResult {
    std::vector<Cluster> clusters;   // ordered by first (canonical) member
    std::vector<Detection> noise;
};

namespace detail {

inline Cluster make_cluster(std::vector<Detection> members) {
    Cluster c;
    double rmin = members.front().range_m, rmax = rmin;
    double vmin = members.front().vel_mps, vmax = vmin;
    double rsum = 0.0, vsum = 0.0;
    for (const auto& m : members) {
        rmin = std::min(rmin, m.range_m);
        rmax = std::max(rmax, m.range_m);
        vmin = std::min(vmin, m.vel_mps);
        vmax = std::max(vmax, m.vel_mps);
        rsum += m.range_m;
        vsum += m.vel_mps;
        c.total_power += std::pow(10.0, m.power_db / 10.0);
    }
    c.centroid_range_m = rsum / members.size();
    c.centroid_vel_mps = vsum / members.size();
    c.extent_m = rmax - rmin;
    c.vel_spread_mps = vmax - vmin;
    c.members = std::move(members);
    return c;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[static_cast<size_t>(a)] != a) {
            parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
            a = parent[static_cast<size_t>(a)];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
    }
};

}  // namespace detail

inline DbscanResult dbscan(const PointCloud& cloud, const DbscanConfig& cfg) {
    const DbscanParams p = resolve_dbscan(cfg, cloud.map_meta);
    DbscanResult result;
    const size_t n = cloud.points.size();
    if (n == 0) return result;

    // Canonical order regardless of input permutation.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        const auto& pa = cloud.points[a];
        const auto& pb = cloud.points[b];
        if (pa.range_bin != pb.range_bin) return pa.range_bin < pb.range_bin;
        return pa.doppler_bin < pb.doppler_bin;
    });
    std::vector<Detection> pts(n);
    for (size_t i = 0; i < n; ++i) pts[i] = cloud.points[order[i]];

    std::vector<double> x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
        x[i] = pts[i].range_m / p.eps_range_m;
        y[i] = pts[i].vel_mps / p.eps_vel_mps;
    }
    auto within = [&](size_t a, size_t b) {
        const double dx = x[a] - x[b];
        const double dy = y[a] - y[b];
        return dx * dx + dy * dy <= 1.0;
    };

    std::vector<std::vector<int>> neighbors(n);
    for (size_t i = 0; i < n; ++i) {
        neighbors[i].push_back(static_cast<int>(i));  // inclusive of self
        for (size_t j = i + 1; j < n; ++j) {
            if (within(i, j)) {
                neighbors[i].push_back(static_cast<int>(j));
                neighbors[j].push_back(static_cast<int>(i));
            }
        }
    }
    std::vector<bool> core(n);
    for (size_t i = 0; i < n; ++i) core[i] = static_cast<int>(neighbors[i].size()) >= p.min_pts;

    detail::UnionFind uf(n);
    for (size_t i = 0; i < n; ++i) {
        if (!core[i]) continue;
        for (int j : neighbors[i])
            if (core[static_cast<size_t>(j)]) uf.unite(static_cast<int>(i), j);
    }

    std::vector<int> label(n, -1);  // root index of the component, else -1
    for (size_t i = 0; i < n; ++i)
        if (core[i]) label[i] = uf.find(static_cast<int>(i));
    for (size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        for (int j : neighbors[i]) {  // neighbors are in canonical order
            if (core[static_cast<size_t>(j)]) {
                label[i] = uf.find(j);
                break;
            }
        }
    }

    std::vector<int> roots;
    for (size_t i = 0; i < n; ++i)
        if (core[i] && label[i] == static_cast<int>(i)) roots.push_back(static_cast<int>(i));
    std::sort(roots.begin(), roots.end());

    for (int root : roots) {
        std::vector<Detection> members;
        for (size_t i = 0; i < n; ++i)
            if (label[i] == root) members.push_back(pts[i]);
        result.clusters.push_back(detail::make_cluster(std::move(members)));
    }
    for (size_t i = 0; i < n; ++i)
        if (label[i] < 0) result.noise.push_back(pts[i]);
    return result;
}

}  // namespace wavesel
