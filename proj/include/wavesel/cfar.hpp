#pragma once

// Cell-averaging CFAR. Default mode runs 1D along the range axis
// independently per Doppler column, with circular wrap at the edges (the
// map is an FFT output, hence periodic). Square-law detector: cell powers
// |x|^2 are averaged, matching the closed-form threshold factor.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wavesel/rd_pipeline.hpp"

namespace wavesel {

enum class CfarMode { range_1d, cross_2d };

struct CfarConfig {
    double pfa = 1.0e-5;
    int guard = 5;      // guard cells per side
    int training = 10;  // training cells per side
    CfarMode mode = CfarMode::range_1d;

    void validate() const {
        if (!(pfa > 0.0) || !(pfa < 1.0))
            throw std::invalid_argument("CfarConfig: pfa must lie in (0, 1)");
        if (guard < 0) throw std::invalid_argument("CfarConfig: guard must be >= 0");
        if (training < 1) throw std::invalid_argument("CfarConfig: training must be >= 1");
    }
};

// Closed-form CA-CFAR threshold multiplier for n_train averaged cells:
// alpha = n_train * (pfa^(-1/n_train) - 1).
inline double threshold_factor(double pfa, int n_train) {
    if (!(pfa > 0.0) || pfa > 1.0)
        throw std::invalid_argument("threshold_factor: pfa must lie in (0, 1]");
    if (n_train < 1) throw std::invalid_argument("threshold_factor: n_train must be >= 1");
    return n_train * (std::pow(pfa, -1.0 / n_train) - 1.0);
}

struct Detection {
    double range_m = 0.0;
    double vel_mps = 0.0;
    double power_db = 0.0;
    int range_bin = 0;
    int doppler_bin = 0;
};

struct MapMeta {
    int n_range = 0;
    int n_doppler = 0;
    double range_bin_m = 0.0;
    double vel_bin_mps = 0.0;
};

struct PointCloud {
    std::vector<Detection> points;  // canonical order: range-major, then Doppler
    MapMeta map_meta;
};

namespace detail {

// Circular window sum over powers p (length n) starting at offset `first`
// (may be negative) with length `len`, via a doubled prefix table.
class CircularSums {
public:
    explicit CircularSums(const std::vector<double>& p) : n_(static_cast<int>(p.size())) {
        prefix_.resize(2 * static_cast<size_t>(n_) + 1, 0.0);
        for (int i = 0; i < 2 * n_; ++i)
            prefix_[static_cast<size_t>(i) + 1] = prefix_[static_cast<size_t>(i)] + p[static_cast<size_t>(i % n_)];
    }
    double sum(int first, int len) const {
        int a = first % n_;
        if (a < 0) a += n_;
        return prefix_[static_cast<size_t>(a + len)] - prefix_[static_cast<size_t>(a)];
    }

private:
    int n_;
    std::vector<double> prefix_;
};

}  // namespace detail

inline PointCloud cfar_detect(const RDMap& map, const CfarConfig& cfg) {
    cfg.validate();
    const int window = 2 * (cfg.guard + cfg.training) + 1;
    if (map.n_range < window)
        throw std::invalid_argument("cfar_detect: map too small for CFAR window along range: need >= " +
                                    std::to_string(window) + " bins, got " + std::to_string(map.n_range));
    if (cfg.mode == CfarMode::cross_2d && map.n_doppler < window)
        throw std::invalid_argument("cfar_detect: map too small for CFAR window along Doppler: need >= " +
                                    std::to_string(window) + " bins, got " + std::to_string(map.n_doppler));

    const int nr = map.n_range;
    const int nd = map.n_doppler;

    std::vector<double> power(static_cast<size_t>(nr) * nd);
    for (int r = 0; r < nr; ++r)
        for (int d = 0; d < nd; ++d)
            power[static_cast<size_t>(r) * nd + d] = std::norm(map.at(r, d));

    PointCloud cloud;
    cloud.map_meta = MapMeta{nr, nd, map.range_bin_m, map.vel_bin_mps};

    auto emit = [&](int r, int d) {
        Detection det;
        det.range_bin = r;
        det.doppler_bin = d;
        det.range_m = map.range_of(r);
        det.vel_mps = map.velocity_of(d);
        det.power_db = 10.0 * std::log10(power[static_cast<size_t>(r) * nd + d]);
        cloud.points.push_back(det);
    };

    if (cfg.mode == CfarMode::range_1d) {
        const double alpha = threshold_factor(cfg.pfa, 2 * cfg.training);
        std::vector<double> col(static_cast<size_t>(nr));
        std::vector<std::pair<int, int>> hits;  // (range bin, doppler bin)
        for (int d = 0; d < nd; ++d) {
            for (int r = 0; r < nr; ++r) col[static_cast<size_t>(r)] = power[static_cast<size_t>(r) * nd + d];
            detail::CircularSums sums(col);
            for (int r = 0; r < nr; ++r) {
                const double train = sums.sum(r + cfg.guard + 1, cfg.training) +
                                     sums.sum(r - cfg.guard - cfg.training, cfg.training);
                const double mean = train / (2.0 * cfg.training);
                if (col[static_cast<size_t>(r)] > alpha * mean) hits.emplace_back(r, d);
            }
        }
        std::sort(hits.begin(), hits.end());  // canonical range-major order
        for (const auto& [r, d] : hits) emit(r, d);
    } else {
        const double alpha = threshold_factor(cfg.pfa, 4 * cfg.training);
        // The cross window is separable: per-cell training sum = circular
        // two-sided window along range plus the same along Doppler.
        std::vector<double> train(power.size(), 0.0);
        std::vector<double> line(static_cast<size_t>(nr));
        for (int d = 0; d < nd; ++d) {
            for (int r = 0; r < nr; ++r) line[static_cast<size_t>(r)] = power[static_cast<size_t>(r) * nd + d];
            detail::CircularSums sums(line);
            for (int r = 0; r < nr; ++r)
                train[static_cast<size_t>(r) * nd + d] = sums.sum(r + cfg.guard + 1, cfg.training) +
                                                         sums.sum(r - cfg.guard - cfg.training, cfg.training);
        }
        std::vector<double> row(static_cast<size_t>(nd));
        for (int r = 0; r < nr; ++r) {
            for (int d = 0; d < nd; ++d) row[static_cast<size_t>(d)] = power[static_cast<size_t>(r) * nd + d];
            detail::CircularSums sums(row);
            for (int d = 0; d < nd; ++d) {
                const double t = train[static_cast<size_t>(r) * nd + d] +
                                 sums.sum(d + cfg.guard + 1, cfg.training) +
                                 sums.sum(d - cfg.guard - cfg.training, cfg.training);
                if (power[static_cast<size_t>(r) * nd + d] > alpha * (t / (4.0 * cfg.training)))
                    emit(r, d);  // loop order is already canonical
            }
        }
    }
    return cloud;
}

}  // namespace wavesel
