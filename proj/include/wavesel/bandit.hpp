#pragma once

// Online waveform-selection policies: uniform random, Gaussian Thompson
// Sampling, and satisficing Thompson Sampling with a distortion parameter.
//
// Each arm keeps a Gaussian loss posterior in prior-as-pseudo-observation
// form: after n observations with accumulated loss S and prior mean mu0,
// the posterior is Normal((mu0 + S) / (n + 1), 1 / (n + 1)).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavesel/common.hpp"

namespace wavesel {

struct Posterior {
    int n = 0;
    double sum_loss = 0.0;
    double prior_mean = 0.5;

    double mean() const { return (prior_mean + sum_loss) / (n + 1); }
    double variance() const { return 1.0 / (n + 1); }
};

// Posterior update for one observed loss.
inline Posterior& update(Posterior& post, double loss) {
    if (!(loss >= 0.0 && loss <= 1.0))
        throw std::invalid_argument("update: loss must lie in [0, 1]");
    post.n += 1;
    post.sum_loss += loss;
    return post;
}

inline double sample_theta(const Posterior& post, Xoshiro256pp& rng) {
    NormalSampler gauss;
    return post.mean() + std::sqrt(post.variance()) * gauss(rng);
}

struct History {
    struct Record {
        long frame = 0;
        int waveform = 0;
        double loss = 0.0;
    };
    std::vector<Record> records;

    void push(long frame, int waveform, double loss) {
        if (!records.empty() && frame <= records.back().frame)
            throw std::invalid_argument("History: frame indices must be strictly increasing");
        records.push_back(Record{frame, waveform, loss});
    }
};

enum class PolicyKind { random, ts, sts };

// Aspiration-level convention for the satisficing threshold: absolute
// treats the best achievable loss as 0, so an arm satisfies when its
// sampled loss is <= d; relative measures d from the best sampled loss of
// the current frame (with d = 0 this is exactly standard TS).
enum class Aspiration { absolute, relative };

struct PolicyConfig {
    PolicyKind kind = PolicyKind::sts;
    double d = 0.0;
    Aspiration aspiration = Aspiration::absolute;
    double prior_mean = 0.5;

    void validate() const {
        if (!(d >= 0.0 && d < 1.0))
            throw std::invalid_argument("PolicyConfig: d must lie in [0, 1)");
        if (!std::isfinite(prior_mean))
            throw std::invalid_argument("PolicyConfig: prior_mean must be finite");
    }
};

namespace detail {

inline int argmin_mean(const std::vector<Posterior>& posteriors) {
    int best = 0;
    for (size_t i = 1; i < posteriors.size(); ++i)
        if (posteriors[i].mean() < posteriors[static_cast<size_t>(best)].mean())
            best = static_cast<int>(i);
    return best;
}

}  // namespace detail

// Selection rule applied to already-sampled theta values; exposed so the
// deterministic part of the policy can be tested without a random stream.
inline int select_from_thetas(const std::vector<double>& thetas,
                              const std::vector<Posterior>& posteriors,
                              const PolicyConfig& cfg) {
    const size_t n = posteriors.size();
    if (cfg.kind == PolicyKind::ts) {
        int best = 0;
        for (size_t i = 1; i < n; ++i)
            if (thetas[i] < thetas[static_cast<size_t>(best)]) best = static_cast<int>(i);
        return best;
    }
    double threshold = cfg.d;
    if (cfg.aspiration == Aspiration::relative) {
        double lo = thetas[0];
        for (size_t i = 1; i < n; ++i) lo = std::min(lo, thetas[i]);
        threshold = lo + cfg.d;
    }
    for (size_t i = 0; i < n; ++i)
        if (thetas[i] <= threshold) return static_cast<int>(i);
    // No satisfactory arm: try an untested one, lowest index first.
    for (size_t i = 0; i < n; ++i)
        if (posteriors[i].n == 0) return static_cast<int>(i);
    return detail::argmin_mean(posteriors);
}

// Picks a waveform index. random draws uniformly; ts and sts both sample
// one theta per arm in catalog order (identical stream consumption), then
// apply their rule, so sts with d = 0 in relative mode reproduces ts
// action-for-action under a shared stream.
inline int select(const std::vector<Posterior>& posteriors, const PolicyConfig& cfg,
                  Xoshiro256pp& rng) {
    cfg.validate();
    if (posteriors.empty()) throw std::invalid_argument("select: posterior list must not be empty");
    if (cfg.kind == PolicyKind::random)
        return static_cast<int>(rng.uniform_below(posteriors.size()));

    NormalSampler gauss;
    std::vector<double> thetas(posteriors.size());
    for (size_t i = 0; i < posteriors.size(); ++i)
        thetas[i] = posteriors[i].mean() + std::sqrt(posteriors[i].variance()) * gauss(rng);
    return select_from_thetas(thetas, posteriors, cfg);
}

// Owns per-arm posteriors and the transcript for one learning run.
class Policy {
public:
    Policy(PolicyConfig cfg, size_t n_arms) : cfg_(cfg) {
        cfg_.validate();
        if (n_arms == 0) throw std::invalid_argument("Policy: need at least one arm");
        posteriors_.resize(n_arms, Posterior{0, 0.0, cfg.prior_mean});
    }

    int select_arm(Xoshiro256pp& rng) { return select(posteriors_, cfg_, rng); }

    void observe(long frame, int arm, double loss) {
        update(posteriors_.at(static_cast<size_t>(arm)), loss);
        history_.push(frame, arm, loss);
    }

    const std::vector<Posterior>& posteriors() const { return posteriors_; }
    const History& history() const { return history_; }
    const PolicyConfig& config() const { return cfg_; }

private:
    PolicyConfig cfg_;
    std::vector<Posterior> posteriors_;
    History history_;
};

}  // namespace wavesel
