#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wavesel/bandit.hpp"
#include "wavesel/common.hpp"

using namespace wavesel;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PolicyConfig make_policy(PolicyKind kind, double d = 0.0,
                         Aspiration asp = Aspiration::absolute) {
    PolicyConfig cfg;
    cfg.kind = kind;
    cfg.d = d;
    cfg.aspiration = asp;
    return cfg;
}

Posterior with_losses(std::initializer_list<double> losses) {
    Posterior post;
    for (double x : losses) update(post, x);
    return post;
}

}  // namespace

TEST_CASE("fresh posterior carries the prior") {
    const Posterior post;
    REQUIRE(post.mean() == 0.5);
    REQUIRE(post.variance() == 1.0);
}

TEST_CASE("posterior mean blends the prior with observed losses") {
    Posterior post;
    update(post, 0.2);
    REQUIRE_THAT(post.mean(), WithinAbs(0.35, 1e-15));  // (0.5 + 0.2) / 2
    REQUIRE(post.variance() == 0.5);

    const auto two = with_losses({0.2, 0.4});
    REQUIRE_THAT(two.mean(), WithinRel(1.1 / 3.0, 1e-15));
    REQUIRE_THAT(two.variance(), WithinRel(1.0 / 3.0, 1e-15));
}

TEST_CASE("posterior concentrates on the empirical mean") {
    Posterior post;
    for (int i = 0; i < 1000; ++i) update(post, 0.4);
    REQUIRE_THAT(post.mean(), WithinAbs(0.4, 1e-3));
    for (int n : {0, 1, 7, 100})
        REQUIRE(Posterior{n, 0.0, 0.5}.variance() == 1.0 / (n + 1));
}

TEST_CASE("losses outside the unit interval are rejected") {
    Posterior post;
    REQUIRE_THROWS_AS(update(post, -0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(update(post, 1.5), std::invalid_argument);
    REQUIRE_THROWS_AS(update(post, std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
    REQUIRE(post.n == 0);
}

TEST_CASE("sampled beliefs follow the posterior's normal law") {
    const auto post = with_losses({0.2, 0.4});
    Xoshiro256pp rng(13);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = sample_theta(post, rng);
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    REQUIRE_THAT(mean, WithinAbs(1.1 / 3.0, 0.01));
    REQUIRE_THAT(sumsq / n - mean * mean, WithinAbs(1.0 / 3.0, 0.01));
}

TEST_CASE("selection rules applied to fixed sampled beliefs") {
    const std::vector<double> thetas{0.5, 0.25, 0.2};
    const std::vector<Posterior> tested(3, with_losses({0.3}));

    // Plain TS takes the arm believed best.
    REQUIRE(select_from_thetas(thetas, tested, make_policy(PolicyKind::ts)) == 2);

    // Absolute satisficing stops at the first arm believed good enough.
    REQUIRE(select_from_thetas(thetas, tested,
                               make_policy(PolicyKind::sts, 0.3, Aspiration::absolute)) == 1);

    // Relative satisficing measures the slack from the frame's best belief.
    REQUIRE(select_from_thetas(thetas, tested,
                               make_policy(PolicyKind::sts, 0.1, Aspiration::relative)) == 1);

    // With no slack the relative rule degenerates to TS (first argmin on ties).
    REQUIRE(select_from_thetas({0.5, 0.2, 0.2}, tested,
                               make_policy(PolicyKind::sts, 0.0, Aspiration::relative)) == 1);
}

TEST_CASE("satisficing falls back when nothing satisfies") {
    std::vector<Posterior> posts{with_losses({0.4}), with_losses({0.3}), with_losses({0.45})};
    const std::vector<double> thetas{0.5, 0.45, 0.6};
    const auto cfg = make_policy(PolicyKind::sts, 0.1, Aspiration::absolute);

    // All arms tested: lowest posterior mean wins.
    REQUIRE(select_from_thetas(thetas, posts, cfg) == 1);

    // An untested arm takes precedence.
    posts[2] = Posterior{};
    REQUIRE(select_from_thetas(thetas, posts, cfg) == 2);
}

TEST_CASE("random policy is uniform over arms") {
    const std::vector<Posterior> posts(4);
    Xoshiro256pp rng(31);
    std::vector<int> hits(4, 0);
    for (int i = 0; i < 4000; ++i)
        ++hits[static_cast<size_t>(select(posts, make_policy(PolicyKind::random), rng))];
    for (int h : hits) REQUIRE(h > 800);
}

TEST_CASE("selection requires arms and a valid configuration") {
    Xoshiro256pp rng(1);
    REQUIRE_THROWS_AS(select({}, make_policy(PolicyKind::ts), rng), std::invalid_argument);
    REQUIRE_THROWS_AS(make_policy(PolicyKind::sts, 1.0).validate(), std::invalid_argument);
    REQUIRE_THROWS_AS(make_policy(PolicyKind::sts, -0.1).validate(), std::invalid_argument);
    auto bad = make_policy(PolicyKind::ts);
    bad.prior_mean = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    REQUIRE_THROWS_AS(Policy(make_policy(PolicyKind::ts), 0), std::invalid_argument);
}

TEST_CASE("zero-slack relative satisficing replays TS action for action") {
    // Shared generator state, deterministic loss landscape, 64 arms.
    Policy ts(make_policy(PolicyKind::ts), 64);
    Policy sts0(make_policy(PolicyKind::sts, 0.0, Aspiration::relative), 64);
    Xoshiro256pp rng_a(77), rng_b(77);
    for (long f = 0; f < 2000; ++f) {
        const int a = ts.select_arm(rng_a);
        const int b = sts0.select_arm(rng_b);
        REQUIRE(a == b);
        const double loss = 0.2 + 0.6 * ((a * 2654435761u) % 64) / 63.0;
        ts.observe(f, a, loss);
        sts0.observe(f, b, loss);
    }
}

TEST_CASE("history frames must strictly increase") {
    History h;
    h.push(0, 3, 0.5);
    h.push(1, 4, 0.25);
    REQUIRE(h.records.size() == 2);
    REQUIRE_THROWS_AS(h.push(1, 5, 0.1), std::invalid_argument);
}

namespace {

// Two-arm synthetic bench: true mean losses 0.2 and 0.8 with sigma 0.1.
double bench_loss(int arm, Xoshiro256pp& rng, NormalSampler& gauss) {
    const double mean = arm == 0 ? 0.2 : 0.8;
    return std::clamp(mean + 0.1 * gauss(rng), 0.0, 1.0);
}

double late_pick_rate(const PolicyConfig& cfg, int watched_arm) {
    long picks = 0, frames = 0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        Policy policy(cfg, 2);
        Xoshiro256pp arm_rng(derive_seed(seed, "policy"));
        Xoshiro256pp loss_rng(derive_seed(seed, "loss"));
        NormalSampler gauss;
        for (long f = 0; f < 2000; ++f) {
            const int arm = policy.select_arm(arm_rng);
            policy.observe(f, arm, bench_loss(arm, loss_rng, gauss));
            if (f >= 1000) {
                ++frames;
                picks += arm == watched_arm;
            }
        }
    }
    return static_cast<double>(picks) / static_cast<double>(frames);
}

}  // namespace

TEST_CASE("TS concentrates on the better of two separated arms") {
    REQUIRE(late_pick_rate(make_policy(PolicyKind::ts), 0) > 0.95);
}

TEST_CASE("absolute satisficing all but abandons the unsatisfying arm") {
    const auto cfg = make_policy(PolicyKind::sts, 0.3, Aspiration::absolute);
    REQUIRE(late_pick_rate(cfg, 1) < 0.01);
}
