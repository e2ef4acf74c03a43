#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavesel/harness.hpp"

using namespace wavesel;
using Catch::Matchers::WithinAbs;

namespace {

// Smallest full-pipeline experiment: one coarse waveform, short horizon.
ExperimentConfig tiny_experiment() {
    ExperimentConfig cfg;
    cfg.bandwidths_hz = {30.0e6};
    cfg.n_codes = 1;
    cfg.horizon = 6;
    cfg.runs = 2;
    cfg.window = 3;
    cfg.seed = 5;
    cfg.policies = {parse_policy_spec("random"), parse_policy_spec("ts")};
    return cfg;
}

RunRecord fake_record(const std::string& label, int policy_index, int run,
                      const std::vector<double>& losses) {
    RunRecord rec;
    rec.policy = label;
    rec.policy_index = policy_index;
    rec.run = run;
    double acc = 0.0;
    for (size_t f = 0; f < losses.size(); ++f) {
        rec.rows.push_back({static_cast<int>(f), 0, 30.0e6, losses[f]});
        acc += losses[f];
        rec.running_mean.push_back(acc / static_cast<double>(f + 1));
    }
    return rec;
}

}  // namespace

TEST_CASE("policy specs round-trip through their labels") {
    for (const auto* spec : {"random", "ts", "sts:0.1:rel", "sts:0.3:rel", "sts:0.25"})
        REQUIRE(policy_label(parse_policy_spec(spec)) == spec);
    // Absolute aspiration is the unsuffixed spelling.
    REQUIRE(policy_label(parse_policy_spec("sts:0.2:abs")) == "sts:0.2");
    REQUIRE(parse_policy_spec("sts:0.1:rel").aspiration == Aspiration::relative);
    REQUIRE(parse_policy_spec("sts:0.1").aspiration == Aspiration::absolute);
    REQUIRE(parse_policy_spec("ts").kind == PolicyKind::ts);
}

TEST_CASE("malformed policy specs are rejected") {
    REQUIRE_THROWS_AS(parse_policy_spec("bogus"), ConfigError);
    REQUIRE_THROWS_AS(parse_policy_spec("ts:0.1"), ConfigError);      // takes no parameter
    REQUIRE_THROWS_AS(parse_policy_spec("sts:xyz"), ConfigError);
    REQUIRE_THROWS_AS(parse_policy_spec("sts:0.1:weird"), ConfigError);
    REQUIRE_THROWS_AS(parse_policy_spec("sts:0.1:rel:extra"), ConfigError);
    REQUIRE_THROWS_AS(parse_policy_spec("sts:1.0"), std::invalid_argument);
}

TEST_CASE("default policy set is the four-way comparison") {
    const auto set = default_policy_set();
    REQUIRE(set.size() == 4);
    REQUIRE(policy_label(set[0]) == "random");
    REQUIRE(policy_label(set[1]) == "ts");
    REQUIRE(policy_label(set[2]) == "sts:0.1:rel");
    REQUIRE(policy_label(set[3]) == "sts:0.3:rel");
}

TEST_CASE("experiment defaults survive an empty config") {
    const auto e = ExperimentConfig::from_config(Config{});
    REQUIRE(e.horizon == 5000);
    REQUIRE(e.runs == 20);
    REQUIRE(e.window == 500);
    REQUIRE(e.threads == 1);
    REQUIRE(e.seed == 1);
    REQUIRE(e.bandwidths_hz.size() == 8);
    REQUIRE(e.bandwidths_hz.front() == 30.0e6);
    REQUIRE(e.bandwidths_hz.back() == 1.5e9);
    REQUIRE(e.n_codes == 8);
    REQUIRE(e.code_seed == 282);
    REQUIRE(e.cfar.mode == CfarMode::cross_2d);
    REQUIRE(e.dbscan_cfg.eps_vel_mps == 3.0);
    REQUIRE_FALSE(e.dbscan_cfg.eps_range_m.has_value());
    REQUIRE(e.scene.noise_psd == 3.0e-5);
    REQUIRE(e.policies.size() == 4);
    REQUIRE(e.catalog().size() == 64);
}

TEST_CASE("config keys override every experiment block") {
    const auto e = ExperimentConfig::from_config(Config::parse(
        "[radar]\nfc_hz = 60e9\nchirp_T_s = 5e-6\nn_chirps = 64\nr_max_m = 100\n"
        "[catalog]\nbw_min_hz = 1e8\nbw_max_hz = 4e8\nn_bandwidths = 3\nn_codes = 2\n"
        "code_seed = 7\ninclude_all_ones = false\n"
        "[scene]\nn_targets = 2\nn_interferers = 0\nr_bounds_m = 20, 80\nv_bounds_mps = -10, 10\n"
        "noise_psd = 1e-6\nn_scatterers = 3\nclasses = drone:0.3:0.2, van:6:0.5\n"
        "[cfar]\npfa = 1e-4\nguard = 2\ntraining = 5\nmode = range_1d\n"
        "[dbscan]\neps_range_m = 2.5\neps_vel_mps = 1.5\nmin_pts = 2\n"
        "[perception]\nloss_mode = miss_aware\ngate_range_m = 4\n"
        "[rd]\nwindow = hann\n"
        "[experiment]\nhorizon = 10\nruns = 3\nwindow = 4\nthreads = 2\nseed = 99\n"
        "policies = ts, sts:0.2\n"));
    REQUIRE(e.chirp.fc_hz == 60e9);
    REQUIRE(e.chirp.chirp_T_s == 5e-6);
    REQUIRE(e.chirp.n_chirps == 64);
    REQUIRE(e.r_max_m == 100.0);
    REQUIRE(e.bandwidths_hz == log_spaced_bandwidths(1e8, 4e8, 3));
    REQUIRE(e.n_codes == 2);
    REQUIRE(e.code_seed == 7);
    REQUIRE_FALSE(e.include_all_ones);
    REQUIRE(e.scene.n_targets == 2);
    REQUIRE(e.scene.n_interferers == 0);
    REQUIRE(e.scene.r_min_m == 20.0);
    REQUIRE(e.scene.r_max_m == 80.0);
    REQUIRE(e.scene.v_min_mps == -10.0);
    REQUIRE(e.scene.v_max_mps == 10.0);
    REQUIRE(e.scene.noise_psd == 1e-6);
    REQUIRE(e.scene.n_scatterers == 3);
    REQUIRE(e.scene.n_chirps == 64);  // follows the chirp train
    REQUIRE(e.scene.classes.size() == 2);
    REQUIRE(e.scene.classes[1].name == "van");
    REQUIRE(e.scene.classes[1].extent_m == 6.0);
    REQUIRE(e.cfar.pfa == 1e-4);
    REQUIRE(e.cfar.guard == 2);
    REQUIRE(e.cfar.training == 5);
    REQUIRE(e.cfar.mode == CfarMode::range_1d);
    REQUIRE(e.dbscan_cfg.eps_range_m == 2.5);
    REQUIRE(e.dbscan_cfg.eps_vel_mps == 1.5);
    REQUIRE(e.dbscan_cfg.min_pts == 2);
    REQUIRE(e.perception.loss_mode == LossMode::miss_aware);
    REQUIRE(e.perception.gate_range_m == 4.0);
    REQUIRE(e.rd.window == WindowKind::hann);
    REQUIRE(e.horizon == 10);
    REQUIRE(e.runs == 3);
    REQUIRE(e.window == 4);
    REQUIRE(e.threads == 2);
    REQUIRE(e.seed == 99);
    REQUIRE(e.policies.size() == 2);
    REQUIRE(policy_label(e.policies[1]) == "sts:0.2");
}

TEST_CASE("an explicit bandwidth list beats the grid parameters") {
    const auto e = ExperimentConfig::from_config(
        Config::parse("catalog.bandwidths_hz = 2e8, 1e8\ncatalog.n_bandwidths = 5\n"));
    REQUIRE(e.bandwidths_hz == std::vector<double>{2e8, 1e8});  // sorted later by the catalog
    REQUIRE(e.catalog().bandwidths_hz == std::vector<double>{1e8, 2e8});
}

TEST_CASE("auto clears a preset clustering radius") {
    // The experiment default pins eps_vel; `auto` hands it back to the
    // map-metadata resolution rule.
    const auto e = ExperimentConfig::from_config(
        Config::parse("dbscan.eps_vel_mps = auto\ndbscan.eps_range_m = auto\n"));
    REQUIRE_FALSE(e.dbscan_cfg.eps_vel_mps.has_value());
    REQUIRE_FALSE(e.dbscan_cfg.eps_range_m.has_value());
}

TEST_CASE("a single policy block configures a one-policy run") {
    const auto e = ExperimentConfig::from_config(Config::parse(
        "policy.kind = sts\npolicy.d = 0.25\npolicy.aspiration = rel\npolicy.prior_mean = 0.4\n"));
    REQUIRE(e.policies.size() == 1);
    REQUIRE(policy_label(e.policies[0]) == "sts:0.25:rel");
    REQUIRE(e.policies[0].prior_mean == 0.4);

    const auto ts_only = ExperimentConfig::from_config(Config::parse("policy.kind = ts\n"));
    REQUIRE(ts_only.policies.size() == 1);
    REQUIRE(ts_only.policies[0].kind == PolicyKind::ts);
}

TEST_CASE("bad experiment configs are rejected") {
    REQUIRE_THROWS_AS(ExperimentConfig::from_config(Config::parse("cfar.mode = diamond\n")), ConfigError);
    REQUIRE_THROWS_AS(ExperimentConfig::from_config(Config::parse("perception.loss_mode = x\n")),
                      ConfigError);
    REQUIRE_THROWS_AS(ExperimentConfig::from_config(Config::parse("rd.window = hamming\n")), ConfigError);
    REQUIRE_THROWS_AS(ExperimentConfig::from_config(Config::parse("scene.classes = car:4\n")), ConfigError);
    REQUIRE_THROWS_AS(ExperimentConfig::from_config(Config::parse("scene.r_bounds_m = 1, 2, 3\n")),
                      ConfigError);
    REQUIRE_THROWS_AS(ExperimentConfig::from_config(Config::parse("experiment.policies = warp\n")),
                      ConfigError);
    // The scene box may not extend past the mapped range.
    REQUIRE_THROWS_AS(ExperimentConfig::from_config(Config::parse("scene.r_max_m = 500\n")),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(ExperimentConfig::from_config(Config::parse("experiment.horizon = 0\n")),
                      std::invalid_argument);
}

TEST_CASE("a minimal experiment produces ordered, complete records") {
    const auto cfg = tiny_experiment();
    const auto records = run_experiment(cfg);
    REQUIRE(records.size() == 4);  // 2 policies x 2 runs, policy-major
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        REQUIRE(rec.policy_index == static_cast<int>(i / 2));
        REQUIRE(rec.run == static_cast<int>(i % 2));
        REQUIRE(rec.rows.size() == 6);
        REQUIRE(rec.running_mean.size() == 6);
        double acc = 0.0;
        for (size_t f = 0; f < rec.rows.size(); ++f) {
            REQUIRE(rec.rows[f].frame == static_cast<int>(f));
            REQUIRE(rec.rows[f].waveform == 0);  // singleton catalog
            REQUIRE(rec.rows[f].bandwidth_hz == 30.0e6);
            REQUIRE(rec.rows[f].loss >= 0.0);
            REQUIRE(rec.rows[f].loss <= 1.0);
            acc += rec.rows[f].loss;
            REQUIRE_THAT(rec.running_mean[f], WithinAbs(acc / static_cast<double>(f + 1), 1e-12));
        }
    }
}

TEST_CASE("experiments are reproducible run to run") {
    ExperimentConfig cfg = tiny_experiment();
    cfg.bandwidths_hz = {30.0e6, 150.0e6};
    cfg.n_codes = 2;
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    REQUIRE(record_digest(a) == record_digest(b));
}

TEST_CASE("thread pool and sequential execution agree") {
    ExperimentConfig cfg = tiny_experiment();
    const auto seq = run_experiment(cfg);
    cfg.threads = 3;
    const auto par = run_experiment(cfg);
    REQUIRE(record_digest(seq) == record_digest(par));
}

TEST_CASE("noise and scene streams do not depend on the policy roster") {
    // With a single waveform every policy is forced onto the same arm, so
    // differing policy streams cannot mask a roster-dependent noise draw.
    ExperimentConfig solo = tiny_experiment();
    solo.policies = {parse_policy_spec("ts")};
    ExperimentConfig both = tiny_experiment();

    const auto solo_recs = run_experiment(solo);
    const auto both_recs = run_experiment(both);
    // ts sits at policy index 0 in `solo` and index 1 in `both`.
    for (int run = 0; run < 2; ++run) {
        const auto& a = solo_recs[static_cast<size_t>(run)].rows;
        const auto& b = both_recs[static_cast<size_t>(2 + run)].rows;
        REQUIRE(a.size() == b.size());
        for (size_t f = 0; f < a.size(); ++f) REQUIRE(a[f].loss == b[f].loss);
    }
}

TEST_CASE("aggregation averages runs and tracks their spread") {
    std::vector<RunRecord> records;
    records.push_back(fake_record("ts", 0, 0, {0.2, 0.2, 0.8}));
    records.push_back(fake_record("ts", 0, 1, {0.4, 0.6, 0.0}));
    records.push_back(fake_record("random", 1, 0, {1.0, 1.0, 1.0}));

    const auto curves = aggregate(records, 2);
    REQUIRE(curves.size() == 2);
    REQUIRE(curves[0].label == "ts");
    REQUIRE_THAT(curves[0].mean_loss[0], WithinAbs(0.3, 1e-12));
    REQUIRE_THAT(curves[0].mean_loss[1], WithinAbs(0.4, 1e-12));
    REQUIRE_THAT(curves[0].mean_loss[2], WithinAbs(0.4, 1e-12));
    REQUIRE_THAT(curves[0].std_loss[0], WithinAbs(std::sqrt(0.02), 1e-12));
    REQUIRE_THAT(curves[0].std_loss[1], WithinAbs(std::sqrt(0.08), 1e-12));
    REQUIRE_THAT(curves[0].std_loss[2], WithinAbs(std::sqrt(0.32), 1e-12));
    REQUIRE_THAT(curves[0].smoothed[0], WithinAbs(0.3, 1e-12));
    REQUIRE_THAT(curves[0].smoothed[1], WithinAbs(0.35, 1e-12));
    REQUIRE_THAT(curves[0].smoothed[2], WithinAbs(0.4, 1e-12));
    REQUIRE(curves[1].label == "random");
    REQUIRE(curves[1].std_loss == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("trailing moving average") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    REQUIRE(moving_average(x, 1) == x);
    REQUIRE(moving_average(x, 2) == std::vector<double>{1.0, 1.5, 2.5, 3.5});
    REQUIRE(moving_average(x, 10) == std::vector<double>{1.0, 1.5, 2.0, 2.5});
    REQUIRE_THROWS_AS(moving_average(x, 0), std::invalid_argument);
}

TEST_CASE("interval mean is inclusive and bounds-checked") {
    PolicyCurve curve;
    curve.smoothed = {1.0, 2.0, 3.0, 4.0};
    REQUIRE(interval_mean(curve, 1, 2) == 2.5);
    REQUIRE(interval_mean(curve, 0, 3) == 2.5);
    REQUIRE(interval_mean(curve, 2, 2) == 3.0);
    REQUIRE_THROWS_AS(interval_mean(curve, 2, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(interval_mean(curve, 0, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(interval_mean(curve, -1, 2), std::invalid_argument);
}

TEST_CASE("curve export has the contracted header and row shape") {
    std::vector<RunRecord> records;
    records.push_back(fake_record("ts", 0, 0, {0.25, 0.5}));
    std::ostringstream out;
    write_curves_csv(out, records);

    std::istringstream in(out.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    REQUIRE(line == "policy,run,frame,waveform_idx,bandwidth_hz,loss");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::vector<std::string> fields;
        std::string f;
        std::istringstream split(line);
        while (std::getline(split, f, ',')) fields.push_back(f);
        REQUIRE(fields.size() == 6);
        REQUIRE(fields[0] == "ts");
        REQUIRE(fields[1] == "0");
        REQUIRE(fields[2] == std::to_string(rows - 1));
        REQUIRE(fields[3] == "0");
        REQUIRE(std::stod(fields[4]) == 30.0e6);
        REQUIRE(std::stod(fields[5]) == 0.25 * rows);
    }
    REQUIRE(rows == 2);
}

TEST_CASE("record digests notice any loss or arm change") {
    const auto cfg = tiny_experiment();
    auto records = run_experiment(cfg);
    auto tweaked = records;
    const uint64_t base = record_digest(records);
    REQUIRE(base == record_digest(tweaked));
    tweaked[1].rows[3].loss += 1e-9;
    REQUIRE(base != record_digest(tweaked));
    tweaked = records;
    tweaked[0].rows[0].waveform += 1;
    REQUIRE(base != record_digest(tweaked));
}
