// Command-line front end: seeded learning experiments (`run`), one-key
// parameter sweeps (`sweep`) and range-Doppler map dumps (`rd-dump`).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wavesel/wavesel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json summarize(const wavesel::ExperimentConfig& cfg,
               const std::vector<wavesel::RunRecord>& records) {
    const auto curves = wavesel::aggregate(records, cfg.window);
    json out;
    out["seed"] = cfg.seed;
    out["horizon"] = cfg.horizon;
    out["runs"] = cfg.runs;
    out["window"] = cfg.window;
    out["arms"] = cfg.bandwidths_hz.size() * static_cast<size_t>(cfg.n_codes);
    out["digest"] = wavesel::record_digest(records);

    json pols = json::array();
    for (const auto& c : curves) {
        json p;
        p["policy"] = c.label;
        double overall = 0.0;
        for (double v : c.mean_loss) overall += v;
        p["mean_loss"] = overall / static_cast<double>(c.mean_loss.size());
        p["final_smoothed_loss"] = c.smoothed.back();
        if (cfg.horizon > 1000) {
            double acc = 0.0;
            for (int f = 200; f <= 1000; ++f) acc += c.mean_loss[static_cast<size_t>(f)];
            p["early_mean_loss"] = acc / 801.0;
        }
        pols.push_back(std::move(p));
    }
    out["policies"] = std::move(pols);
    return out;
}

void write_outputs(const wavesel::ExperimentConfig& cfg,
                   const std::vector<wavesel::RunRecord>& records, const fs::path& dir) {
    fs::create_directories(dir);
    wavesel::write_curves_csv((dir / "curves.csv").string(), records);
    std::ofstream js(dir / "summary.json", std::ios::binary);
    if (!js) throw std::runtime_error("cannot open '" + (dir / "summary.json").string() + "'");
    js << summarize(cfg, records).dump(2) << "\n";
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    const wavesel::Config file = wavesel::Config::load(config_path);
    const wavesel::ExperimentConfig cfg = wavesel::ExperimentConfig::from_config(file);
    const auto records = wavesel::run_experiment(cfg);
    write_outputs(cfg, records, out_dir);
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::string& values, const std::string& out_dir) {
    const auto value_list = wavesel::Config::split_list(values);
    if (value_list.empty()) throw wavesel::ConfigError("sweep: --values is empty");
    for (const auto& v : value_list) {
        wavesel::Config file = wavesel::Config::load(config_path);
        file.set(param, v);
        const wavesel::ExperimentConfig cfg = wavesel::ExperimentConfig::from_config(file);
        const auto records = wavesel::run_experiment(cfg);
        write_outputs(cfg, records, fs::path(out_dir) / v);
    }
    return 0;
}

int cmd_rd_dump(const std::string& config_path, int waveform_idx, uint64_t seed,
                const std::string& out_file) {
    const wavesel::Config file = wavesel::Config::load(config_path);
    const wavesel::ExperimentConfig cfg = wavesel::ExperimentConfig::from_config(file);
    const wavesel::WaveformCatalog catalog = cfg.catalog();
    if (waveform_idx < 0 || waveform_idx >= static_cast<int>(catalog.entries.size()))
        throw std::runtime_error("rd-dump: waveform index out of range (catalog has " +
                                 std::to_string(catalog.entries.size()) + " entries)");

    const wavesel::Scene scene = wavesel::sample_scene(cfg.scene, wavesel::derive_seed(seed, "scene", 0));
    wavesel::Xoshiro256pp noise(wavesel::derive_seed(seed, "noise", 0, 0));
    const wavesel::RDMap map = wavesel::simulate_frame(scene, catalog.entries[static_cast<size_t>(waveform_idx)],
                                                       catalog.chirp, cfg.r_max_m, &noise, cfg.rd);

    std::ofstream out(out_file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + out_file + "' for writing");
    char buf[32];
    for (int r = 0; r < map.n_range; ++r) {
        for (int d = 0; d < map.n_doppler; ++d) {
            const double mag = std::abs(map.at(r, d));
            const double db = 20.0 * std::log10(std::max(mag, 1e-30));
            std::snprintf(buf, sizeof(buf), "%.6g", db);
            out << buf << (d + 1 < map.n_doppler ? "," : "\n");
        }
    }

    json meta;
    meta["n_range"] = map.n_range;
    meta["n_doppler"] = map.n_doppler;
    meta["range_bin_m"] = map.range_bin_m;
    meta["vel_bin_mps"] = map.vel_bin_mps;
    meta["bandwidth_hz"] = catalog.entries[static_cast<size_t>(waveform_idx)].bandwidth_hz;
    meta["code_id"] = catalog.entries[static_cast<size_t>(waveform_idx)].code.id;
    meta["waveform_idx"] = waveform_idx;
    meta["seed"] = seed;
    meta["units"] = "magnitude_db";
    std::ofstream ms(out_file + ".meta.json", std::ios::binary);
    if (!ms) throw std::runtime_error("cannot open '" + out_file + ".meta.json' for writing");
    ms << meta.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FMCW waveform-selection simulator and learner"};
    app.require_subcommand(1);

    std::string config_path, out_path, param, values;
    int waveform_idx = 0;
    uint64_t seed = 1;

    CLI::App* run = app.add_subcommand("run", "run the configured experiment");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--out", out_path, "output directory")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "re-run the experiment for each value of one config key");
    sweep->add_option("--config", config_path, "config file")->required();
    sweep->add_option("--param", param, "config key to vary")->required();
    sweep->add_option("--values", values, "comma-separated values")->required();
    sweep->add_option("--out", out_path, "output directory (one subdirectory per value)")->required();

    CLI::App* rd = app.add_subcommand("rd-dump", "write one range-Doppler map as magnitude-dB CSV");
    rd->add_option("--config", config_path, "config file")->required();
    rd->add_option("--waveform", waveform_idx, "catalog index")->required();
    rd->add_option("--seed", seed, "master seed for scene and noise");
    rd->add_option("--out", out_path, "output CSV path (metadata sidecar written next to it)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_path);
        if (sweep->parsed()) return cmd_sweep(config_path, param, values, out_path);
        if (rd->parsed()) return cmd_rd_dump(config_path, waveform_idx, seed, out_path);
    } catch (const wavesel::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
