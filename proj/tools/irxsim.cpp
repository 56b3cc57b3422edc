// irxsim: Monte Carlo driver for the interference-aware receiver chain.
//
// Subcommands build the detector's correction table, generate labeled
// detector data, train the bail-out network, and run the error-rate and
// coded-throughput sweeps. A JSON config file supplies the manifest; a small
// set of flags can override the hot knobs. Every output file starts with a
// comment carrying the canonical config hash and the master seed, and reruns
// with the same hash and seed are byte-identical regardless of worker count.
//
// Exit codes: 0 success, 1 config or usage error, 2 file I/O error,
// 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "irx/convcode.hpp"
#include "irx/experiments.hpp"
#include "irx/format_detect.hpp"
#include "irx/random.hpp"
#include "irx/runconfig.hpp"

namespace {

using irx::ConfigError;
using irx::Policy;
using irx::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> out_dir;
    std::optional<double> snr_db;
    std::optional<double> inr_db;
    std::optional<std::string> metric;
    std::optional<std::size_t> blocks;
    std::optional<std::size_t> samples;
    std::optional<std::string> policies;
    std::optional<std::string> snr_points;
    std::optional<std::string> lut_path;
    std::optional<std::string> mlp_path;
    std::optional<std::string> costs_path;
};

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

RunConfig resolve_config(const std::string& config_path, const Overrides& ov) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = irx::load_config(config_path);
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.workers) cfg.workers = *ov.workers;
    if (ov.out_dir) cfg.out_dir = *ov.out_dir;
    if (ov.snr_db) cfg.link.snr_db = *ov.snr_db;
    if (ov.inr_db) cfg.link.inr_db = *ov.inr_db;
    if (ov.metric) {
        const auto v = irx::parse_metric_variant(*ov.metric);
        if (!v) throw ConfigError("unknown metric variant '" + *ov.metric + "'");
        cfg.detector.variant = *v;
    }
    if (ov.blocks) {
        if (*ov.blocks == 0) throw ConfigError("--blocks must be positive");
        cfg.sweep_blocks_per_point = *ov.blocks;
    }
    if (ov.samples) {
        if (*ov.samples < cfg.train.batch_size)
            throw ConfigError("--samples must cover at least one batch");
        cfg.train.total_samples = *ov.samples;
    }
    if (ov.policies) {
        std::vector<Policy> policies;
        for (const std::string& p : split_commas(*ov.policies)) {
            const auto parsed = irx::parse_policy(p);
            if (!parsed) throw ConfigError("unknown policy '" + p + "'");
            policies.push_back(*parsed);
        }
        if (policies.empty()) throw ConfigError("--policies must not be empty");
        cfg.sweep_policies = std::move(policies);
    }
    if (ov.snr_points) {
        std::vector<double> pts;
        for (const std::string& p : split_commas(*ov.snr_points)) {
            try {
                std::size_t used = 0;
                const double v = std::stod(p, &used);
                if (used != p.size()) throw std::invalid_argument(p);
                pts.push_back(v);
            } catch (const std::exception&) {
                throw ConfigError("bad snr point '" + p + "'");
            }
        }
        if (pts.empty()) throw ConfigError("--snr-points must not be empty");
        cfg.sweep_snr_points = std::move(pts);
    }
    if (ov.lut_path) cfg.lut_path = *ov.lut_path;
    if (ov.mlp_path) cfg.mlp_path = *ov.mlp_path;
    if (ov.costs_path) cfg.costs_path = *ov.costs_path;
    return cfg;
}

std::string default_path(const RunConfig& cfg, const char* file) {
    return (std::filesystem::path(cfg.out_dir) / file).string();
}

void ensure_out_dir(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec)
        throw std::runtime_error("cannot create output directory " +
                                 cfg.out_dir + ": " + ec.message());
}

// ---- artifact plumbing ----------------------------------------------------

bool wants(const RunConfig& cfg, Policy p) {
    for (Policy q : cfg.sweep_policies)
        if (q == p) return true;
    return false;
}

struct LoadedArtifacts {
    std::optional<irx::PenaltyLut> lut;
    std::optional<irx::CostMatrix> costs;
    std::optional<irx::MlpParams> mlp;

    irx::Artifacts view(const RunConfig& cfg) const {
        irx::Artifacts art;
        art.detector = cfg.detector;
        if (lut) art.lut = &*lut;
        if (costs) art.costs = &*costs;
        if (mlp) art.mlp = &*mlp;
        return art;
    }
};

void load_lut_if_needed(const RunConfig& cfg, LoadedArtifacts& art) {
    if (cfg.detector.variant != irx::MetricVariant::lut) return;
    if (cfg.lut_path.empty())
        throw ConfigError(
            "the lut metric needs paths.lut (or --lut-path); run build-lut first");
    art.lut = irx::load_lut(cfg.lut_path, cfg.detector.formats);
}

// A cost matrix is loaded when a path is given, otherwise calibrated on a
// fresh validation set and saved next to the sweep outputs.
void prepare_costs(const RunConfig& cfg, LoadedArtifacts& art) {
    if (!wants(cfg, Policy::bayes)) return;
    if (!cfg.costs_path.empty()) {
        art.costs = irx::load_costs(cfg.costs_path);
        std::printf("loaded decision costs from %s\n", cfg.costs_path.c_str());
        return;
    }
    const auto validation = irx::gen_training_set(
        cfg.detector, art.lut ? &*art.lut : nullptr, cfg.train_snr_list,
        cfg.validation_samples, irx::mix_seed(cfg.seed, 0xCA11B8A7ULL));
    art.costs = irx::optimize_costs(validation);
    const std::string path = default_path(cfg, "costs.csv");
    irx::save_costs(*art.costs, path, irx::output_header(cfg));
    std::printf("calibrated bail-out cost %.6g on %zu samples -> %s\n",
                art.costs->at(0, art.costs->formats()), validation.size(),
                path.c_str());
}

void load_mlp_if_needed(const RunConfig& cfg, LoadedArtifacts& art) {
    if (!wants(cfg, Policy::dnn)) return;
    if (cfg.mlp_path.empty())
        throw ConfigError(
            "the dnn policy needs paths.mlp (or --mlp-path); run train first");
    art.mlp = irx::load_mlp(cfg.mlp_path);
}

// ---- subcommands ----------------------------------------------------------

int cmd_build_lut(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    const std::string path = cfg.lut_path.empty()
                                 ? default_path(cfg, "penalty.lut")
                                 : cfg.lut_path;
    std::vector<std::vector<double>> se;
    const irx::PenaltyLut lut =
        irx::build_penalty_lut(cfg.detector.formats, irx::default_lut_grid(),
                               cfg.lut_samples_per_cell, cfg.seed, &se);
    std::printf("# per-cell standard errors (format,noise_var,stderr)\n");
    for (std::size_t f = 0; f < lut.formats.size(); ++f)
        for (std::size_t i = 0; i < lut.grid.size(); ++i)
            std::printf("%s,%.10g,%.10g\n", irx::name(lut.formats[f]),
                        lut.grid[i], se[f][i]);
    irx::save_lut(lut, path);
    std::printf("wrote %zu x %zu correction table -> %s\n", lut.formats.size(),
                lut.grid.size(), path.c_str());
    return kExitOk;
}

int cmd_gen_data(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    LoadedArtifacts art;
    load_lut_if_needed(cfg, art);
    const auto samples = irx::gen_training_set(
        cfg.detector, art.lut ? &*art.lut : nullptr, cfg.train_snr_list,
        cfg.train.total_samples, cfg.seed);
    const std::string path = default_path(cfg, "train_data.csv");
    irx::write_training_csv(path, samples, irx::output_header(cfg));
    std::size_t wrong = 0;
    for (const auto& s : samples) wrong += (s.label == 1);
    std::printf("wrote %zu samples (%.2f%% detector misses) -> %s\n",
                samples.size(), 100.0 * static_cast<double>(wrong) /
                                    static_cast<double>(samples.size()),
                path.c_str());
    return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    LoadedArtifacts art;
    load_lut_if_needed(cfg, art);
    const std::vector<double> snrs =
        cfg.train_mixture ? cfg.train_snr_list
                          : std::vector<double>{cfg.train_snr_list.front()};
    const auto samples = irx::gen_training_set(
        cfg.detector, art.lut ? &*art.lut : nullptr, snrs,
        cfg.train.total_samples, cfg.seed);
    const auto [params, trace] = irx::train(cfg.train, samples);

    const std::string weights_path =
        cfg.mlp_path.empty() ? default_path(cfg, "weights.mlp") : cfg.mlp_path;
    irx::save_mlp(params, weights_path);
    const std::string loss_path = default_path(cfg, "train_loss.csv");
    irx::write_loss_csv(loss_path, trace, irx::output_header(cfg));
    std::printf("trained on %zu samples, %zu iterations, "
                "final smoothed loss %.6f\n",
                samples.size(), trace.batch_loss.size(), trace.smoothed.back());
    std::printf("wrote %s and %s\n", weights_path.c_str(), loss_path.c_str());
    return kExitOk;
}

void print_rows(const std::vector<irx::SweepRow>& rows, bool throughput) {
    for (const auto& row : rows) {
        if (throughput)
            std::printf("snr %5.1f dB  %-15s throughput %.4f  fallback %.4f\n",
                        row.snr_db, irx::name(row.policy),
                        row.report.throughput, row.report.p_fallback);
        else
            std::printf("snr %5.1f dB  %-15s r_e %.4f  p_d %.4f  fallback %.4f\n",
                        row.snr_db, irx::name(row.policy), row.report.r_e,
                        row.report.p_d, row.report.p_fallback);
    }
}

int cmd_sweep_error(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    LoadedArtifacts art;
    load_lut_if_needed(cfg, art);
    prepare_costs(cfg, art);
    load_mlp_if_needed(cfg, art);
    const auto rows =
        irx::error_rate_sweep(cfg.make_sweep_spec(), art.view(cfg));
    const std::string path = default_path(cfg, "error_rate.csv");
    irx::write_sweep_csv(path, rows, irx::output_header(cfg));
    print_rows(rows, false);
    std::printf("wrote %s\n", path.c_str());
    return kExitOk;
}

int cmd_sweep_throughput(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    LoadedArtifacts art;
    load_lut_if_needed(cfg, art);
    prepare_costs(cfg, art);
    load_mlp_if_needed(cfg, art);
    const auto rows =
        irx::throughput_sweep(cfg.make_sweep_spec(), art.view(cfg));
    const std::string path = default_path(cfg, "throughput.csv");
    irx::write_sweep_csv(path, rows, irx::output_header(cfg));
    print_rows(rows, true);
    std::printf("wrote %s\n", path.c_str());
    return kExitOk;
}

int cmd_eval_loss(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    LoadedArtifacts art;
    load_lut_if_needed(cfg, art);
    const auto set =
        irx::loss_curves(cfg.detector, art.lut ? &*art.lut : nullptr,
                         cfg.train_snr_list, cfg.train, cfg.seed);
    double mean_final = 0.0;
    for (std::size_t r = 0; r < set.snr_db.size(); ++r) {
        char file[64];
        std::snprintf(file, sizeof(file), "loss_snr_%g.csv", set.snr_db[r]);
        irx::write_loss_csv(default_path(cfg, file), set.traces[r],
                            irx::output_header(cfg));
        std::printf("snr %5.1f dB: final smoothed loss %.6f\n", set.snr_db[r],
                    set.final_per_snr[r]);
        mean_final += set.final_per_snr[r];
    }
    mean_final /= static_cast<double>(set.snr_db.size());
    irx::write_loss_csv(default_path(cfg, "loss_mixture.csv"),
                        set.mixture_trace, irx::output_header(cfg));
    std::printf("mixture:      final smoothed loss %.6f "
                "(per-snr mean %.6f)\n",
                set.final_mixture, mean_final);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo simulator for an interference-aware receiver "
                 "with modulation-format detection and fall-back"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;
    app.add_option("-c,--config", config_path, "JSON config file");
    app.add_option("--seed", ov.seed, "master seed override");
    app.add_option("--workers", ov.workers,
                   "worker thread count override (0 = all cores)");
    app.add_option("--out-dir", ov.out_dir, "output directory override");
    app.add_option("--snr-db", ov.snr_db, "link snr override (dB)");
    app.add_option("--inr-db", ov.inr_db, "link inr override (dB)");
    app.add_option("--metric", ov.metric,
                   "detector metric variant: plain_sum, log_sum_exp, lut");
    app.add_option("--blocks", ov.blocks, "sweep blocks per snr point");
    app.add_option("--samples", ov.samples, "training sample count");
    app.add_option("--policies", ov.policies,
                   "comma-separated sweep policies (none, bayes, dnn, genie, "
                   "always_fallback, oracle)");
    app.add_option("--snr-points", ov.snr_points,
                   "comma-separated sweep snr points in dB");
    app.add_option("--lut-path", ov.lut_path, "correction table file");
    app.add_option("--mlp-path", ov.mlp_path, "network weights file");
    app.add_option("--costs-path", ov.costs_path, "decision cost file");

    auto* sc_lut = app.add_subcommand(
        "build-lut", "build and save the detector's metric correction table");
    auto* sc_data = app.add_subcommand(
        "gen-data", "generate a labeled detector dataset as CSV");
    auto* sc_train = app.add_subcommand(
        "train", "train the bail-out network and save its weights");
    auto* sc_err = app.add_subcommand(
        "sweep-error", "uncoded sweep of detection and fall-back rates");
    auto* sc_thr = app.add_subcommand(
        "sweep-throughput", "coded sweep of exact-decode throughput");
    auto* sc_loss = app.add_subcommand(
        "eval-loss", "training loss traces per snr and for the mixture");
    for (CLI::App* sc : {sc_lut, sc_data, sc_train, sc_err, sc_thr, sc_loss})
        sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e); // 0 for --help, nonzero for usage errors
    }

    try {
        const RunConfig cfg = resolve_config(config_path, ov);
        if (sc_lut->parsed()) return cmd_build_lut(cfg);
        if (sc_data->parsed()) return cmd_gen_data(cfg);
        if (sc_train->parsed()) return cmd_train(cfg);
        if (sc_err->parsed()) return cmd_sweep_error(cfg);
        if (sc_thr->parsed()) return cmd_sweep_throughput(cfg);
        if (sc_loss->parsed()) return cmd_eval_loss(cfg);
        std::fprintf(stderr, "error: no subcommand\n");
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const irx::SolverError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
}
