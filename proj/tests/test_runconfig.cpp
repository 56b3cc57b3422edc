#include <doctest.h>

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "irx/runconfig.hpp"

using irx::ConfigError;
using irx::ModFormat;
using irx::Policy;
using irx::RunConfig;

namespace {

std::string write_config(const char* stem, const std::string& body) {
    const std::string path =
        (std::filesystem::temp_directory_path() / stem).string();
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << body;
    out.close();
    return path;
}

RunConfig load_text(const std::string& body) {
    const std::string path = write_config("irx_cfg_tmp.json", body);
    RunConfig cfg = irx::load_config(path);
    std::filesystem::remove(path);
    return cfg;
}

void expect_rejected(const std::string& body, const std::string& needle) {
    const std::string path = write_config("irx_cfg_bad.json", body);
    bool threw = false;
    try {
        irx::load_config(path);
    } catch (const ConfigError& e) {
        threw = true;
        INFO("message: ", e.what(), " | expected fragment: ", needle);
        CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
    std::filesystem::remove(path);
    CHECK(threw);
}

} // namespace

TEST_CASE("an empty document yields the documented defaults") {
    const RunConfig cfg = load_text("{}");
    CHECK(cfg.seed == 1);
    CHECK(cfg.workers == 0);
    CHECK(cfg.out_dir == ".");
    CHECK(cfg.link.n_rx == 2);
    CHECK(cfg.link.k1_layers == 1);
    CHECK(cfg.link.k2_layers == 1);
    CHECK(cfg.link.block_len == 24);
    CHECK(cfg.link.snr_db == 10.0);
    CHECK(cfg.link.inr_db == 10.0);
    CHECK(cfg.link.desired_format == ModFormat::qpsk);
    CHECK(cfg.link.interference_format == ModFormat::qam16);
    CHECK(cfg.detector.formats ==
          std::vector<ModFormat>{ModFormat::qpsk, ModFormat::qam16,
                                 ModFormat::qam64, ModFormat::qam256});
    CHECK(cfg.detector.variant == irx::MetricVariant::log_sum_exp);
    CHECK(cfg.detector.k_tilde == 24);
    CHECK(cfg.train.learning_rate == 0.01);
    CHECK(cfg.train.batch_size == 16);
    CHECK(cfg.train.total_samples == 640000);
    CHECK(cfg.train_snr_list == std::vector<double>{0, 4, 8, 12, 16, 20});
    CHECK(cfg.train_mixture);
    CHECK(cfg.sweep_snr_points ==
          std::vector<double>{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20});
    CHECK(cfg.sweep_blocks_per_point == 10000);
    CHECK(cfg.sweep_policies == std::vector<Policy>{Policy::none});
    CHECK(cfg.sweep_mix_formats);
    CHECK(cfg.sweep_inr_tracks_snr);
    CHECK(cfg.validation_samples == 50000);
    CHECK(cfg.lut_samples_per_cell == 20000);
    CHECK(cfg.lut_path.empty());
    CHECK(cfg.mlp_path.empty());
    CHECK(cfg.costs_path.empty());
}

TEST_CASE("every section parses its keys") {
    const RunConfig cfg = load_text(R"({
        "seed": 99,
        "workers": 3,
        "out_dir": "/tmp/out",
        "link": {
            "n_rx": 4, "k1_layers": 2, "k2_layers": 2, "block_len": 48,
            "snr_db": 12.5, "inr_db": 7.25,
            "desired_format": "qam16", "interference_format": "qam64"
        },
        "detector": {
            "formats": ["qpsk", "qam64"],
            "metric_variant": "lut",
            "k_tilde": 12
        },
        "train": {
            "learning_rate": 0.05, "batch_size": 32, "total_samples": 6400,
            "snr_db_list": [2, 6], "init_seed": 5, "mixture": false
        },
        "sweep": {
            "snr_points_db": [0, 5, 10],
            "blocks_per_point": 250,
            "policies": ["none", "bayes", "eirc_only"],
            "mix_formats": false,
            "inr_tracks_snr": false,
            "validation_samples": 123
        },
        "lut": {"samples_per_cell": 777},
        "paths": {"lut": "a.lut", "mlp": "b.mlp", "costs": "c.csv"}
    })");
    CHECK(cfg.seed == 99);
    CHECK(cfg.workers == 3);
    CHECK(cfg.out_dir == "/tmp/out");
    CHECK(cfg.link.n_rx == 4);
    CHECK(cfg.link.k1_layers == 2);
    CHECK(cfg.link.k2_layers == 2);
    CHECK(cfg.link.block_len == 48);
    CHECK(cfg.link.snr_db == 12.5);
    CHECK(cfg.link.inr_db == 7.25);
    CHECK(cfg.link.desired_format == ModFormat::qam16);
    CHECK(cfg.link.interference_format == ModFormat::qam64);
    CHECK(cfg.detector.formats ==
          std::vector<ModFormat>{ModFormat::qpsk, ModFormat::qam64});
    CHECK(cfg.detector.variant == irx::MetricVariant::lut);
    CHECK(cfg.detector.k_tilde == 12);
    CHECK(cfg.train.learning_rate == 0.05);
    CHECK(cfg.train.batch_size == 32);
    CHECK(cfg.train.total_samples == 6400);
    CHECK(cfg.train.init_seed == 5);
    CHECK(cfg.train_snr_list == std::vector<double>{2, 6});
    CHECK_FALSE(cfg.train_mixture);
    CHECK(cfg.sweep_snr_points == std::vector<double>{0, 5, 10});
    CHECK(cfg.sweep_blocks_per_point == 250);
    CHECK(cfg.sweep_policies ==
          std::vector<Policy>{Policy::none, Policy::bayes,
                              Policy::always_fallback});
    CHECK_FALSE(cfg.sweep_mix_formats);
    CHECK_FALSE(cfg.sweep_inr_tracks_snr);
    CHECK(cfg.validation_samples == 123);
    CHECK(cfg.lut_samples_per_cell == 777);
    CHECK(cfg.lut_path == "a.lut");
    CHECK(cfg.mlp_path == "b.mlp");
    CHECK(cfg.costs_path == "c.csv");
}

TEST_CASE("comments in the document are tolerated") {
    const RunConfig cfg = load_text(R"({
        // master seed for the whole run
        "seed": 7,
        /* the link block */
        "link": {"snr_db": 3.0}
    })");
    CHECK(cfg.seed == 7);
    CHECK(cfg.link.snr_db == 3.0);
}

TEST_CASE("unknown keys are rejected at every level") {
    expect_rejected(R"({"sed": 1})", "unknown key 'sed'");
    expect_rejected(R"({"link": {"snrdb": 1}})", "unknown key 'snrdb'");
    expect_rejected(R"({"detector": {"ktilde": 2}})", "unknown key 'ktilde'");
    expect_rejected(R"({"train": {"rate": 0.1}})", "unknown key 'rate'");
    expect_rejected(R"({"sweep": {"blocks": 10}})", "unknown key 'blocks'");
    expect_rejected(R"({"lut": {"cells": 10}})", "unknown key 'cells'");
    expect_rejected(R"({"paths": {"weights": "x"}})", "unknown key 'weights'");
}

TEST_CASE("malformed documents and files raise config errors") {
    CHECK_THROWS_AS(irx::load_config("/nonexistent/irx.json"), ConfigError);
    expect_rejected("{", "parse failure");
    expect_rejected("[1, 2]", "top level must be an object");
}

TEST_CASE("type mismatches are named") {
    expect_rejected(R"({"seed": -1})", "seed");
    expect_rejected(R"({"seed": "one"})", "seed");
    expect_rejected(R"({"workers": 1.5})", "workers");
    expect_rejected(R"({"out_dir": 3})", "out_dir");
    expect_rejected(R"({"link": {"snr_db": "ten"}})", "snr_db");
    expect_rejected(R"({"link": {"block_len": -4}})", "block_len");
    expect_rejected(R"({"link": {"desired_format": "qam32"}})", "format");
    expect_rejected(R"({"detector": {"formats": "qpsk"}})", "formats");
    expect_rejected(R"({"detector": {"formats": ["qpsk", "qam32"]}})", "qam32");
    expect_rejected(R"({"detector": {"metric_variant": "fancy"}})",
                    "metric_variant");
    expect_rejected(R"({"train": {"snr_db_list": [1, "x"]}})", "snr_db_list");
    expect_rejected(R"({"train": {"snr_db_list": []}})", "snr_db_list");
    expect_rejected(R"({"train": {"mixture": 1}})", "mixture");
    expect_rejected(R"({"sweep": {"policies": ["none", "turbo"]}})", "turbo");
    expect_rejected(R"({"sweep": {"policies": [4]}})", "policy");
    expect_rejected(R"({"sweep": {"mix_formats": "yes"}})", "mix_formats");
}

TEST_CASE("semantic bounds are enforced") {
    expect_rejected(R"({"link": {"n_rx": 0}})", "link dimensions");
    expect_rejected(R"({"link": {"n_rx": 9}})", "link dimensions");
    expect_rejected(R"({"link": {"k2_layers": 9}})", "link dimensions");
    expect_rejected(R"({"link": {"block_len": 0}})", "link dimensions");
    expect_rejected(R"({"detector": {"formats": ["qpsk"]}})",
                    "at least two formats");
    expect_rejected(R"({"detector": {"k_tilde": 0}})", "k_tilde");
    expect_rejected(R"({"train": {"learning_rate": 0.0}})", "training");
    expect_rejected(R"({"train": {"batch_size": 0}})", "training");
    expect_rejected(R"({"train": {"total_samples": 8, "batch_size": 16}})",
                    "training");
    expect_rejected(R"({"sweep": {"blocks_per_point": 0}})", "sweep sizes");
    expect_rejected(R"({"sweep": {"validation_samples": 0}})", "sweep sizes");
    expect_rejected(R"({"lut": {"samples_per_cell": 0}})", "samples_per_cell");
}

TEST_CASE("the canonical hash ignores execution details only") {
    RunConfig base;
    const std::uint64_t h = irx::config_hash(base);

    RunConfig reseeded = base;
    reseeded.seed = 777;
    CHECK(irx::config_hash(reseeded) == h);

    RunConfig threaded = base;
    threaded.workers = 16;
    CHECK(irx::config_hash(threaded) == h);

    RunConfig relocated = base;
    relocated.out_dir = "/elsewhere";
    relocated.lut_path = "other.lut";
    CHECK(irx::config_hash(relocated) == h);

    // every substantive knob must move the hash
    RunConfig c1 = base;
    c1.link.snr_db = 11.0;
    CHECK(irx::config_hash(c1) != h);
    RunConfig c2 = base;
    c2.detector.k_tilde = 23;
    CHECK(irx::config_hash(c2) != h);
    RunConfig c3 = base;
    c3.train.total_samples = 320000;
    CHECK(irx::config_hash(c3) != h);
    RunConfig c4 = base;
    c4.sweep_policies = {Policy::none, Policy::genie};
    CHECK(irx::config_hash(c4) != h);
    RunConfig c5 = base;
    c5.lut_samples_per_cell = 12345;
    CHECK(irx::config_hash(c5) != h);
    RunConfig c6 = base;
    c6.train.init_seed = 2; // network init is substantive, not scheduling
    CHECK(irx::config_hash(c6) != h);
}

TEST_CASE("the hash is the fnv-1a digest of the canonical form") {
    RunConfig cfg;
    cfg.link.snr_db = 4.5;
    const std::string canon = irx::canonical_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    CHECK(h == irx::config_hash(cfg));
    // loading an equivalent document reproduces the canonical form exactly
    const RunConfig loaded = load_text(R"({"link": {"snr_db": 4.5}})");
    CHECK(irx::canonical_config(loaded) == canon);
}

TEST_CASE("output headers carry the hash and seed") {
    RunConfig cfg;
    cfg.seed = 42;
    const std::string header = irx::output_header(cfg);
    char expect[64];
    std::snprintf(expect, sizeof(expect), "config_hash=%016llx seed=42",
                  static_cast<unsigned long long>(irx::config_hash(cfg)));
    CHECK(header == expect);
    REQUIRE(header.size() >= 12 + 16);
    for (std::size_t i = 12; i < 28; ++i)
        CHECK(std::isxdigit(static_cast<unsigned char>(header[i])));
}

TEST_CASE("sweep specs inherit the matching config fields") {
    RunConfig cfg;
    cfg.seed = 9;
    cfg.workers = 2;
    cfg.link.snr_db = 1.0;
    cfg.sweep_snr_points = {3.0, 6.0};
    cfg.sweep_blocks_per_point = 55;
    cfg.sweep_policies = {Policy::oracle};
    cfg.sweep_mix_formats = false;
    cfg.sweep_inr_tracks_snr = false;
    const irx::SweepSpec spec = cfg.make_sweep_spec();
    CHECK(spec.snr_points_db == cfg.sweep_snr_points);
    CHECK(spec.blocks_per_point == 55);
    CHECK(spec.link.snr_db == 1.0);
    CHECK(spec.policies == std::vector<Policy>{Policy::oracle});
    CHECK(spec.seed == 9);
    CHECK(spec.workers == 2);
    CHECK_FALSE(spec.mix_formats);
    CHECK_FALSE(spec.inr_tracks_snr);
}
