#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "irx/experiments.hpp"

namespace irx {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything the command line tool can be told, with working defaults.
// Loaded from a JSON document; unknown keys are rejected so a typo cannot
// silently fall back to a default.
struct RunConfig {
    std::uint64_t seed = 1;
    std::size_t workers = 0; // 0 = all hardware threads
    std::string out_dir = ".";

    LinkConfig link;
    DetectorConfig detector;

    TrainConfig train;
    std::vector<double> train_snr_list{0, 4, 8, 12, 16, 20};
    bool train_mixture = true; // single-snr runs still come from the list

    std::vector<double> sweep_snr_points{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
    std::size_t sweep_blocks_per_point = 10000;
    std::vector<Policy> sweep_policies{Policy::none};
    bool sweep_mix_formats = true;
    bool sweep_inr_tracks_snr = true;
    std::size_t validation_samples = 50000;

    std::size_t lut_samples_per_cell = 20000;

    std::string lut_path;
    std::string mlp_path;
    std::string costs_path;

    SweepSpec make_sweep_spec() const;
};

RunConfig load_config(const std::string& path);

// Canonical serialized form (sorted keys, execution details excluded) and its
// 64-bit FNV-1a hash. Two runs with the same hash and seed produce the same
// outputs no matter the worker count.
std::string canonical_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

// "config_hash=... seed=..." line content for output file headers
std::string output_header(const RunConfig& cfg);

} // namespace irx
