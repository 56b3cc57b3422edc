#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irx/cmatrix.hpp"
#include "irx/estimate.hpp"
#include "irx/modem.hpp"

namespace irx {

// Per-sample likelihood metric flavor.
//  - plain_sum:   distance sum over every constellation point plus the size
//                 penalty. Kept as a baseline; for zero-mean unit-energy
//                 constellations it collapses to a format-independent value
//                 and the penalty alone decides.
//  - log_sum_exp: noise-weighted soft-min over points, the default.
//  - lut:         nearest-point distance plus a tabulated correction.
enum class MetricVariant : std::uint8_t { plain_sum, log_sum_exp, lut };

std::optional<MetricVariant> parse_metric_variant(std::string_view s);
const char* name(MetricVariant v);

struct DetectorConfig {
    std::vector<ModFormat> formats{ModFormat::qpsk, ModFormat::qam16,
                                   ModFormat::qam64, ModFormat::qam256};
    MetricVariant variant = MetricVariant::log_sum_exp;
    std::size_t k_tilde = 24;
};

struct MetricVector {
    std::vector<double> raw;   // one score per candidate format
    std::vector<double> probs; // softmax of raw, sums to one
};

struct Detection {
    MetricVector metrics;
    std::size_t format_index; // argmax of raw; exact ties go to smallest order
};

// Correction table for the lut variant: one row per format over a shared
// noise-variance grid, interpolated linearly in dB of the variance and
// clamped at the ends.
struct PenaltyLut {
    std::vector<ModFormat> formats;
    std::vector<double> grid;               // noise variances, strictly increasing
    std::vector<std::vector<double>> table; // formats.size() rows of grid.size()
    std::uint64_t samples_per_cell = 0;
    std::uint64_t seed = 0;

    double lookup(double noise_var, std::size_t format_index) const;
};

MetricVector softmax_metrics(std::vector<double> raw);

// Score every candidate format from per-symbol estimates. The lut variant
// requires a table covering all candidates.
Detection metric_per_format(const DetectorConfig& cfg, const EstimateSeq& estimates,
                            const PenaltyLut* lut = nullptr);

// 41-point default grid, 1 dB apart, matching effective SNRs of -10..30 dB
// against unit symbol energy.
std::vector<double> default_lut_grid();

// Monte Carlo build of the correction table; per-cell standard errors are
// written to stderr_out when given.
PenaltyLut build_penalty_lut(const std::vector<ModFormat>& formats,
                             const std::vector<double>& grid,
                             std::size_t samples_per_cell, std::uint64_t seed,
                             std::vector<std::vector<double>>* stderr_out = nullptr);

void save_lut(const PenaltyLut& lut, const std::string& path);
PenaltyLut load_lut(const std::string& path, const std::vector<ModFormat>& formats);

// One received sample with its channel matrices for the exhaustive reference
// detector.
struct MlSample {
    CMatrix y; // n_rx x 1
    CMatrix h; // n_rx x k1
    CMatrix g; // n_rx x k2
};

// Joint maximum-likelihood detection over every transmit hypothesis, with a
// noise-scaled constellation-size penalty. Refuses instances whose hypothesis
// count per sample exceeds 2^20. plain_sum scores the full distance sum;
// log_sum_exp scores the marginalized likelihood.
Detection metric_full_ml(const DetectorConfig& cfg, const std::vector<MlSample>& samples,
                         double n0, ModFormat desired_format,
                         MetricVariant variant = MetricVariant::log_sum_exp);

} // namespace irx
