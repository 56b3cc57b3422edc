#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irx/channel.hpp"
#include "irx/fallback.hpp"
#include "irx/format_detect.hpp"
#include "irx/mlp.hpp"
#include "irx/receivers.hpp"

namespace irx {

// Per-block behavior after format detection:
//  - none:            always trust the detector and cancel
//  - bayes:           minimum-risk hypothesis test decides when to bail out
//  - dnn:             trained network decides when to bail out
//  - genie:           always cancel using the true interference format
//  - always_fallback: never cancel, plain interference-aware equalizer only
//  - oracle:          bail out exactly when the detector is wrong
enum class Policy : std::uint8_t {
    none,
    bayes,
    dnn,
    genie,
    always_fallback,
    oracle
};

std::optional<Policy> parse_policy(std::string_view s);
const char* name(Policy p);

struct Artifacts {
    DetectorConfig detector;
    const PenaltyLut* lut = nullptr;   // required by the lut metric variant
    const CostMatrix* costs = nullptr; // required by the bayes policy
    const MlpParams* mlp = nullptr;    // required by the dnn policy
};

// Count-level error bookkeeping for one (snr, policy) cell. The headline
// post-decision error rate combines discarded-good and kept-bad blocks:
// r_e = p_d * gamma_e1 + p_e * gamma_e2, evaluated on raw counts so the
// algebraic identities hold exactly.
struct RateReport {
    std::size_t n_blocks = 0;
    std::size_t n_detect_correct = 0;
    std::size_t n_fallback = 0;
    std::size_t n_fallback_when_correct = 0;
    std::size_t n_keep_when_wrong = 0;
    std::size_t n_decoded_ok = 0;
    bool has_throughput = false;

    double p_d = 0.0;        // detection success rate
    double p_e = 0.0;        // detection error rate
    double gamma_e1 = 0.0;   // P(bail out | detection correct)
    double gamma_e2 = 0.0;   // P(keep | detection wrong)
    double r_e = 0.0;
    double p_fallback = 0.0;
    double throughput = 0.0; // fraction of blocks decoded exactly

    double ci_r_e = 0.0; // 95% normal-approximation half-widths
    double ci_p_d = 0.0;
    double ci_p_fallback = 0.0;
    double ci_throughput = 0.0;

    void finalize();
};

struct SweepRow {
    double snr_db;
    Policy policy;
    RateReport report;
};

struct SweepSpec {
    std::vector<double> snr_points_db;
    std::size_t blocks_per_point = 10000;
    LinkConfig link;
    std::vector<Policy> policies{Policy::none};
    std::uint64_t seed = 1;
    std::size_t workers = 0;      // 0 = all hardware threads
    bool mix_formats = true;      // draw both stream formats per block
    bool inr_tracks_snr = true;   // interference level follows the swept snr
};

// formats drawn per block when mix_formats is set
const std::vector<ModFormat>& error_rate_format_mix();

// Deterministic parallel loop: every index sees the same work regardless of
// the worker count, so results can never depend on scheduling.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

// Full receive pipeline for one block, shared by every policy: equalize,
// build the purified interference estimate, detect the interference format.
struct BlockAnalysis {
    EqualizedBlock eq_fallback; // non-canceling equalizer output
    InterferenceEstimate xi;    // purified linear interference estimate
    Detection det;
    std::size_t true_format_index;
};

BlockAnalysis analyze_block(const LinkConfig& link, const ChannelRealization& chan,
                            const CMatrix& y, const Artifacts& art);

struct BlockOutcome {
    std::size_t true_format_index;
    std::size_t detected_index;
    bool fell_back;
    std::size_t policy_hypothesis; // bayes hypothesis or detector choice
    EqualizedBlock final_eq;
};

BlockOutcome run_block(const LinkConfig& link, const ChannelRealization& chan,
                       const CMatrix& y, Policy policy, const Artifacts& art);

// Labeled detector outputs from synthetic observations: the network's food.
// Each sample draws a true format uniformly, an SNR uniformly from the given
// list, runs the detector, and labels whether it was right.
std::vector<TrainSample> gen_training_set(const DetectorConfig& det,
                                          const PenaltyLut* lut,
                                          const std::vector<double>& snr_db_mix,
                                          std::size_t count, std::uint64_t seed);

// Uncoded sweep of detection and fall-back statistics per (snr, policy).
std::vector<SweepRow> error_rate_sweep(const SweepSpec& spec, const Artifacts& art);

// Coded sweep: each block carries one convolutionally encoded transport
// block on the desired stream; throughput is the exact-decode fraction.
std::vector<SweepRow> throughput_sweep(const SweepSpec& spec, const Artifacts& art);

struct LossCurveSet {
    std::vector<double> snr_db;
    std::vector<LossTrace> traces;
    LossTrace mixture_trace;
    std::vector<double> final_per_snr;
    double final_mixture = 0.0;
};

// One training run per SNR plus one mixed-SNR run, with fresh data each run.
LossCurveSet loss_curves(const DetectorConfig& det, const PenaltyLut* lut,
                         const std::vector<double>& snr_list,
                         const TrainConfig& tc, std::uint64_t data_seed);

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     const std::string& header_comment);
void write_loss_csv(const std::string& path, const LossTrace& trace,
                    const std::string& header_comment);
void write_training_csv(const std::string& path,
                        const std::vector<TrainSample>& samples,
                        const std::string& header_comment);

} // namespace irx
