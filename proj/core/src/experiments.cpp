#include "irx/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "irx/convcode.hpp"
#include "irx/random.hpp"

namespace irx {

std::optional<Policy> parse_policy(std::string_view s) {
    if (s == "none") return Policy::none;
    if (s == "bayes") return Policy::bayes;
    if (s == "dnn") return Policy::dnn;
    if (s == "genie") return Policy::genie;
    if (s == "always_fallback" || s == "eirc_only") return Policy::always_fallback;
    if (s == "oracle") return Policy::oracle;
    return std::nullopt;
}

const char* name(Policy p) {
    switch (p) {
        case Policy::none: return "none";
        case Policy::bayes: return "bayes";
        case Policy::dnn: return "dnn";
        case Policy::genie: return "genie";
        case Policy::always_fallback: return "always_fallback";
        case Policy::oracle: return "oracle";
    }
    return "?";
}

void RateReport::finalize() {
    const double n = static_cast<double>(n_blocks);
    if (n_blocks == 0) return;
    const std::size_t n_wrong = n_blocks - n_detect_correct;
    p_d = static_cast<double>(n_detect_correct) / n;
    p_e = static_cast<double>(n_wrong) / n;
    gamma_e1 = n_detect_correct
                   ? static_cast<double>(n_fallback_when_correct) /
                         static_cast<double>(n_detect_correct)
                   : 0.0;
    gamma_e2 = n_wrong ? static_cast<double>(n_keep_when_wrong) /
                             static_cast<double>(n_wrong)
                       : 0.0;
    // same ratio the two-term product would give, taken on raw counts
    r_e = static_cast<double>(n_fallback_when_correct + n_keep_when_wrong) / n;
    p_fallback = static_cast<double>(n_fallback) / n;
    throughput = static_cast<double>(n_decoded_ok) / n;

    auto half = [n](double p) { return 1.96 * std::sqrt(p * (1.0 - p) / n); };
    ci_r_e = half(r_e);
    ci_p_d = half(p_d);
    ci_p_fallback = half(p_fallback);
    ci_throughput = half(throughput);
}

const std::vector<ModFormat>& error_rate_format_mix() {
    static const std::vector<ModFormat> mix{ModFormat::qpsk, ModFormat::qam16,
                                            ModFormat::qam64};
    return mix;
}

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
    if (workers == 0) {
        workers = std::thread::hardware_concurrency();
        if (workers == 0) workers = 1;
    }
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (workers > n) workers = n;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

std::size_t format_index_of(const std::vector<ModFormat>& formats, ModFormat f) {
    for (std::size_t i = 0; i < formats.size(); ++i)
        if (formats[i] == f) return i;
    throw std::invalid_argument("format not in detector candidate set");
}

// posterior soft symbols of the desired stream, feeding the purified
// interference estimator
void soft_desired(const EqualizedBlock& eq, const Constellation& c,
                  CMatrix& s_hat, std::vector<double>& c_s) {
    s_hat = CMatrix(eq.s_tilde.rows(), eq.s_tilde.cols());
    c_s.assign(eq.s_tilde.rows(), 0.0);
    for (std::size_t j = 0; j < eq.s_tilde.rows(); ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < eq.s_tilde.cols(); ++k) {
            const SoftSymbol ss =
                posterior_stats(eq.s_tilde(j, k), eq.per_layer_noise[j], c);
            s_hat(j, k) = ss.mean;
            acc += ss.variance;
        }
        c_s[j] = eq.s_tilde.cols()
                     ? acc / static_cast<double>(eq.s_tilde.cols())
                     : 0.0;
    }
}

struct PolicyCall {
    bool fell_back;
    std::size_t hypothesis;
    std::size_t slic_format; // meaningful only when not falling back
};

PolicyCall decide(Policy policy, const BlockAnalysis& ba, const Artifacts& art) {
    PolicyCall out{false, ba.det.format_index, ba.det.format_index};
    switch (policy) {
        case Policy::none:
            break;
        case Policy::always_fallback:
            out.fell_back = true;
            out.hypothesis = art.detector.formats.size();
            break;
        case Policy::genie:
            out.slic_format = ba.true_format_index;
            out.hypothesis = ba.true_format_index;
            break;
        case Policy::oracle:
            out.fell_back = ba.det.format_index != ba.true_format_index;
            if (out.fell_back) out.hypothesis = art.detector.formats.size();
            break;
        case Policy::bayes: {
            if (!art.costs)
                throw std::invalid_argument("bayes policy without a cost matrix");
            const FallbackDecision d = bayes_decide(*art.costs, ba.det.metrics);
            out.fell_back = d.fall_back;
            out.hypothesis = d.chosen_hypothesis;
            break;
        }
        case Policy::dnn: {
            if (!art.mlp)
                throw std::invalid_argument("dnn policy without trained weights");
            const FallbackDecision d = dnn_decide(*art.mlp, ba.det.metrics);
            out.fell_back = d.fall_back;
            out.hypothesis = d.chosen_hypothesis;
            break;
        }
    }
    return out;
}

} // namespace

BlockAnalysis analyze_block(const LinkConfig& link, const ChannelRealization& chan,
                            const CMatrix& y, const Artifacts& art) {
    BlockAnalysis ba;
    ba.true_format_index =
        format_index_of(art.detector.formats, link.interference_format);
    ba.eq_fallback = eirc(chan, y);

    CMatrix s_hat;
    std::vector<double> c_s;
    soft_desired(ba.eq_fallback, constellation(link.desired_format), s_hat, c_s);
    ba.xi = estimate_interference_purified(chan, y, s_hat, c_s);

    // sample-major flatten of the first k_tilde interference estimates
    EstimateSeq seq;
    const std::size_t total = ba.xi.x_hat.rows() * ba.xi.x_hat.cols();
    const std::size_t want = std::min(art.detector.k_tilde, total);
    seq.reserve(want);
    for (std::size_t k = 0; k < ba.xi.x_hat.cols() && seq.size() < want; ++k)
        for (std::size_t j = 0; j < ba.xi.x_hat.rows() && seq.size() < want; ++j)
            seq.push_back({ba.xi.x_hat(j, k), ba.xi.n_tilde[j]});

    ba.det = metric_per_format(art.detector, seq, art.lut);
    return ba;
}

BlockOutcome run_block(const LinkConfig& link, const ChannelRealization& chan,
                       const CMatrix& y, Policy policy, const Artifacts& art) {
    const BlockAnalysis ba = analyze_block(link, chan, y, art);
    const PolicyCall call = decide(policy, ba, art);
    BlockOutcome out;
    out.true_format_index = ba.true_format_index;
    out.detected_index = ba.det.format_index;
    out.fell_back = call.fell_back;
    out.policy_hypothesis = call.hypothesis;
    if (call.fell_back) {
        out.final_eq = ba.eq_fallback;
    } else {
        const auto& cx = constellation(art.detector.formats[call.slic_format]);
        out.final_eq = slic(chan, y, refine_with_format(ba.xi, cx));
    }
    return out;
}

std::vector<TrainSample> gen_training_set(const DetectorConfig& det,
                                          const PenaltyLut* lut,
                                          const std::vector<double>& snr_db_mix,
                                          std::size_t count, std::uint64_t seed) {
    if (snr_db_mix.empty())
        throw std::invalid_argument("gen_training_set: empty snr list");
    std::vector<TrainSample> out(count);
    parallel_for(count, 1, [&](std::size_t i) {
        const std::uint64_t base = mix_seed(seed, i);
        Rng rng(base);
        const double snr =
            snr_db_mix[rng.uniform_int(static_cast<std::uint32_t>(snr_db_mix.size()))];
        const std::size_t true_idx =
            rng.uniform_int(static_cast<std::uint32_t>(det.formats.size()));
        const TrainingObservation obs = make_training_observation(
            det.formats[true_idx], snr, det.k_tilde, mix_seed(base, 1));
        const Detection d = metric_per_format(det, obs.estimates, lut);
        out[i].mu = d.metrics.probs;
        out[i].label = d.format_index == true_idx ? 0 : 1;
    });
    return out;
}

namespace {

struct BlockStats {
    std::size_t true_idx;
    std::size_t detected;
    std::uint32_t fell_back_mask; // bit per policy
    std::uint32_t decoded_mask;
};

std::vector<SweepRow> aggregate(const SweepSpec& spec,
                                const std::vector<std::vector<BlockStats>>& stats,
                                bool with_throughput) {
    std::vector<SweepRow> rows;
    for (std::size_t pt = 0; pt < spec.snr_points_db.size(); ++pt) {
        for (std::size_t pi = 0; pi < spec.policies.size(); ++pi) {
            SweepRow row;
            row.snr_db = spec.snr_points_db[pt];
            row.policy = spec.policies[pi];
            RateReport& r = row.report;
            r.has_throughput = with_throughput;
            for (const BlockStats& b : stats[pt]) {
                const bool correct = b.true_idx == b.detected;
                const bool fell = (b.fell_back_mask >> pi) & 1u;
                ++r.n_blocks;
                r.n_detect_correct += correct;
                r.n_fallback += fell;
                r.n_fallback_when_correct += fell && correct;
                r.n_keep_when_wrong += !fell && !correct;
                r.n_decoded_ok += (b.decoded_mask >> pi) & 1u;
            }
            r.finalize();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void require_policy_artifacts(const SweepSpec& spec, const Artifacts& art) {
    for (Policy p : spec.policies) {
        if (p == Policy::bayes && !art.costs)
            throw std::invalid_argument("sweep: bayes policy without a cost matrix");
        if (p == Policy::dnn && !art.mlp)
            throw std::invalid_argument("sweep: dnn policy without trained weights");
    }
    if (art.detector.variant == MetricVariant::lut && !art.lut)
        throw std::invalid_argument("sweep: lut metric without a table");
    if (spec.policies.size() > 32)
        throw std::invalid_argument("sweep: too many policies");
}

LinkConfig point_config(const SweepSpec& spec, double snr_db) {
    LinkConfig cfg = spec.link;
    cfg.snr_db = snr_db;
    if (spec.inr_tracks_snr) cfg.inr_db = snr_db;
    return cfg;
}

// per-block stream formats under the mixing rule
void apply_format_mix(const SweepSpec& spec, LinkConfig& cfg, Rng& rng) {
    if (!spec.mix_formats) return;
    const auto& mix = error_rate_format_mix();
    cfg.desired_format = mix[rng.uniform_int(static_cast<std::uint32_t>(mix.size()))];
    cfg.interference_format =
        mix[rng.uniform_int(static_cast<std::uint32_t>(mix.size()))];
}

} // namespace

std::vector<SweepRow> error_rate_sweep(const SweepSpec& spec, const Artifacts& art) {
    require_policy_artifacts(spec, art);
    std::vector<std::vector<BlockStats>> stats(
        spec.snr_points_db.size(),
        std::vector<BlockStats>(spec.blocks_per_point));

    for (std::size_t pt = 0; pt < spec.snr_points_db.size(); ++pt) {
        const LinkConfig base_cfg = point_config(spec, spec.snr_points_db[pt]);
        parallel_for(spec.blocks_per_point, spec.workers, [&, pt](std::size_t i) {
            const std::uint64_t block_seed =
                mix_seed(spec.seed, pt * spec.blocks_per_point + i);
            LinkConfig cfg = base_cfg;
            Rng mix_rng(mix_seed(block_seed, 0));
            apply_format_mix(spec, cfg, mix_rng);
            const ChannelRealization chan =
                draw_channel(cfg, mix_seed(block_seed, 1));
            const auto [blk, y] = transmit(cfg, chan, mix_seed(block_seed, 2));
            const BlockAnalysis ba = analyze_block(cfg, chan, y, art);
            BlockStats& b = stats[pt][i];
            b.true_idx = ba.true_format_index;
            b.detected = ba.det.format_index;
            b.fell_back_mask = 0;
            b.decoded_mask = 0;
            for (std::size_t pi = 0; pi < spec.policies.size(); ++pi) {
                const PolicyCall call = decide(spec.policies[pi], ba, art);
                if (call.fell_back) b.fell_back_mask |= 1u << pi;
            }
        });
    }
    return aggregate(spec, stats, false);
}

std::vector<SweepRow> throughput_sweep(const SweepSpec& spec, const Artifacts& art) {
    require_policy_artifacts(spec, art);
    if (spec.link.k1_layers != 1)
        throw std::invalid_argument(
            "throughput_sweep: coded chain carries a single desired layer");

    const auto& cs = constellation(spec.link.desired_format);
    const std::size_t coded_bits = 2 * (kConvBlockInfoBits + kConvMemory);
    if (coded_bits % cs.bits() != 0)
        throw std::invalid_argument(
            "throughput_sweep: coded bits not a whole number of symbols");
    const std::size_t block_len = coded_bits / cs.bits();

    std::vector<std::vector<BlockStats>> stats(
        spec.snr_points_db.size(),
        std::vector<BlockStats>(spec.blocks_per_point));

    for (std::size_t pt = 0; pt < spec.snr_points_db.size(); ++pt) {
        LinkConfig cfg = point_config(spec, spec.snr_points_db[pt]);
        cfg.block_len = block_len;
        parallel_for(spec.blocks_per_point, spec.workers, [&, pt, cfg](std::size_t i) {
            const std::uint64_t block_seed =
                mix_seed(spec.seed, pt * spec.blocks_per_point + i);
            Rng bits_rng(mix_seed(block_seed, 0));

            std::vector<std::uint8_t> info(kConvBlockInfoBits);
            for (auto& b : info)
                b = static_cast<std::uint8_t>(bits_rng.next_u64() & 1u);
            const auto coded = conv_encode(info);
            const auto s_syms = modulate(coded, cs);
            CMatrix s(1, block_len);
            for (std::size_t k = 0; k < block_len; ++k) s(0, k) = s_syms[k];

            const auto& cx_const = constellation(cfg.interference_format);
            CMatrix x(cfg.k2_layers, block_len);
            for (std::size_t j = 0; j < cfg.k2_layers; ++j)
                for (std::size_t k = 0; k < block_len; ++k)
                    x(j, k) = cx_const.map(bits_rng.uniform_int(
                        static_cast<std::uint32_t>(cx_const.size())));

            const ChannelRealization chan =
                draw_channel(cfg, mix_seed(block_seed, 1));
            const CMatrix y =
                received_samples(chan, s, x, mix_seed(block_seed, 2));

            const BlockAnalysis ba = analyze_block(cfg, chan, y, art);
            BlockStats& b = stats[pt][i];
            b.true_idx = ba.true_format_index;
            b.detected = ba.det.format_index;
            b.fell_back_mask = 0;
            b.decoded_mask = 0;
            for (std::size_t pi = 0; pi < spec.policies.size(); ++pi) {
                const PolicyCall call = decide(spec.policies[pi], ba, art);
                if (call.fell_back) b.fell_back_mask |= 1u << pi;
                EqualizedBlock eq;
                if (call.fell_back) {
                    eq = ba.eq_fallback;
                } else {
                    const auto& cfmt =
                        constellation(art.detector.formats[call.slic_format]);
                    eq = slic(chan, y, refine_with_format(ba.xi, cfmt));
                }
                std::vector<cxd> row(block_len);
                for (std::size_t k = 0; k < block_len; ++k) row[k] = eq.s_tilde(0, k);
                const auto llrs = bit_llrs(row, eq.per_layer_noise[0], cs);
                if (viterbi_decode(llrs) == info) b.decoded_mask |= 1u << pi;
            }
        });
    }
    return aggregate(spec, stats, true);
}

LossCurveSet loss_curves(const DetectorConfig& det, const PenaltyLut* lut,
                         const std::vector<double>& snr_list,
                         const TrainConfig& tc, std::uint64_t data_seed) {
    if (snr_list.empty()) throw std::invalid_argument("loss_curves: empty snr list");
    LossCurveSet out;
    out.snr_db = snr_list;
    for (std::size_t r = 0; r < snr_list.size(); ++r) {
        const auto data = gen_training_set(det, lut, {snr_list[r]}, tc.total_samples,
                                           mix_seed(data_seed, r));
        auto [params, trace] = train(tc, data);
        (void)params;
        out.final_per_snr.push_back(trace.smoothed.back());
        out.traces.push_back(std::move(trace));
    }
    const auto data = gen_training_set(det, lut, snr_list, tc.total_samples,
                                       mix_seed(data_seed, snr_list.size()));
    auto [params, trace] = train(tc, data);
    (void)params;
    out.final_mixture = trace.smoothed.back();
    out.mixture_trace = std::move(trace);
    return out;
}

namespace {

void write_file_or_throw(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << body;
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     const std::string& header_comment) {
    std::string body;
    if (!header_comment.empty()) body += "# " + header_comment + "\n";
    body +=
        "snr_db,policy,p_d,p_e,gamma_e1,gamma_e2,r_e,p_fallback,throughput,"
        "n_blocks,ci_halfwidth\n";
    for (const auto& row : rows) {
        const RateReport& r = row.report;
        body += fmt_double(row.snr_db);
        body += ',';
        body += name(row.policy);
        for (double v : {r.p_d, r.p_e, r.gamma_e1, r.gamma_e2, r.r_e, r.p_fallback}) {
            body += ',';
            body += fmt_double(v);
        }
        body += ',';
        if (r.has_throughput) body += fmt_double(r.throughput);
        body += ',';
        body += std::to_string(r.n_blocks);
        body += ',';
        body += fmt_double(r.has_throughput ? r.ci_throughput : r.ci_r_e);
        body += '\n';
    }
    write_file_or_throw(path, body);
}

void write_loss_csv(const std::string& path, const LossTrace& trace,
                    const std::string& header_comment) {
    std::string body;
    if (!header_comment.empty()) body += "# " + header_comment + "\n";
    body += "iteration,batch_loss,smoothed_loss\n";
    for (std::size_t i = 0; i < trace.batch_loss.size(); ++i) {
        body += std::to_string(i);
        body += ',';
        body += fmt_double(trace.batch_loss[i]);
        body += ',';
        body += fmt_double(trace.smoothed[i]);
        body += '\n';
    }
    write_file_or_throw(path, body);
}

void write_training_csv(const std::string& path,
                        const std::vector<TrainSample>& samples,
                        const std::string& header_comment) {
    std::string body;
    if (!header_comment.empty()) body += "# " + header_comment + "\n";
    if (!samples.empty()) {
        for (std::size_t j = 0; j < samples[0].mu.size(); ++j) {
            body += "mu_" + std::to_string(j) + ",";
        }
        body += "label\n";
        for (const auto& s : samples) {
            for (double v : s.mu) {
                body += fmt_double(v);
                body += ',';
            }
            body += std::to_string(s.label);
            body += '\n';
        }
    }
    write_file_or_throw(path, body);
}

} // namespace irx
