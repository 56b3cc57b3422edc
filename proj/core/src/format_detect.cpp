#include "irx/format_detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "irx/random.hpp"
#include "binio.hpp"

namespace irx {

namespace {

constexpr char kLutMagic[7] = {'I', 'R', 'X', 'L', 'U', 'T', '1'};

// exp(-50) is below double precision next to the always-present
// zero-exponent term, so such contributions can be skipped outright
constexpr double kExpCut = 50.0;

std::size_t pick_format(const std::vector<ModFormat>& formats,
                        const std::vector<double>& raw) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < raw.size(); ++i) {
        if (raw[i] > raw[best] ||
            (raw[i] == raw[best] && order(formats[i]) < order(formats[best])))
            best = i;
    }
    return best;
}

// raw metrics carry units of signal power; dividing by the effective noise
// restores log-likelihood scale, so probs behave as a posterior over formats
// (confident when the noise is small) instead of flattening out at high SNR
MetricVector posterior_from(std::vector<double> raw, double temperature) {
    std::vector<double> scaled(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) scaled[i] = raw[i] / temperature;
    MetricVector mv = softmax_metrics(std::move(scaled));
    mv.raw = std::move(raw);
    return mv;
}

// ln sum_x exp(-|v - x|^2 / nv) evaluated against the minimum distance;
// returns {d_min, ln_sum_over_points_of_exp(-(d - d_min)/nv)}
std::pair<double, double> soft_min_terms(cxd v, double nv, const Constellation& c) {
    const auto& pts = c.points();
    double dmin = std::numeric_limits<double>::infinity();
    thread_local std::vector<double> dists;
    dists.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        dists[i] = std::norm(v - pts[i]);
        if (dists[i] < dmin) dmin = dists[i];
    }
    double s = 0.0;
    for (double d : dists) {
        const double t = (d - dmin) / nv;
        if (t < kExpCut) s += std::exp(-t);
    }
    return {dmin, std::log(s)};
}

} // namespace

std::optional<MetricVariant> parse_metric_variant(std::string_view s) {
    if (s == "plain_sum" || s == "literal") return MetricVariant::plain_sum;
    if (s == "log_sum_exp") return MetricVariant::log_sum_exp;
    if (s == "lut") return MetricVariant::lut;
    return std::nullopt;
}

const char* name(MetricVariant v) {
    switch (v) {
        case MetricVariant::plain_sum: return "plain_sum";
        case MetricVariant::log_sum_exp: return "log_sum_exp";
        case MetricVariant::lut: return "lut";
    }
    return "?";
}

double PenaltyLut::lookup(double noise_var, std::size_t format_index) const {
    const auto& row = table[format_index];
    if (noise_var <= grid.front()) return row.front();
    if (noise_var >= grid.back()) return row.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), noise_var);
    const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    const std::size_t lo = hi - 1;
    const double x = 10.0 * std::log10(noise_var);
    const double x0 = 10.0 * std::log10(grid[lo]);
    const double x1 = 10.0 * std::log10(grid[hi]);
    const double t = (x - x0) / (x1 - x0);
    return row[lo] + t * (row[hi] - row[lo]);
}

MetricVector softmax_metrics(std::vector<double> raw) {
    if (raw.empty()) throw std::invalid_argument("softmax_metrics: empty input");
    MetricVector mv;
    mv.probs.resize(raw.size());
    const double m = *std::max_element(raw.begin(), raw.end());
    double z = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        mv.probs[i] = std::exp(raw[i] - m);
        z += mv.probs[i];
    }
    for (auto& p : mv.probs) p /= z;
    mv.raw = std::move(raw);
    return mv;
}

Detection metric_per_format(const DetectorConfig& cfg, const EstimateSeq& estimates,
                            const PenaltyLut* lut) {
    if (cfg.formats.empty())
        throw std::invalid_argument("metric_per_format: no candidate formats");
    if (estimates.empty())
        throw std::invalid_argument("metric_per_format: no estimates");
    if (cfg.variant == MetricVariant::lut) {
        if (!lut) throw std::invalid_argument("metric_per_format: lut variant without a table");
        if (lut->formats != cfg.formats)
            throw std::invalid_argument("metric_per_format: lut formats disagree with config");
    }
    for (const auto& e : estimates)
        if (!(e.noise_var > 0.0))
            throw std::invalid_argument("metric_per_format: noise variance must be positive");

    std::vector<double> raw(cfg.formats.size(), 0.0);
    for (std::size_t f = 0; f < cfg.formats.size(); ++f) {
        const auto& c = constellation(cfg.formats[f]);
        const double log_m = std::log(static_cast<double>(c.size()));
        double acc = 0.0;
        for (const auto& e : estimates) {
            switch (cfg.variant) {
                case MetricVariant::plain_sum: {
                    double sum = 0.0;
                    for (const auto& p : c.points()) sum += std::norm(e.value - p);
                    acc -= sum + static_cast<double>(c.size()) * e.noise_var * log_m;
                    break;
                }
                case MetricVariant::log_sum_exp: {
                    const auto [dmin, lse] = soft_min_terms(e.value, e.noise_var, c);
                    acc += -dmin + e.noise_var * lse - e.noise_var * log_m;
                    break;
                }
                case MetricVariant::lut: {
                    double dmin = std::numeric_limits<double>::infinity();
                    for (const auto& p : c.points())
                        dmin = std::min(dmin, std::norm(e.value - p));
                    acc -= dmin + lut->lookup(e.noise_var, f);
                    break;
                }
            }
        }
        raw[f] = acc;
    }
    double mean_nv = 0.0;
    for (const auto& e : estimates) mean_nv += e.noise_var;
    mean_nv /= static_cast<double>(estimates.size());

    Detection det;
    det.format_index = pick_format(cfg.formats, raw);
    det.metrics = posterior_from(std::move(raw), mean_nv);
    return det;
}

std::vector<double> default_lut_grid() {
    std::vector<double> g(41);
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = std::pow(10.0, (-30.0 + static_cast<double>(i)) / 10.0);
    return g;
}

PenaltyLut build_penalty_lut(const std::vector<ModFormat>& formats,
                             const std::vector<double>& grid,
                             std::size_t samples_per_cell, std::uint64_t seed,
                             std::vector<std::vector<double>>* stderr_out) {
    if (formats.empty()) throw std::invalid_argument("build_penalty_lut: no formats");
    if (grid.size() < 2) throw std::invalid_argument("build_penalty_lut: grid too short");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (!(grid[i] < grid[i + 1]))
            throw std::invalid_argument("build_penalty_lut: grid must increase");
    if (samples_per_cell == 0)
        throw std::invalid_argument("build_penalty_lut: need samples");

    PenaltyLut lut;
    lut.formats = formats;
    lut.grid = grid;
    lut.samples_per_cell = samples_per_cell;
    lut.seed = seed;
    lut.table.assign(formats.size(), std::vector<double>(grid.size(), 0.0));
    if (stderr_out)
        stderr_out->assign(formats.size(), std::vector<double>(grid.size(), 0.0));

    for (std::size_t f = 0; f < formats.size(); ++f) {
        const auto& c = constellation(formats[f]);
        const double log_m = std::log(static_cast<double>(c.size()));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double nv = grid[i];
            Rng rng(mix_seed(seed, f * grid.size() + i));
            double mean = 0.0, m2 = 0.0;
            for (std::size_t s = 0; s < samples_per_cell; ++s) {
                const cxd x = c.map(rng.uniform_int(static_cast<std::uint32_t>(c.size())));
                const cxd v = x + rng.cgaussian(nv);
                const auto [dmin, lse] = soft_min_terms(v, nv, c);
                (void)dmin;
                // gap between the soft-min score and the plain nearest-point
                // score; always in [0, nv*ln M]
                const double val = nv * (log_m - lse);
                const double delta = val - mean;
                mean += delta / static_cast<double>(s + 1);
                m2 += delta * (val - mean);
            }
            lut.table[f][i] = mean;
            if (stderr_out && samples_per_cell > 1)
                (*stderr_out)[f][i] = std::sqrt(
                    m2 / static_cast<double>(samples_per_cell - 1) /
                    static_cast<double>(samples_per_cell));
        }
    }
    return lut;
}

void save_lut(const PenaltyLut& lut, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_lut: cannot open " + path);
    out.write(kLutMagic, sizeof(kLutMagic));
    write_u32(out, static_cast<std::uint32_t>(lut.formats.size()));
    write_u32(out, static_cast<std::uint32_t>(lut.grid.size()));
    for (double v : lut.grid) write_f64(out, v);
    for (const auto& row : lut.table)
        for (double v : row) write_f64(out, v);
    if (!out) throw std::runtime_error("save_lut: write failed for " + path);
}

PenaltyLut load_lut(const std::string& path, const std::vector<ModFormat>& formats) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_lut: cannot open " + path);
    char magic[sizeof(kLutMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kLutMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_lut: bad magic in " + path);
    const std::uint32_t n_formats = read_u32(in);
    const std::uint32_t n_grid = read_u32(in);
    if (n_formats != formats.size())
        throw std::runtime_error("load_lut: format count mismatch in " + path);
    PenaltyLut lut;
    lut.formats = formats;
    lut.grid.resize(n_grid);
    for (auto& v : lut.grid) v = read_f64(in);
    lut.table.assign(n_formats, std::vector<double>(n_grid));
    for (auto& row : lut.table)
        for (auto& v : row) v = read_f64(in);
    if (!in) throw std::runtime_error("load_lut: truncated file " + path);
    for (std::size_t i = 0; i + 1 < lut.grid.size(); ++i)
        if (!(lut.grid[i] < lut.grid[i + 1]))
            throw std::runtime_error("load_lut: grid not increasing in " + path);
    return lut;
}

Detection metric_full_ml(const DetectorConfig& cfg, const std::vector<MlSample>& samples,
                         double n0, ModFormat desired_format, MetricVariant variant) {
    if (cfg.formats.empty())
        throw std::invalid_argument("metric_full_ml: no candidate formats");
    if (samples.empty()) throw std::invalid_argument("metric_full_ml: no samples");
    if (!(n0 > 0.0)) throw std::invalid_argument("metric_full_ml: n0 must be positive");
    if (variant == MetricVariant::lut)
        throw std::invalid_argument("metric_full_ml: lut variant not defined here");

    const auto& c1 = constellation(desired_format);
    const std::size_t k1 = samples[0].h.cols();
    const std::size_t k2 = samples[0].g.cols();
    const double kcount = static_cast<double>(samples.size());

    // hypothesis-count guard, evaluated against the widest candidate
    for (ModFormat f : cfg.formats) {
        double hyp = std::pow(static_cast<double>(c1.size()), static_cast<double>(k1)) *
                     std::pow(static_cast<double>(order(f)), static_cast<double>(k2));
        if (hyp > static_cast<double>(1u << 20))
            throw std::invalid_argument(
                "metric_full_ml: hypothesis space too large for exhaustive search");
    }

    // enumerate layer tuples as mixed-radix counters over point labels
    auto enumerate = [](const Constellation& c, std::size_t layers) {
        std::vector<std::vector<cxd>> tuples;
        std::vector<std::uint32_t> idx(layers, 0);
        while (true) {
            std::vector<cxd> t(layers);
            for (std::size_t j = 0; j < layers; ++j) t[j] = c.map(idx[j]);
            tuples.push_back(std::move(t));
            std::size_t j = 0;
            while (j < layers && ++idx[j] == c.size()) idx[j++] = 0;
            if (j == layers) break;
        }
        return tuples;
    };
    const auto s_tuples = enumerate(c1, k1);

    std::vector<double> raw(cfg.formats.size(), 0.0);
    for (std::size_t f = 0; f < cfg.formats.size(); ++f) {
        const auto& c2 = constellation(cfg.formats[f]);
        const auto x_tuples = enumerate(c2, k2);
        const double penalty =
            kcount * n0 *
            (static_cast<double>(k1) * std::log(static_cast<double>(c1.size())) +
             static_cast<double>(k2) * std::log(static_cast<double>(c2.size())));
        double acc = 0.0;
        for (const auto& smp : samples) {
            const std::size_t n = smp.y.rows();
            // per-sample channel images of every tuple
            std::vector<std::vector<cxd>> hs(s_tuples.size(), std::vector<cxd>(n));
            for (std::size_t a = 0; a < s_tuples.size(); ++a)
                for (std::size_t i = 0; i < n; ++i) {
                    cxd v{};
                    for (std::size_t j = 0; j < k1; ++j) v += smp.h(i, j) * s_tuples[a][j];
                    hs[a][i] = v;
                }
            std::vector<std::vector<cxd>> gx(x_tuples.size(), std::vector<cxd>(n));
            for (std::size_t b = 0; b < x_tuples.size(); ++b)
                for (std::size_t i = 0; i < n; ++i) {
                    cxd v{};
                    for (std::size_t j = 0; j < k2; ++j) v += smp.g(i, j) * x_tuples[b][j];
                    gx[b][i] = v;
                }
            if (variant == MetricVariant::plain_sum) {
                double sum = 0.0;
                for (std::size_t a = 0; a < hs.size(); ++a)
                    for (std::size_t b = 0; b < gx.size(); ++b)
                        for (std::size_t i = 0; i < n; ++i)
                            sum += std::norm(smp.y(i, 0) - hs[a][i] - gx[b][i]);
                acc -= sum;
            } else {
                thread_local std::vector<double> d;
                d.resize(hs.size() * gx.size());
                double dmin = std::numeric_limits<double>::infinity();
                std::size_t t = 0;
                for (std::size_t a = 0; a < hs.size(); ++a)
                    for (std::size_t b = 0; b < gx.size(); ++b, ++t) {
                        double dd = 0.0;
                        for (std::size_t i = 0; i < n; ++i)
                            dd += std::norm(smp.y(i, 0) - hs[a][i] - gx[b][i]);
                        d[t] = dd;
                        if (dd < dmin) dmin = dd;
                    }
                double s = 0.0;
                for (double dd : d) {
                    const double u = (dd - dmin) / n0;
                    if (u < kExpCut) s += std::exp(-u);
                }
                acc += -dmin + n0 * std::log(s);
            }
        }
        raw[f] = acc - penalty;
    }
    Detection det;
    det.format_index = pick_format(cfg.formats, raw);
    det.metrics = posterior_from(std::move(raw), n0);
    return det;
}

} // namespace irx
