#include "irx/fallback.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace irx {

CostMatrix::CostMatrix(std::size_t m_formats, double off_diagonal,
                       double fallback_cost)
    : m_(m_formats), c_(m_formats * (m_formats + 1), off_diagonal) {
    if (m_formats == 0) throw std::invalid_argument("CostMatrix: zero formats");
    for (std::size_t m = 0; m < m_; ++m) {
        at(m, m) = 0.0;
        at(m, m_) = fallback_cost;
    }
}

void save_costs(const CostMatrix& costs, const std::string& path,
                const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_costs: cannot open " + path);
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    const std::size_t m = costs.formats();
    out.precision(17);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= m; ++j) {
            if (j) out << ' ';
            out << costs.at(i, j);
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("save_costs: write failed for " + path);
}

CostMatrix load_costs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_costs: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("load_costs: no data in " + path);
    const std::size_t m = rows.size();
    CostMatrix costs(m, 0.0, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        if (rows[i].size() != m + 1)
            throw std::runtime_error("load_costs: ragged grid in " + path);
        for (std::size_t j = 0; j <= m; ++j) {
            if (!(rows[i][j] >= 0.0))
                throw std::runtime_error("load_costs: negative cost in " + path);
            costs.at(i, j) = rows[i][j];
        }
        if (costs.at(i, i) != 0.0)
            throw std::runtime_error("load_costs: correct decisions must cost zero in " +
                                     path);
    }
    return costs;
}

FallbackDecision bayes_decide(const CostMatrix& costs, const MetricVector& mv) {
    const std::size_t m = costs.formats();
    if (mv.probs.size() != m)
        throw std::invalid_argument("bayes_decide: probability width mismatch");
    FallbackDecision d;
    d.scores.resize(m + 1);
    for (std::size_t n = 0; n <= m; ++n) {
        double risk = 0.0;
        for (std::size_t t = 0; t < m; ++t) risk += costs.at(t, n) * mv.probs[t];
        d.scores[n] = risk;
    }
    std::size_t best = 0;
    for (std::size_t n = 1; n <= m; ++n)
        if (d.scores[n] < d.scores[best]) best = n;
    d.chosen_hypothesis = best;
    d.fall_back = best == m;
    return d;
}

FallbackDecision dnn_decide(const MlpParams& p, const MetricVector& mv) {
    FallbackDecision d;
    d.scores = forward(p, mv.probs);
    d.fall_back = d.scores[1] > d.scores[0];
    if (d.fall_back) {
        d.chosen_hypothesis = mv.probs.size();
    } else {
        d.chosen_hypothesis = static_cast<std::size_t>(
            std::max_element(mv.probs.begin(), mv.probs.end()) - mv.probs.begin());
    }
    return d;
}

namespace {

// Post-decision error rate of the threshold family: counts a miss whenever
// the policy keeps a wrong detection or discards a right one.
double error_rate_at(double theta, std::span<const TrainSample> validation) {
    std::size_t bad = 0;
    for (const auto& s : validation) {
        const double max_p = *std::max_element(s.mu.begin(), s.mu.end());
        const bool fall = theta < 1.0 - max_p;
        if ((fall && s.label == 0) || (!fall && s.label == 1)) ++bad;
    }
    return static_cast<double>(bad) / static_cast<double>(validation.size());
}

} // namespace

CostMatrix optimize_costs(std::span<const TrainSample> validation,
                          double theta_min, double theta_max) {
    if (validation.empty())
        throw std::invalid_argument("optimize_costs: empty validation set");
    if (!(theta_min < theta_max))
        throw std::invalid_argument("optimize_costs: bad bracket");

    // coarse scan; ties keep the smallest theta
    constexpr std::size_t kScan = 64;
    double best_theta = theta_min;
    double best_err = error_rate_at(theta_min, validation);
    for (std::size_t i = 1; i <= kScan; ++i) {
        const double t = theta_min + (theta_max - theta_min) *
                                         static_cast<double>(i) /
                                         static_cast<double>(kScan);
        const double e = error_rate_at(t, validation);
        if (e < best_err) {
            best_err = e;
            best_theta = t;
        }
    }

    // golden-section refinement inside the bracketing cells; the objective is
    // piecewise constant, so only accept a strict improvement
    const double step = (theta_max - theta_min) / static_cast<double>(kScan);
    double lo = std::max(theta_min, best_theta - step);
    double hi = std::min(theta_max, best_theta + step);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - phi * (hi - lo);
    double b = lo + phi * (hi - lo);
    double fa = error_rate_at(a, validation);
    double fb = error_rate_at(b, validation);
    for (int it = 0; it < 48; ++it) {
        if (fa <= fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = error_rate_at(a, validation);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = error_rate_at(b, validation);
        }
    }
    const double refined = fa <= fb ? a : b;
    const double refined_err = std::min(fa, fb);
    if (refined_err < best_err) best_theta = refined;

    const std::size_t m = validation[0].mu.size();
    return CostMatrix(m, 1.0, best_theta);
}

double empirical_bayes_risk(
    const CostMatrix& costs,
    std::span<const std::pair<std::size_t, std::size_t>> decisions) {
    if (decisions.empty())
        throw std::invalid_argument("empirical_bayes_risk: no decisions");
    double acc = 0.0;
    for (const auto& [truth, decided] : decisions) acc += costs.at(truth, decided);
    return acc / static_cast<double>(decisions.size());
}

} // namespace irx
