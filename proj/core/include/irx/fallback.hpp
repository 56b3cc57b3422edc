#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "irx/format_detect.hpp"
#include "irx/mlp.hpp"

namespace irx {

// Decision costs over M format hypotheses plus one extra column for the
// bail-out hypothesis. Correct format decisions cost zero by construction.
class CostMatrix {
public:
    CostMatrix(std::size_t m_formats, double off_diagonal, double fallback_cost);

    std::size_t formats() const { return m_; }
    double at(std::size_t true_format, std::size_t decided) const {
        return c_[true_format * (m_ + 1) + decided];
    }
    double& at(std::size_t true_format, std::size_t decided) {
        return c_[true_format * (m_ + 1) + decided];
    }

private:
    std::size_t m_;
    std::vector<double> c_;
};

void save_costs(const CostMatrix& costs, const std::string& path,
                const std::string& header_comment);
CostMatrix load_costs(const std::string& path);

struct FallbackDecision {
    bool fall_back;
    std::size_t chosen_hypothesis; // format index, or formats() for bail-out
    std::vector<double> scores;    // posterior risks, or the two logits
};

// Minimum posterior risk over all hypotheses including bail-out; exact ties
// go to the smallest hypothesis index.
FallbackDecision bayes_decide(const CostMatrix& costs, const MetricVector& mv);

// Network vote on the detector's probability vector; a logit tie keeps the
// detector's answer.
FallbackDecision dnn_decide(const MlpParams& p, const MetricVector& mv);

// Calibrate the shared bail-out cost on labeled validation data: off-diagonal
// costs stay at one, and the single bail-out column value is chosen in
// [theta_min, theta_max] to minimize the empirical post-decision error rate
// (a coarse scan bracketing a golden-section refinement).
CostMatrix optimize_costs(std::span<const TrainSample> validation,
                          double theta_min = 0.0, double theta_max = 2.0);

// Average decision cost of (true format, decided hypothesis) pairs.
double empirical_bayes_risk(const CostMatrix& costs,
                            std::span<const std::pair<std::size_t, std::size_t>> decisions);

} // namespace irx
