#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace irx {

// Small fully-connected network trained to predict whether the format
// detector got a block right. Input is the detector's probability vector,
// output is two logits: index 0 backs the detector, index 1 votes to bail
// out to the non-canceling receiver.
struct MlpParams {
    std::vector<std::size_t> dims;             // layer widths, input first
    std::vector<std::vector<double>> weights;  // weights[l]: dims[l+1] x dims[l], row-major
    std::vector<std::vector<double>> biases;   // biases[l]: dims[l+1]

    std::size_t layer_count() const { return weights.size(); }
};

// Same storage layout as the parameters; kept separate for clarity at call
// sites that average and scale gradients.
struct MlpGrads {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

// hidden widths used throughout: input -> 8 -> 8 -> 4 -> 2
std::vector<std::size_t> default_dims(std::size_t input_dim);

// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases, deterministic.
MlpParams init_params(const std::vector<std::size_t>& dims, std::uint64_t seed);

struct ForwardCache {
    std::vector<std::vector<double>> inputs;   // activation entering each layer
    std::vector<std::vector<double>> pre_acts; // affine outputs per layer
};

// ReLU after every layer except the last. Returns the output logits.
std::vector<double> forward(const MlpParams& p, std::span<const double> input,
                            ForwardCache* cache = nullptr);

// two-class softmax cross entropy on the logits
double softmax_loss(std::span<const double> logits, int label);

// Exact gradients for softmax_loss(forward(input), label); the ReLU
// subgradient at zero is taken as zero.
MlpGrads backward(const MlpParams& p, const ForwardCache& cache, int label);

MlpGrads zero_grads(const MlpParams& p);
void accumulate(MlpGrads& into, const MlpGrads& g);
void scale(MlpGrads& g, double s);

// plain gradient step w <- w - lr * g
void sgd_step(MlpParams& p, const MlpGrads& g, double lr);

struct TrainSample {
    std::vector<double> mu; // detector probability vector
    int label;              // 0: detector was right, 1: it was wrong
};

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 16;
    std::size_t total_samples = 640000;
    std::uint64_t init_seed = 1;
};

struct LossTrace {
    std::vector<double> batch_loss;
    std::vector<double> smoothed; // trailing window of up to 1000 batches
};

// Consumes the samples in order, one batch per iteration, for
// total_samples / batch_size iterations. Throws if the set is too small.
std::pair<MlpParams, LossTrace> train(const TrainConfig& cfg,
                                      std::span<const TrainSample> samples);

void save_mlp(const MlpParams& p, const std::string& path);
MlpParams load_mlp(const std::string& path);

} // namespace irx
