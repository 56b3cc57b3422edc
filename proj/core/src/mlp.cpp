#include "irx/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "irx/random.hpp"
#include "binio.hpp"

namespace irx {

namespace {

constexpr char kMlpMagic[7] = {'I', 'R', 'X', 'M', 'L', 'P', '1'};

void check_shapes(const MlpParams& p) {
    if (p.dims.size() < 2 || p.weights.size() != p.dims.size() - 1 ||
        p.biases.size() != p.weights.size())
        throw std::invalid_argument("mlp: inconsistent parameter shapes");
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        if (p.weights[l].size() != p.dims[l + 1] * p.dims[l] ||
            p.biases[l].size() != p.dims[l + 1])
            throw std::invalid_argument("mlp: inconsistent layer sizes");
    }
}

} // namespace

std::vector<std::size_t> default_dims(std::size_t input_dim) {
    return {input_dim, 8, 8, 4, 2};
}

MlpParams init_params(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("init_params: need two layers");
    Rng rng(seed);
    MlpParams p;
    p.dims = dims;
    p.weights.resize(dims.size() - 1);
    p.biases.resize(dims.size() - 1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        p.weights[l].resize(dims[l + 1] * dims[l]);
        for (auto& w : p.weights[l]) w = bound * (2.0 * rng.uniform() - 1.0);
        p.biases[l].assign(dims[l + 1], 0.0);
    }
    return p;
}

std::vector<double> forward(const MlpParams& p, std::span<const double> input,
                            ForwardCache* cache) {
    check_shapes(p);
    if (input.size() != p.dims[0])
        throw std::invalid_argument("forward: input width mismatch");
    std::vector<double> act(input.begin(), input.end());
    if (cache) {
        cache->inputs.assign(p.layer_count(), {});
        cache->pre_acts.assign(p.layer_count(), {});
    }
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        const std::size_t rows = p.dims[l + 1];
        const std::size_t cols = p.dims[l];
        if (cache) cache->inputs[l] = act;
        std::vector<double> z(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            double v = p.biases[l][i];
            const double* w = p.weights[l].data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j) v += w[j] * act[j];
            z[i] = v;
        }
        if (cache) cache->pre_acts[l] = z;
        if (l + 1 < p.layer_count())
            for (auto& v : z) v = v > 0.0 ? v : 0.0;
        act = std::move(z);
    }
    return act;
}

double softmax_loss(std::span<const double> logits, int label) {
    if (logits.size() != 2 || (label != 0 && label != 1))
        throw std::invalid_argument("softmax_loss: want two logits and a 0/1 label");
    // -eta_label + ln(e^eta0 + e^eta1), stabilized around the larger logit
    const double m = logits[0] > logits[1] ? logits[0] : logits[1];
    const double lse =
        m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
    return lse - logits[label];
}

MlpGrads backward(const MlpParams& p, const ForwardCache& cache, int label) {
    check_shapes(p);
    if (cache.inputs.size() != p.layer_count())
        throw std::invalid_argument("backward: cache does not match params");
    MlpGrads g = zero_grads(p);
    const auto& logits = cache.pre_acts.back();
    const double m = logits[0] > logits[1] ? logits[0] : logits[1];
    const double e0 = std::exp(logits[0] - m);
    const double e1 = std::exp(logits[1] - m);
    std::vector<double> delta = {e0 / (e0 + e1), e1 / (e0 + e1)};
    delta[static_cast<std::size_t>(label)] -= 1.0;

    for (std::size_t l = p.layer_count(); l-- > 0;) {
        const std::size_t rows = p.dims[l + 1];
        const std::size_t cols = p.dims[l];
        const auto& in = cache.inputs[l];
        for (std::size_t i = 0; i < rows; ++i) {
            g.biases[l][i] = delta[i];
            double* gw = g.weights[l].data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j) gw[j] = delta[i] * in[j];
        }
        if (l == 0) break;
        std::vector<double> prev(cols, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            const double* w = p.weights[l].data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j) prev[j] += w[j] * delta[i];
        }
        // gate through the previous layer's ReLU; exact zeros pass nothing
        for (std::size_t j = 0; j < cols; ++j)
            if (!(cache.pre_acts[l - 1][j] > 0.0)) prev[j] = 0.0;
        delta = std::move(prev);
    }
    return g;
}

MlpGrads zero_grads(const MlpParams& p) {
    MlpGrads g;
    g.weights.resize(p.layer_count());
    g.biases.resize(p.layer_count());
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        g.weights[l].assign(p.weights[l].size(), 0.0);
        g.biases[l].assign(p.biases[l].size(), 0.0);
    }
    return g;
}

void accumulate(MlpGrads& into, const MlpGrads& g) {
    for (std::size_t l = 0; l < into.weights.size(); ++l) {
        for (std::size_t i = 0; i < into.weights[l].size(); ++i)
            into.weights[l][i] += g.weights[l][i];
        for (std::size_t i = 0; i < into.biases[l].size(); ++i)
            into.biases[l][i] += g.biases[l][i];
    }
}

void scale(MlpGrads& g, double s) {
    for (auto& layer : g.weights)
        for (auto& v : layer) v *= s;
    for (auto& layer : g.biases)
        for (auto& v : layer) v *= s;
}

void sgd_step(MlpParams& p, const MlpGrads& g, double lr) {
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        for (std::size_t i = 0; i < p.weights[l].size(); ++i)
            p.weights[l][i] -= lr * g.weights[l][i];
        for (std::size_t i = 0; i < p.biases[l].size(); ++i)
            p.biases[l][i] -= lr * g.biases[l][i];
    }
}

std::pair<MlpParams, LossTrace> train(const TrainConfig& cfg,
                                      std::span<const TrainSample> samples) {
    if (cfg.batch_size == 0 || cfg.total_samples < cfg.batch_size)
        throw std::invalid_argument("train: bad batch configuration");
    const std::size_t iterations = cfg.total_samples / cfg.batch_size;
    if (samples.size() < iterations * cfg.batch_size)
        throw std::invalid_argument("train: sample stream exhausted");
    const std::size_t input_dim = samples[0].mu.size();

    MlpParams p = init_params(default_dims(input_dim), cfg.init_seed);
    LossTrace trace;
    trace.batch_loss.reserve(iterations);
    trace.smoothed.reserve(iterations);
    double window_sum = 0.0;
    constexpr std::size_t kWindow = 1000;

    ForwardCache cache;
    for (std::size_t it = 0; it < iterations; ++it) {
        MlpGrads batch = zero_grads(p);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            const auto& smp = samples[it * cfg.batch_size + b];
            const auto logits = forward(p, smp.mu, &cache);
            loss_sum += softmax_loss(logits, smp.label);
            accumulate(batch, backward(p, cache, smp.label));
        }
        scale(batch, 1.0 / static_cast<double>(cfg.batch_size));
        sgd_step(p, batch, cfg.learning_rate);

        const double loss = loss_sum / static_cast<double>(cfg.batch_size);
        trace.batch_loss.push_back(loss);
        window_sum += loss;
        if (trace.batch_loss.size() > kWindow)
            window_sum -= trace.batch_loss[trace.batch_loss.size() - 1 - kWindow];
        const std::size_t n =
            trace.batch_loss.size() < kWindow ? trace.batch_loss.size() : kWindow;
        trace.smoothed.push_back(window_sum / static_cast<double>(n));
    }
    return {std::move(p), std::move(trace)};
}

void save_mlp(const MlpParams& p, const std::string& path) {
    check_shapes(p);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_mlp: cannot open " + path);
    out.write(kMlpMagic, sizeof(kMlpMagic));
    write_u32(out, static_cast<std::uint32_t>(p.layer_count()));
    for (std::size_t d : p.dims) write_u32(out, static_cast<std::uint32_t>(d));
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        for (double w : p.weights[l]) write_f64(out, w);
        for (double b : p.biases[l]) write_f64(out, b);
    }
    if (!out) throw std::runtime_error("save_mlp: write failed for " + path);
}

MlpParams load_mlp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_mlp: cannot open " + path);
    char magic[sizeof(kMlpMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMlpMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_mlp: bad magic in " + path);
    const std::uint32_t layers = read_u32(in);
    if (layers == 0 || layers > 64)
        throw std::runtime_error("load_mlp: implausible layer count in " + path);
    MlpParams p;
    p.dims.resize(layers + 1);
    for (auto& d : p.dims) d = read_u32(in);
    p.weights.resize(layers);
    p.biases.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        p.weights[l].resize(p.dims[l + 1] * p.dims[l]);
        for (auto& w : p.weights[l]) w = read_f64(in);
        p.biases[l].resize(p.dims[l + 1]);
        for (auto& b : p.biases[l]) b = read_f64(in);
    }
    if (!in) throw std::runtime_error("load_mlp: truncated file " + path);
    check_shapes(p);
    return p;
}

} // namespace irx
