#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "irx/mlp.hpp"
#include "irx/random.hpp"

using irx::MlpParams;

namespace {

// plain re-implementation of the forward pass used as the oracle
std::vector<double> oracle_forward(const MlpParams& p, const std::vector<double>& in) {
    std::vector<double> z = in;
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        const std::size_t rows = p.dims[l + 1];
        const std::size_t cols = p.dims[l];
        std::vector<double> next(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            double acc = p.biases[l][i];
            for (std::size_t j = 0; j < cols; ++j)
                acc += p.weights[l][i * cols + j] * z[j];
            next[i] = acc;
        }
        if (l + 1 < p.layer_count())
            for (auto& v : next) v = v > 0.0 ? v : 0.0;
        z = std::move(next);
    }
    return z;
}

double loss_of(const MlpParams& p, const std::vector<double>& in, int label) {
    return irx::softmax_loss(irx::forward(p, in), label);
}

} // namespace

TEST_CASE("default dims and deterministic initialization") {
    auto dims = irx::default_dims(4);
    REQUIRE(dims == std::vector<std::size_t>{4, 8, 8, 4, 2});
    auto a = irx::init_params(dims, 3);
    auto b = irx::init_params(dims, 3);
    CHECK(a.weights == b.weights);
    auto c = irx::init_params(dims, 4);
    CHECK(a.weights != c.weights);
    for (const auto& bias : a.biases)
        for (double v : bias) CHECK(v == 0.0);
    for (std::size_t l = 0; l < a.layer_count(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        for (double w : a.weights[l]) CHECK(std::abs(w) <= bound);
    }
}

TEST_CASE("initial weight variance matches the uniform law") {
    // one wide layer so the moment estimate is tight
    auto p = irx::init_params({100, 100}, 11);
    double acc = 0.0;
    for (double w : p.weights[0]) acc += w * w;
    const double var = acc / static_cast<double>(p.weights[0].size());
    CHECK(var == doctest::Approx(2.0 / 200.0).epsilon(0.1));
}

TEST_CASE("forward pass matches an independent evaluation") {
    irx::Rng rng(21);
    auto p = irx::init_params(irx::default_dims(4), 5);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> in(4);
        for (auto& v : in) v = rng.gaussian();
        auto got = irx::forward(p, in);
        auto want = oracle_forward(p, in);
        REQUIRE(got.size() == 2);
        CHECK(got[0] == doctest::Approx(want[0]).epsilon(1e-12));
        CHECK(got[1] == doctest::Approx(want[1]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(irx::forward(p, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("softmax loss closed forms") {
    // equal logits: loss is ln 2 for either label
    CHECK(irx::softmax_loss(std::vector<double>{0.3, 0.3}, 0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(irx::softmax_loss(std::vector<double>{0.3, 0.3}, 1) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // logit gap g: loss(correct side) = ln(1 + exp(-g))
    const double g = 3.0;
    CHECK(irx::softmax_loss(std::vector<double>{g, 0.0}, 0) ==
          doctest::Approx(std::log1p(std::exp(-g))).epsilon(1e-12));
    CHECK(irx::softmax_loss(std::vector<double>{g, 0.0}, 1) ==
          doctest::Approx(g + std::log1p(std::exp(-g))).epsilon(1e-12));
    // huge gap: no overflow, tiny loss on the backed side
    CHECK(irx::softmax_loss(std::vector<double>{1000.0, 0.0}, 0) < 1e-100);
    CHECK(irx::softmax_loss(std::vector<double>{1000.0, 0.0}, 1) ==
          doctest::Approx(1000.0).epsilon(1e-12));
    CHECK_THROWS_AS(irx::softmax_loss(std::vector<double>{1.0, 2.0}, 2),
                    std::invalid_argument);
}

TEST_CASE("backward matches finite differences") {
    irx::Rng rng(31);
    auto p = irx::init_params(irx::default_dims(4), 77);
    const double eps = 1e-6;
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> in(4);
        for (auto& v : in) v = 0.25 + 0.5 * rng.uniform();
        const int label = static_cast<int>(rng.uniform_int(2));
        irx::ForwardCache cache;
        irx::forward(p, in, &cache);
        auto g = irx::backward(p, cache, label);
        for (std::size_t l = 0; l < p.layer_count(); ++l) {
            // spot-check a handful of coordinates per layer
            for (int probe = 0; probe < 6; ++probe) {
                const std::size_t wi = rng.uniform_int(
                    static_cast<std::uint32_t>(p.weights[l].size()));
                auto plus = p;
                plus.weights[l][wi] += eps;
                auto minus = p;
                minus.weights[l][wi] -= eps;
                const double fd =
                    (loss_of(plus, in, label) - loss_of(minus, in, label)) / (2 * eps);
                CHECK(std::abs(g.weights[l][wi] - fd) < 1e-5);
            }
            const std::size_t bi = rng.uniform_int(
                static_cast<std::uint32_t>(p.biases[l].size()));
            auto plus = p;
            plus.biases[l][bi] += eps;
            auto minus = p;
            minus.biases[l][bi] -= eps;
            const double fd =
                (loss_of(plus, in, label) - loss_of(minus, in, label)) / (2 * eps);
            CHECK(std::abs(g.biases[l][bi] - fd) < 1e-5);
        }
    }
}

TEST_CASE("gradient helpers") {
    auto p = irx::init_params({2, 3, 2}, 1);
    auto z = irx::zero_grads(p);
    for (const auto& w : z.weights)
        for (double v : w) CHECK(v == 0.0);
    irx::ForwardCache cache;
    irx::forward(p, std::vector<double>{0.4, 0.6}, &cache);
    auto g = irx::backward(p, cache, 0);
    auto acc = irx::zero_grads(p);
    irx::accumulate(acc, g);
    irx::accumulate(acc, g);
    irx::scale(acc, 0.5);
    for (std::size_t l = 0; l < g.weights.size(); ++l)
        for (std::size_t i = 0; i < g.weights[l].size(); ++i)
            CHECK(acc.weights[l][i] == doctest::Approx(g.weights[l][i]).epsilon(1e-15));

    auto before = p;
    irx::sgd_step(p, g, 0.1);
    for (std::size_t l = 0; l < g.weights.size(); ++l)
        for (std::size_t i = 0; i < g.weights[l].size(); ++i)
            CHECK(p.weights[l][i] ==
                  doctest::Approx(before.weights[l][i] - 0.1 * g.weights[l][i])
                      .epsilon(1e-15));
}

TEST_CASE("one training iteration equals a manual batch step") {
    irx::TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.total_samples = 16; // exactly one iteration
    cfg.init_seed = 9;
    cfg.learning_rate = 0.01;

    irx::Rng rng(17);
    std::vector<irx::TrainSample> samples(16);
    for (auto& s : samples) {
        s.mu.resize(4);
        double z = 0.0;
        for (auto& v : s.mu) {
            v = rng.uniform() + 1e-3;
            z += v;
        }
        for (auto& v : s.mu) v /= z;
        s.label = static_cast<int>(rng.uniform_int(2));
    }

    auto [trained, trace] = irx::train(cfg, samples);
    REQUIRE(trace.batch_loss.size() == 1);
    REQUIRE(trace.smoothed.size() == 1);
    CHECK(trace.smoothed[0] == trace.batch_loss[0]);

    auto manual = irx::init_params(irx::default_dims(4), 9);
    auto acc = irx::zero_grads(manual);
    double loss_acc = 0.0;
    for (const auto& s : samples) {
        irx::ForwardCache cache;
        auto logits = irx::forward(manual, s.mu, &cache);
        loss_acc += irx::softmax_loss(logits, s.label);
        irx::accumulate(acc, irx::backward(manual, cache, s.label));
    }
    irx::scale(acc, 1.0 / 16.0);
    irx::sgd_step(manual, acc, cfg.learning_rate);

    CHECK(trace.batch_loss[0] == doctest::Approx(loss_acc / 16.0).epsilon(1e-12));
    for (std::size_t l = 0; l < manual.layer_count(); ++l)
        for (std::size_t i = 0; i < manual.weights[l].size(); ++i)
            CHECK(trained.weights[l][i] ==
                  doctest::Approx(manual.weights[l][i]).epsilon(1e-12));
}

TEST_CASE("training drives the loss down on a separable synthetic problem") {
    // label 1 iff the first input coordinate is below one half
    irx::Rng rng(23);
    std::vector<irx::TrainSample> samples(64000);
    for (auto& s : samples) {
        s.mu.assign(4, 0.0);
        const double x = rng.uniform();
        s.mu[0] = x;
        s.mu[1] = 1.0 - x;
        s.mu[2] = 0.5 * rng.uniform();
        s.mu[3] = 1.0 - s.mu[2];
        s.label = x < 0.5 ? 1 : 0;
    }
    irx::TrainConfig cfg;
    cfg.total_samples = samples.size();
    cfg.init_seed = 2;
    auto [p, trace] = irx::train(cfg, samples);
    REQUIRE(trace.batch_loss.size() == samples.size() / cfg.batch_size);
    const auto& sm = trace.smoothed;
    CHECK(sm.back() < 0.3 * sm.front());
    CHECK(sm.back() < 0.1);

    // the trained net separates fresh points decisively
    int correct = 0;
    const int probes = 1000;
    for (int i = 0; i < probes; ++i) {
        const double x = rng.uniform();
        auto logits = irx::forward(p, std::vector<double>{x, 1.0 - x, 0.25, 0.75});
        const int pred = logits[1] > logits[0] ? 1 : 0;
        correct += pred == (x < 0.5 ? 1 : 0);
    }
    CHECK(correct > probes * 95 / 100);
}

TEST_CASE("train validates the sample budget") {
    irx::TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.total_samples = 32;
    std::vector<irx::TrainSample> samples(31, {{0.25, 0.25, 0.25, 0.25}, 0});
    CHECK_THROWS_AS(irx::train(cfg, samples), std::invalid_argument);
}

TEST_CASE("smoothed loss is the trailing-window mean") {
    irx::Rng rng(41);
    std::vector<irx::TrainSample> samples(16 * 40);
    for (auto& s : samples) {
        s.mu.assign(4, 0.25);
        s.mu[0] += 0.1 * rng.gaussian();
        double z = 0.0;
        for (double v : s.mu) z += v;
        for (auto& v : s.mu) v /= z;
        s.label = static_cast<int>(rng.uniform_int(2));
    }
    irx::TrainConfig cfg;
    cfg.total_samples = samples.size();
    auto [p, trace] = irx::train(cfg, samples);
    REQUIRE(trace.batch_loss.size() == 40);
    for (std::size_t i = 0; i < 40; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= i; ++j) acc += trace.batch_loss[j];
        CHECK(trace.smoothed[i] ==
              doctest::Approx(acc / static_cast<double>(i + 1)).epsilon(1e-12));
    }
}

TEST_CASE("parameter file round trip") {
    auto p = irx::init_params(irx::default_dims(4), 123);
    const auto path =
        (std::filesystem::temp_directory_path() / "irx_mlp_roundtrip.bin").string();
    irx::save_mlp(p, path);
    auto back = irx::load_mlp(path);
    CHECK(back.dims == p.dims);
    CHECK(back.weights == p.weights);
    CHECK(back.biases == p.biases);
    CHECK_THROWS_AS(irx::load_mlp("/nonexistent/mlp.bin"), std::runtime_error);
    std::remove(path.c_str());
}
