// Microbenchmarks for the hot paths of the receive chain: equalization,
// interference cancellation, format detection, network training steps, and
// soft-decision decoding.

#include <benchmark/benchmark.h>

#include <vector>

#include "irx/channel.hpp"
#include "irx/convcode.hpp"
#include "irx/experiments.hpp"
#include "irx/fallback.hpp"
#include "irx/format_detect.hpp"
#include "irx/mlp.hpp"
#include "irx/modem.hpp"
#include "irx/random.hpp"
#include "irx/receivers.hpp"

namespace {

struct BlockFixture {
    irx::LinkConfig link;
    irx::ChannelRealization chan;
    irx::TxBlock blk;
    irx::CMatrix y;

    explicit BlockFixture(std::size_t block_len) {
        link.block_len = block_len;
        chan = irx::draw_channel(link, 1);
        auto tx = irx::transmit(link, chan, 2);
        blk = std::move(tx.first);
        y = std::move(tx.second);
    }
};

void BM_AwareEqualizer(benchmark::State& state) {
    BlockFixture fx(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto eq = irx::eirc(fx.chan, fx.y);
        benchmark::DoNotOptimize(eq.s_tilde);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AwareEqualizer)->Arg(24)->Arg(294);

void BM_CancelingEqualizer(benchmark::State& state) {
    BlockFixture fx(static_cast<std::size_t>(state.range(0)));
    irx::Artifacts art;
    const auto an = irx::analyze_block(fx.link, fx.chan, fx.y, art);
    const auto& cx = irx::constellation(fx.link.interference_format);
    for (auto _ : state) {
        auto out =
            irx::slic(fx.chan, fx.y, irx::refine_with_format(an.xi, cx));
        benchmark::DoNotOptimize(out.s_tilde);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CancelingEqualizer)->Arg(24)->Arg(294);

void BM_FormatMetrics(benchmark::State& state) {
    irx::DetectorConfig det;
    const auto obs = irx::make_training_observation(irx::ModFormat::qam16,
                                                    10.0, det.k_tilde, 3);
    for (auto _ : state) {
        auto d = irx::metric_per_format(det, obs.estimates);
        benchmark::DoNotOptimize(d.metrics.probs);
    }
    state.SetItemsProcessed(state.iterations() * det.k_tilde);
}
BENCHMARK(BM_FormatMetrics);

void BM_FullBlockPipeline(benchmark::State& state) {
    BlockFixture fx(24);
    irx::Artifacts art;
    for (auto _ : state) {
        auto out = irx::run_block(fx.link, fx.chan, fx.y, irx::Policy::genie,
                                  art);
        benchmark::DoNotOptimize(out.final_eq.s_tilde);
    }
}
BENCHMARK(BM_FullBlockPipeline);

void BM_NetworkForward(benchmark::State& state) {
    const auto p = irx::init_params(irx::default_dims(4), 7);
    const std::vector<double> mu{0.55, 0.25, 0.15, 0.05};
    for (auto _ : state) {
        auto logits = irx::forward(p, mu);
        benchmark::DoNotOptimize(logits);
    }
}
BENCHMARK(BM_NetworkForward);

void BM_NetworkTrainBatch(benchmark::State& state) {
    auto p = irx::init_params(irx::default_dims(4), 7);
    irx::Rng rng(11);
    std::vector<irx::TrainSample> batch(16);
    for (auto& s : batch) {
        std::vector<double> raw(4);
        for (auto& v : raw) v = rng.gaussian();
        s.mu = irx::softmax_metrics(raw).probs;
        s.label = static_cast<int>(rng.next_u64() & 1u);
    }
    for (auto _ : state) {
        auto grads = irx::zero_grads(p);
        for (const auto& s : batch) {
            irx::ForwardCache cache;
            irx::forward(p, s.mu, &cache);
            irx::accumulate(grads, irx::backward(p, cache, s.label));
        }
        irx::scale(grads, 1.0 / 16.0);
        irx::sgd_step(p, grads, 0.01);
        benchmark::DoNotOptimize(p.weights);
    }
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_NetworkTrainBatch);

void BM_SoftDecisionDecode(benchmark::State& state) {
    irx::Rng rng(5);
    std::vector<std::uint8_t> info(irx::kConvBlockInfoBits);
    for (auto& b : info) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    const auto coded = irx::conv_encode(info);
    const auto& cs = irx::constellation(irx::ModFormat::qpsk);
    auto syms = irx::modulate(coded, cs);
    for (auto& s : syms) s += rng.cgaussian(0.5);
    const auto llrs = irx::bit_llrs(syms, 0.5, cs);
    for (auto _ : state) {
        auto bits = irx::viterbi_decode(llrs);
        benchmark::DoNotOptimize(bits);
    }
    state.SetItemsProcessed(state.iterations() * irx::kConvBlockInfoBits);
}
BENCHMARK(BM_SoftDecisionDecode);

}  // namespace

BENCHMARK_MAIN();
