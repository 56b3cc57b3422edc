#include "irx/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "irx/random.hpp"

namespace irx {

namespace {

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

CMatrix draw_gain_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                         double level_db, double n0, std::size_t layers) {
    CMatrix m(rows, cols);
    if (level_db == -std::numeric_limits<double>::infinity()) return m;
    const double var = db_to_lin(level_db) * n0 / static_cast<double>(layers);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.cgaussian(var);
    return m;
}

std::vector<std::uint8_t> draw_bits(Rng& rng, std::size_t n) {
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    return bits;
}

CMatrix to_layer_matrix(const std::vector<cxd>& syms, std::size_t layers,
                        std::size_t block_len) {
    CMatrix m(layers, block_len);
    for (std::size_t j = 0; j < layers; ++j)
        for (std::size_t k = 0; k < block_len; ++k) m(j, k) = syms[j * block_len + k];
    return m;
}

} // namespace

ChannelRealization draw_channel(const LinkConfig& cfg, std::uint64_t seed) {
    if (cfg.n_rx == 0 || cfg.k1_layers == 0 || cfg.k2_layers == 0)
        throw std::invalid_argument("draw_channel: zero dimension");
    Rng rng(seed);
    ChannelRealization chan;
    chan.n0 = 1.0;
    chan.h = draw_gain_matrix(rng, cfg.n_rx, cfg.k1_layers, cfg.snr_db, chan.n0,
                              cfg.k1_layers);
    chan.g = draw_gain_matrix(rng, cfg.n_rx, cfg.k2_layers, cfg.inr_db, chan.n0,
                              cfg.k2_layers);
    return chan;
}

CMatrix received_samples(const ChannelRealization& chan, const CMatrix& s,
                         const CMatrix& x, std::uint64_t seed) {
    if (s.cols() != x.cols())
        throw std::invalid_argument("received_samples: block length mismatch");
    if (chan.h.cols() != s.rows() || chan.g.cols() != x.rows())
        throw std::invalid_argument("received_samples: layer count mismatch");
    CMatrix y = chan.h * s + chan.g * x;
    if (chan.n0 > 0.0) {
        Rng rng(seed);
        for (std::size_t k = 0; k < y.cols(); ++k)
            for (std::size_t i = 0; i < y.rows(); ++i)
                y(i, k) += rng.cgaussian(chan.n0);
    }
    return y;
}

TxBlock make_tx_block(const LinkConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    const auto& cs = constellation(cfg.desired_format);
    const auto& cx = constellation(cfg.interference_format);
    TxBlock blk;
    blk.s_bits = draw_bits(rng, cfg.k1_layers * cfg.block_len * cs.bits());
    blk.x_bits = draw_bits(rng, cfg.k2_layers * cfg.block_len * cx.bits());
    blk.s_symbols = to_layer_matrix(modulate(blk.s_bits, cs), cfg.k1_layers, cfg.block_len);
    blk.x_symbols = to_layer_matrix(modulate(blk.x_bits, cx), cfg.k2_layers, cfg.block_len);
    return blk;
}

std::pair<TxBlock, CMatrix> transmit(const LinkConfig& cfg,
                                     const ChannelRealization& chan,
                                     std::uint64_t seed) {
    TxBlock blk = make_tx_block(cfg, mix_seed(seed, 0));
    CMatrix y = received_samples(chan, blk.s_symbols, blk.x_symbols, mix_seed(seed, 1));
    return {std::move(blk), std::move(y)};
}

TrainingObservation make_training_observation(ModFormat format, double snr_db,
                                              std::size_t k_tilde,
                                              std::uint64_t seed) {
    Rng rng(seed);
    const auto& c = constellation(format);
    const bool noiseless = snr_db == std::numeric_limits<double>::infinity();
    const double sigma2 = noiseless ? 0.0 : db_to_lin(-snr_db);
    const double reported = sigma2 > 1e-12 ? sigma2 : 1e-12;
    TrainingObservation obs;
    obs.estimates.resize(k_tilde);
    obs.symbols.resize(k_tilde);
    for (std::size_t k = 0; k < k_tilde; ++k) {
        const cxd sym = c.map(rng.uniform_int(static_cast<std::uint32_t>(c.size())));
        cxd v = sym;
        if (!noiseless) v += rng.cgaussian(sigma2);
        obs.symbols[k] = sym;
        obs.estimates[k] = {v, reported};
    }
    return obs;
}

} // namespace irx
