#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "irx/cmatrix.hpp"
#include "irx/estimate.hpp"
#include "irx/modem.hpp"

namespace irx {

// One desired user and one interferer over a flat block-fading MIMO channel.
// The noise floor is anchored at n0 = 1; SNR and INR are realized through the
// channel gains, with per-entry variance snr_lin * n0 / k1 (resp. inr / k2).
struct LinkConfig {
    std::size_t n_rx = 2;
    std::size_t k1_layers = 1;
    std::size_t k2_layers = 1;
    std::size_t block_len = 24;
    double snr_db = 10.0;
    double inr_db = 10.0;
    ModFormat desired_format = ModFormat::qpsk;
    ModFormat interference_format = ModFormat::qam16;
};

struct ChannelRealization {
    CMatrix h; // n_rx x k1
    CMatrix g; // n_rx x k2
    double n0 = 1.0;
};

struct TxBlock {
    std::vector<std::uint8_t> s_bits;
    std::vector<std::uint8_t> x_bits;
    CMatrix s_symbols; // k1 x block_len
    CMatrix x_symbols; // k2 x block_len
};

// snr_db (or inr_db) of -infinity is the "stream absent" flag: that matrix is
// all zeros. The same seed always reproduces the same realization.
ChannelRealization draw_channel(const LinkConfig& cfg, std::uint64_t seed);

// y = H s + G x + n, one noise draw per receive antenna per sample.
// n0 == 0 is the noiseless flag.
CMatrix received_samples(const ChannelRealization& chan, const CMatrix& s,
                         const CMatrix& x, std::uint64_t seed);

TxBlock make_tx_block(const LinkConfig& cfg, std::uint64_t seed);

std::pair<TxBlock, CMatrix> transmit(const LinkConfig& cfg,
                                     const ChannelRealization& chan,
                                     std::uint64_t seed);

// Detector training observations: the true symbol plus complex AWGN whose
// variance realizes the requested SNR against unit symbol energy. The noise
// variance reported alongside each draw is the exact injected one, floored at
// 1e-12 so an infinite-SNR flag stays usable downstream.
struct TrainingObservation {
    EstimateSeq estimates;
    std::vector<cxd> symbols; // the clean symbols behind each estimate
};

TrainingObservation make_training_observation(ModFormat format, double snr_db,
                                              std::size_t k_tilde,
                                              std::uint64_t seed);

} // namespace irx
