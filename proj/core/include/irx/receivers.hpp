#pragma once

#include <vector>

#include "irx/channel.hpp"
#include "irx/cmatrix.hpp"
#include "irx/modem.hpp"

namespace irx {

// Output of a linear equalizer: one soft symbol per desired layer per sample,
// plus the per-layer estimation error variance of the underlying MMSE filter.
struct EqualizedBlock {
    CMatrix s_tilde;                    // k1 x block_len
    std::vector<double> per_layer_noise; // k1 entries, > 0
};

// Linear estimate of the interference stream. c_x holds the diagonal of the
// residual covariance used by the canceling receiver; fresh estimates carry
// the unit symbol-power prior until refine_with_format replaces it with
// posterior statistics under a concrete constellation.
struct InterferenceEstimate {
    CMatrix x_hat;                 // k2 x block_len
    std::vector<double> n_tilde;   // k2 entries, > 0
    std::vector<double> c_x;       // k2 entries, >= 0
};

// Interference-aware MMSE equalizer: whitens against the full covariance
// H H^ + G G^ + n0 I built from the known channels.
EqualizedBlock eirc(const ChannelRealization& chan, const CMatrix& y);

// Classic variant that whitens against a supplied covariance R of everything
// that is not the desired signal (interference plus noise).
EqualizedBlock irc(const CMatrix& h, const CMatrix& r, const CMatrix& y);

// Sample covariance of the given residual vectors (columns), with a small
// diagonal load so a rank-deficient estimate stays invertible.
CMatrix estimate_r(const CMatrix& samples);

// LMMSE estimate of the interference symbols treating the desired stream as
// part of the noise.
InterferenceEstimate estimate_interference_joint(const ChannelRealization& chan,
                                                 const CMatrix& y);

// Same estimate after stripping a soft reconstruction of the desired stream;
// c_s is the per-layer residual variance of that reconstruction.
InterferenceEstimate estimate_interference_purified(const ChannelRealization& chan,
                                                    const CMatrix& y,
                                                    const CMatrix& s_hat,
                                                    const std::vector<double>& c_s);

// Replace raw linear estimates by per-symbol posterior means under the given
// constellation and fill c_x with the block-averaged posterior variances.
InterferenceEstimate refine_with_format(const InterferenceEstimate& xi,
                                        const Constellation& c);

// Soft interference cancellation: subtract G times the soft interference,
// then equalize against the residual covariance H H^ + G C_x G^ + n0 I.
EqualizedBlock slic(const ChannelRealization& chan, const CMatrix& y,
                    const InterferenceEstimate& xi);

} // namespace irx
