#pragma once

#include <cstdint>
#include <vector>

#include "irx/cmatrix.hpp"
#include "irx/modem.hpp"

namespace irx {

// Rate-1/2 convolutional code, constraint length 7, generators 133/171
// (octal), terminated with six zero tail bits. Used as the coded-throughput
// stand-in for a full production decoder chain.

inline constexpr std::size_t kConvMemory = 6;
inline constexpr std::size_t kConvBlockInfoBits = 288;

// output holds 2 * (bits.size() + 6) coded bits
std::vector<std::uint8_t> conv_encode(const std::vector<std::uint8_t>& bits);

// Max-log per-bit LLRs for equalized symbols: with L the difference of
// nearest-point distances between the bit-0 and bit-1 subsets scaled by
// 1/noise_var, positive values favor bit 1.
std::vector<double> bit_llrs(const std::vector<cxd>& symbols, double noise_var,
                             const Constellation& c);

// Soft-decision Viterbi over the terminated trellis. Metric ties prefer the
// lower predecessor state, so the decode is fully deterministic. The input
// must be 2 * (message + 6) values; anything else throws.
std::vector<std::uint8_t> viterbi_decode(const std::vector<double>& llrs);

} // namespace irx
