#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "irx/cmatrix.hpp"

namespace irx {

enum class ModFormat : std::uint8_t { qpsk, qam16, qam64, qam256 };

std::size_t order(ModFormat f);           // constellation size
std::size_t bits_per_symbol(ModFormat f); // log2(order)
const char* name(ModFormat f);
std::optional<ModFormat> parse_format(std::string_view s);

// Square QAM with an independent Gray code per rail and unit average energy.
// A symbol's bit label splits MSB-first into the I-rail group then the Q-rail
// group; points are indexed by their label value, so labels()[i] == i.
class Constellation {
public:
    explicit Constellation(ModFormat f);

    ModFormat format() const { return format_; }
    std::size_t size() const { return points_.size(); }
    std::size_t bits() const { return bits_; }
    const std::vector<cxd>& points() const { return points_; }
    double peak_power() const { return peak_power_; }

    cxd map(std::uint32_t label) const { return points_[label]; }

    // nearest point by squared distance; exact ties go to the lowest label
    std::uint32_t slice(cxd obs) const;

private:
    ModFormat format_;
    std::size_t bits_;
    std::vector<cxd> points_;
    double peak_power_;
};

// shared immutable instance per format
const Constellation& constellation(ModFormat f);

// bits.size() must be a multiple of the symbol width
std::vector<cxd> modulate(const std::vector<std::uint8_t>& bits, const Constellation& c);
std::vector<std::uint8_t> hard_demod(const std::vector<cxd>& syms, const Constellation& c);

struct SoftSymbol {
    cxd mean;
    double variance;
};

// Posterior mean and variance of a constellation symbol observed in complex
// AWGN of the given variance, uniform prior over points.
SoftSymbol posterior_stats(cxd obs, double noise_var, const Constellation& c);

} // namespace irx
