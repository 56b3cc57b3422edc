#include "irx/modem.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace irx {

std::size_t order(ModFormat f) {
    switch (f) {
        case ModFormat::qpsk: return 4;
        case ModFormat::qam16: return 16;
        case ModFormat::qam64: return 64;
        case ModFormat::qam256: return 256;
    }
    throw std::invalid_argument("order: bad format");
}

std::size_t bits_per_symbol(ModFormat f) {
    switch (f) {
        case ModFormat::qpsk: return 2;
        case ModFormat::qam16: return 4;
        case ModFormat::qam64: return 6;
        case ModFormat::qam256: return 8;
    }
    throw std::invalid_argument("bits_per_symbol: bad format");
}

const char* name(ModFormat f) {
    switch (f) {
        case ModFormat::qpsk: return "qpsk";
        case ModFormat::qam16: return "qam16";
        case ModFormat::qam64: return "qam64";
        case ModFormat::qam256: return "qam256";
    }
    return "?";
}

std::optional<ModFormat> parse_format(std::string_view s) {
    if (s == "qpsk") return ModFormat::qpsk;
    if (s == "qam16" || s == "16qam") return ModFormat::qam16;
    if (s == "qam64" || s == "64qam") return ModFormat::qam64;
    if (s == "qam256" || s == "256qam") return ModFormat::qam256;
    return std::nullopt;
}

namespace {

std::uint32_t gray_decode(std::uint32_t g) {
    std::uint32_t b = 0;
    while (g) {
        b ^= g;
        g >>= 1;
    }
    return b;
}

// Rail amplitude for a Gray-coded bit group: all-zero bits sit at the largest
// positive level, so label 0 lands in the first quadrant.
double rail_level(std::uint32_t bits, std::size_t rail_bits) {
    const std::uint32_t k = gray_decode(bits);
    const double top = static_cast<double>((1u << rail_bits) - 1);
    return top - 2.0 * static_cast<double>(k);
}

} // namespace

Constellation::Constellation(ModFormat f) : format_(f), bits_(bits_per_symbol(f)) {
    const std::size_t m = order(f);
    const std::size_t rail_bits = bits_ / 2;
    const std::uint32_t rail_mask = (1u << rail_bits) - 1;
    // unit average energy: E of (level_i^2 + level_q^2) over a square grid
    const double scale = 1.0 / std::sqrt(2.0 * (static_cast<double>(m) - 1.0) / 3.0);
    points_.resize(m);
    peak_power_ = 0.0;
    for (std::uint32_t label = 0; label < m; ++label) {
        const std::uint32_t ibits = label >> rail_bits;
        const std::uint32_t qbits = label & rail_mask;
        const cxd p{rail_level(ibits, rail_bits) * scale,
                    rail_level(qbits, rail_bits) * scale};
        points_[label] = p;
        if (std::norm(p) > peak_power_) peak_power_ = std::norm(p);
    }
}

std::uint32_t Constellation::slice(cxd obs) const {
    std::uint32_t best = 0;
    double best_d = std::norm(obs - points_[0]);
    for (std::uint32_t i = 1; i < points_.size(); ++i) {
        const double d = std::norm(obs - points_[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

const Constellation& constellation(ModFormat f) {
    static const Constellation qpsk{ModFormat::qpsk};
    static const Constellation qam16{ModFormat::qam16};
    static const Constellation qam64{ModFormat::qam64};
    static const Constellation qam256{ModFormat::qam256};
    switch (f) {
        case ModFormat::qpsk: return qpsk;
        case ModFormat::qam16: return qam16;
        case ModFormat::qam64: return qam64;
        case ModFormat::qam256: return qam256;
    }
    throw std::invalid_argument("constellation: bad format");
}

std::vector<cxd> modulate(const std::vector<std::uint8_t>& bits, const Constellation& c) {
    const std::size_t w = c.bits();
    if (bits.size() % w != 0)
        throw std::invalid_argument("modulate: bit count not a multiple of symbol width");
    std::vector<cxd> out(bits.size() / w);
    for (std::size_t s = 0; s < out.size(); ++s) {
        std::uint32_t label = 0;
        for (std::size_t b = 0; b < w; ++b)
            label = (label << 1) | (bits[s * w + b] & 1u);
        out[s] = c.map(label);
    }
    return out;
}

std::vector<std::uint8_t> hard_demod(const std::vector<cxd>& syms, const Constellation& c) {
    const std::size_t w = c.bits();
    std::vector<std::uint8_t> out(syms.size() * w);
    for (std::size_t s = 0; s < syms.size(); ++s) {
        const std::uint32_t label = c.slice(syms[s]);
        for (std::size_t b = 0; b < w; ++b)
            out[s * w + b] = static_cast<std::uint8_t>((label >> (w - 1 - b)) & 1u);
    }
    return out;
}

SoftSymbol posterior_stats(cxd obs, double noise_var, const Constellation& c) {
    if (!(noise_var > 0.0))
        throw std::invalid_argument("posterior_stats: noise_var must be positive");
    const auto& pts = c.points();
    // log weights with the peak subtracted so tiny noise_var cannot overflow
    double wmax = -std::numeric_limits<double>::infinity();
    std::vector<double> w(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        w[i] = -std::norm(obs - pts[i]) / noise_var;
        if (w[i] > wmax) wmax = w[i];
    }
    double z = 0.0;
    cxd mean{};
    double e2 = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double p = std::exp(w[i] - wmax);
        z += p;
        mean += p * pts[i];
        e2 += p * std::norm(pts[i]);
    }
    mean /= z;
    e2 /= z;
    double var = e2 - std::norm(mean);
    if (var < 0.0) var = 0.0;
    return {mean, var};
}

} // namespace irx
