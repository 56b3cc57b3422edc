#include "irx/convcode.hpp"

#include <bit>
#include <limits>
#include <stdexcept>

namespace irx {

namespace {

// generator taps over the 7-bit window, newest input in the LSB
constexpr std::uint32_t kPolyA = 0133; // 0b1011011
constexpr std::uint32_t kPolyB = 0171; // 0b1111001

inline std::uint8_t parity(std::uint32_t v) {
    return static_cast<std::uint8_t>(std::popcount(v) & 1);
}

constexpr std::size_t kStates = 1u << kConvMemory;

} // namespace

std::vector<std::uint8_t> conv_encode(const std::vector<std::uint8_t>& bits) {
    std::vector<std::uint8_t> out;
    out.reserve(2 * (bits.size() + kConvMemory));
    std::uint32_t window = 0; // last 7 bits, current input lowest
    auto push = [&](std::uint8_t b) {
        window = ((window << 1) | (b & 1u)) & 0x7Fu;
        out.push_back(parity(window & kPolyA));
        out.push_back(parity(window & kPolyB));
    };
    for (std::uint8_t b : bits) push(b);
    for (std::size_t i = 0; i < kConvMemory; ++i) push(0);
    return out;
}

std::vector<double> bit_llrs(const std::vector<cxd>& symbols, double noise_var,
                             const Constellation& c) {
    if (!(noise_var > 0.0))
        throw std::invalid_argument("bit_llrs: noise_var must be positive");
    const std::size_t w = c.bits();
    std::vector<double> llrs(symbols.size() * w);
    for (std::size_t s = 0; s < symbols.size(); ++s) {
        for (std::size_t b = 0; b < w; ++b) {
            const std::uint32_t mask = 1u << (w - 1 - b);
            double d0 = std::numeric_limits<double>::infinity();
            double d1 = std::numeric_limits<double>::infinity();
            for (std::uint32_t label = 0; label < c.size(); ++label) {
                const double d = std::norm(symbols[s] - c.map(label));
                if (label & mask) {
                    if (d < d1) d1 = d;
                } else {
                    if (d < d0) d0 = d;
                }
            }
            llrs[s * w + b] = (d0 - d1) / noise_var;
        }
    }
    return llrs;
}

std::vector<std::uint8_t> viterbi_decode(const std::vector<double>& llrs) {
    if (llrs.size() % 2 != 0 || llrs.size() < 2 * kConvMemory)
        throw std::invalid_argument("viterbi_decode: malformed llr length");
    const std::size_t stages = llrs.size() / 2;
    const std::size_t msg_len = stages - kConvMemory;

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> metric(kStates, kInf), next(kStates, kInf);
    metric[0] = 0.0;
    // survivors[t][state]: predecessor state feeding `state` at stage t
    std::vector<std::vector<std::uint8_t>> survivors(
        stages, std::vector<std::uint8_t>(kStates, 0));

    for (std::size_t t = 0; t < stages; ++t) {
        const double l0 = llrs[2 * t];
        const double l1 = llrs[2 * t + 1];
        std::fill(next.begin(), next.end(), kInf);
        for (std::uint32_t s = 0; s < kStates; ++s) {
            if (metric[s] == kInf) continue;
            const std::uint32_t max_in = t < msg_len ? 2u : 1u; // tail forces zeros
            for (std::uint32_t u = 0; u < max_in; ++u) {
                const std::uint32_t window = ((s << 1) | u) & 0x7Fu;
                const std::uint32_t ns = window & (kStates - 1);
                // choosing a 1 output bit earns that bit's llr
                double cost = metric[s];
                if (parity(window & kPolyA)) cost -= l0;
                if (parity(window & kPolyB)) cost -= l1;
                if (cost < next[ns] ||
                    (cost == next[ns] && s < survivors[t][ns])) {
                    next[ns] = cost;
                    survivors[t][ns] = static_cast<std::uint8_t>(s);
                }
            }
        }
        metric.swap(next);
    }

    // terminated trellis: trace back from state 0
    std::vector<std::uint8_t> decoded(msg_len + kConvMemory);
    std::uint32_t state = 0;
    for (std::size_t t = stages; t-- > 0;) {
        const std::uint32_t prev = survivors[t][state];
        decoded[t] = static_cast<std::uint8_t>(state & 1u);
        state = prev;
    }
    decoded.resize(msg_len);
    return decoded;
}

} // namespace irx
