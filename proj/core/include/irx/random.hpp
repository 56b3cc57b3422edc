#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace irx {

// SplitMix64 finalizer. Used to derive independent per-stream seeds from a
// master seed so that block i always sees the same randomness no matter how
// blocks are scheduled across workers.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic random source. Gaussians come from an explicit Box-Muller
// transform instead of std::normal_distribution, whose output sequence is
// implementation defined and would tie results to one standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n); n must be > 0
    std::uint32_t uniform_int(std::uint32_t n) {
        return static_cast<std::uint32_t>(gen_() % n);
    }

    // standard normal N(0, 1)
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // circularly symmetric complex Gaussian with E|z|^2 == var
    std::complex<double> cgaussian(double var) {
        const double s = std::sqrt(0.5 * var);
        const double re = s * gaussian();
        const double im = s * gaussian();
        return {re, im};
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace irx
