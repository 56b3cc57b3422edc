#include "irx/receivers.hpp"

#include <cmath>
#include <stdexcept>

namespace irx {

namespace {

// Singular covariances only occur when the noiseless flag is in play, so the
// load is purely a numerical floor, not a tuning knob.
double zero_n0_loading(const CMatrix& a, double n0) {
    if (n0 > 0.0) return 0.0;
    return 1e-12 * trace_real(a) / static_cast<double>(a.rows());
}

std::vector<double> clamped_error_diag(const CMatrix& e) {
    std::vector<double> d(e.rows());
    for (std::size_t i = 0; i < e.rows(); ++i) {
        double v = e(i, i).real();
        d[i] = v > 1e-15 ? v : 1e-15;
    }
    return d;
}

// Shared LMMSE core: estimates the stream carried by `chan_of_stream` against
// total covariance `a`, returning the filtered samples and the diagonal of
// the error covariance I - C^ a^-1 C.
std::pair<CMatrix, std::vector<double>> lmmse(const CMatrix& a, const CMatrix& c,
                                              const CMatrix& y, double loading) {
    const CMatrix z = solve_hpd(a, c, loading); // a^-1 c
    const CMatrix zh = hermitian(z);
    CMatrix out = zh * y;
    const CMatrix err = CMatrix::identity(c.cols()) - zh * c;
    return {std::move(out), clamped_error_diag(err)};
}

} // namespace

EqualizedBlock eirc(const ChannelRealization& chan, const CMatrix& y) {
    if (y.rows() != chan.h.rows())
        throw std::invalid_argument("eirc: antenna count mismatch");
    const CMatrix a = chan.h * hermitian(chan.h) + chan.g * hermitian(chan.g) +
                      cxd{chan.n0} * CMatrix::identity(chan.h.rows());
    auto [s, d] = lmmse(a, chan.h, y, zero_n0_loading(a, chan.n0));
    return {std::move(s), std::move(d)};
}

EqualizedBlock irc(const CMatrix& h, const CMatrix& r, const CMatrix& y) {
    if (y.rows() != h.rows() || r.rows() != h.rows() || r.cols() != h.rows())
        throw std::invalid_argument("irc: shape mismatch");
    const CMatrix a = h * hermitian(h) + r;
    auto [s, d] = lmmse(a, h, y, 0.0);
    return {std::move(s), std::move(d)};
}

CMatrix estimate_r(const CMatrix& samples) {
    if (samples.cols() == 0)
        throw std::invalid_argument("estimate_r: need at least one sample");
    const std::size_t n = samples.rows();
    CMatrix r(n, n);
    for (std::size_t k = 0; k < samples.cols(); ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                r(i, j) += samples(i, k) * std::conj(samples(j, k));
    const double inv_k = 1.0 / static_cast<double>(samples.cols());
    for (auto& v : r.entries()) v *= inv_k;
    // diagonal load scaled by the average eigenvalue, with a fallback so an
    // all-zero input still produces an invertible matrix
    double base = trace_real(r) / static_cast<double>(n);
    if (!(base > 0.0)) base = 1.0;
    const double eps = 1e-9 * base;
    for (std::size_t i = 0; i < n; ++i) r(i, i) += eps;
    return r;
}

InterferenceEstimate estimate_interference_joint(const ChannelRealization& chan,
                                                 const CMatrix& y) {
    const CMatrix a = chan.h * hermitian(chan.h) + chan.g * hermitian(chan.g) +
                      cxd{chan.n0} * CMatrix::identity(chan.h.rows());
    auto [x, d] = lmmse(a, chan.g, y, zero_n0_loading(a, chan.n0));
    InterferenceEstimate xi;
    xi.x_hat = std::move(x);
    xi.n_tilde = std::move(d);
    xi.c_x.assign(chan.g.cols(), 1.0); // unit symbol-power prior
    return xi;
}

InterferenceEstimate estimate_interference_purified(const ChannelRealization& chan,
                                                    const CMatrix& y,
                                                    const CMatrix& s_hat,
                                                    const std::vector<double>& c_s) {
    if (c_s.size() != chan.h.cols())
        throw std::invalid_argument("estimate_interference_purified: c_s size mismatch");
    const CMatrix residual = y - chan.h * s_hat;
    const CMatrix a = chan.h * CMatrix::diag(c_s) * hermitian(chan.h) +
                      chan.g * hermitian(chan.g) +
                      cxd{chan.n0} * CMatrix::identity(chan.h.rows());
    auto [x, d] = lmmse(a, chan.g, residual, zero_n0_loading(a, chan.n0));
    InterferenceEstimate xi;
    xi.x_hat = std::move(x);
    xi.n_tilde = std::move(d);
    xi.c_x.assign(chan.g.cols(), 1.0);
    return xi;
}

InterferenceEstimate refine_with_format(const InterferenceEstimate& xi,
                                        const Constellation& c) {
    InterferenceEstimate out = xi;
    for (std::size_t j = 0; j < xi.x_hat.rows(); ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < xi.x_hat.cols(); ++k) {
            const SoftSymbol ss = posterior_stats(xi.x_hat(j, k), xi.n_tilde[j], c);
            out.x_hat(j, k) = ss.mean;
            acc += ss.variance;
        }
        out.c_x[j] = xi.x_hat.cols() ? acc / static_cast<double>(xi.x_hat.cols()) : 0.0;
    }
    return out;
}

EqualizedBlock slic(const ChannelRealization& chan, const CMatrix& y,
                    const InterferenceEstimate& xi) {
    if (xi.c_x.size() != chan.g.cols())
        throw std::invalid_argument("slic: c_x size mismatch");
    const CMatrix cleaned = y - chan.g * xi.x_hat;
    const CMatrix a = chan.h * hermitian(chan.h) +
                      chan.g * CMatrix::diag(xi.c_x) * hermitian(chan.g) +
                      cxd{chan.n0} * CMatrix::identity(chan.h.rows());
    auto [s, d] = lmmse(a, chan.h, cleaned, zero_n0_loading(a, chan.n0));
    return {std::move(s), std::move(d)};
}

} // namespace irx
