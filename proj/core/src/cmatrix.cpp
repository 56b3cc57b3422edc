#include "irx/cmatrix.hpp"

#include <cmath>

namespace irx {

CMatrix CMatrix::identity(std::size_t n) {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

CMatrix CMatrix::diag(const std::vector<double>& d) {
    CMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

bool CMatrix::finite() const {
    for (const auto& v : e_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

CMatrix hermitian(const CMatrix& a) {
    CMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            out(j, i) = std::conj(a(i, j));
    return out;
}

CMatrix matmul(const CMatrix& a, const CMatrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions disagree");
    CMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cxd aik = a(i, k);
            if (aik == cxd{}) continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(i, j) += aik * b(k, j);
        }
    return out;
}

CMatrix operator*(const CMatrix& a, const CMatrix& b) { return matmul(a, b); }

CMatrix operator+(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("operator+: shape mismatch");
    CMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.entries()[i] += b.entries()[i];
    return out;
}

CMatrix operator-(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("operator-: shape mismatch");
    CMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.entries()[i] -= b.entries()[i];
    return out;
}

CMatrix operator*(cxd s, const CMatrix& a) {
    CMatrix out = a;
    for (auto& v : out.entries()) v *= s;
    return out;
}

std::optional<CMatrix> try_solve_hpd(const CMatrix& a, const CMatrix& b,
                                     double loading) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("solve_hpd: a not square");
    if (b.rows() != n) throw std::invalid_argument("solve_hpd: rhs rows mismatch");

    // lower Cholesky factor of a + loading*I, reading only the lower triangle
    CMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j).real() + loading;
        for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
        if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
        const double dj = std::sqrt(d);
        l(j, j) = dj;
        for (std::size_t i = j + 1; i < n; ++i) {
            cxd s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
            l(i, j) = s / dj;
        }
    }

    // forward then back substitution, one rhs column at a time
    CMatrix x(n, b.cols());
    std::vector<cxd> y(n);
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            cxd s = b(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
            y[i] = s / l(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;) {
            cxd s = y[ii];
            for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(l(k, ii)) * x(k, c);
            x(ii, c) = s / l(ii, ii);
        }
    }
    if (!x.finite()) return std::nullopt;
    return x;
}

CMatrix solve_hpd(const CMatrix& a, const CMatrix& b, double loading) {
    auto x = try_solve_hpd(a, b, loading);
    if (!x) throw SolverError("solve_hpd: matrix not positive definite");
    return std::move(*x);
}

double fro_norm(const CMatrix& a) {
    double s = 0.0;
    for (const auto& v : a.entries()) s += std::norm(v);
    return std::sqrt(s);
}

double trace_real(const CMatrix& a) {
    double s = 0.0;
    const std::size_t n = a.rows() < a.cols() ? a.rows() : a.cols();
    for (std::size_t i = 0; i < n; ++i) s += a(i, i).real();
    return s;
}

} // namespace irx
