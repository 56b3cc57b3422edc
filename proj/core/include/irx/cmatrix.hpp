#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace irx {

using cxd = std::complex<double>;

// Dense row-major complex matrix. Everything in the receiver chain is at most
// a few antennas wide, so there is no blocking, no views, no allocator games.
class CMatrix {
public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), e_(rows * cols) {}

    static CMatrix identity(std::size_t n);
    static CMatrix diag(const std::vector<double>& d);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return e_.size(); }

    cxd& operator()(std::size_t i, std::size_t j) { return e_[i * cols_ + j]; }
    const cxd& operator()(std::size_t i, std::size_t j) const { return e_[i * cols_ + j]; }

    const std::vector<cxd>& entries() const { return e_; }
    std::vector<cxd>& entries() { return e_; }

    bool finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cxd> e_;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// conjugate transpose
CMatrix hermitian(const CMatrix& a);

// plain triple product, dimension mismatch throws
CMatrix matmul(const CMatrix& a, const CMatrix& b);

CMatrix operator*(const CMatrix& a, const CMatrix& b);
CMatrix operator+(const CMatrix& a, const CMatrix& b);
CMatrix operator-(const CMatrix& a, const CMatrix& b);
CMatrix operator*(cxd s, const CMatrix& a);

// Solve (a + loading*I) x = b with a Hermitian positive definite, via a
// complex Cholesky factorization. Only the lower triangle of a is read.
// Returns nothing when a pivot is non-positive or non-finite.
std::optional<CMatrix> try_solve_hpd(const CMatrix& a, const CMatrix& b,
                                     double loading = 0.0);

// throwing wrapper around try_solve_hpd
CMatrix solve_hpd(const CMatrix& a, const CMatrix& b, double loading = 0.0);

double fro_norm(const CMatrix& a);
double trace_real(const CMatrix& a);

} // namespace irx
