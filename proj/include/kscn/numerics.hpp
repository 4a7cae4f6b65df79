#pragma once

// Small dense linear-algebra kernel: a row-major matrix, SPD solves,
// minimum-norm least squares and symmetric eigenvalues.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kscn/error.hpp"

namespace kscn {

class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw std::invalid_argument("Mat: data length does not match shape");
        }
    }
    Mat(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw std::invalid_argument("Mat: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Mat column(std::span<const double> v) {
        return Mat(v.size(), 1, std::vector<double>(v.begin(), v.end()));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<double> col(std::size_t j) const {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
        return out;
    }

    void set_col(std::size_t j, std::span<const double> v) {
        assert(v.size() == rows_);
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
    }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    Mat transpose() const {
        Mat t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    /// Rows selected by index, in the given order.
    Mat select_rows(std::span<const std::size_t> idx) const {
        Mat out(idx.size(), cols_);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            auto src = row(idx[k]);
            std::copy(src.begin(), src.end(), out.row(k).begin());
        }
        return out;
    }

    /// Append the columns of `right` after the columns of this matrix.
    Mat hcat(const Mat& right) const {
        if (right.rows_ != rows_ && !(right.empty() || empty())) {
            throw std::invalid_argument("hcat: row count mismatch");
        }
        if (empty() && cols_ == 0) return right;
        if (right.cols_ == 0) return *this;
        Mat out(rows_, cols_ + right.cols_);
        for (std::size_t i = 0; i < rows_; ++i) {
            auto a = row(i);
            auto b = right.row(i);
            auto o = out.row(i);
            std::copy(a.begin(), a.end(), o.begin());
            std::copy(b.begin(), b.end(), o.begin() + static_cast<std::ptrdiff_t>(cols_));
        }
        return out;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Mat&, const Mat&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

inline Mat operator-(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("subtract: shape mismatch");
    }
    Mat c = a;
    for (std::size_t k = 0; k < c.size(); ++k) c.data()[k] -= b.data()[k];
    return c;
}

inline Mat operator+(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("add: shape mismatch");
    }
    Mat c = a;
    for (std::size_t k = 0; k < c.size(); ++k) c.data()[k] += b.data()[k];
    return c;
}

inline Mat operator*(double s, const Mat& a) {
    Mat c = a;
    for (double& v : c.data()) v *= s;
    return c;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double frobenius_sq(const Mat& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return s;
}

inline double max_abs(const Mat& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        return std::numeric_limits<double>::infinity();
    }
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
    return m;
}

inline bool is_symmetric(const Mat& a, double tol = 1e-10) {
    if (a.rows() != a.cols()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    return true;
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
/// Only the lower triangle of `a` is read.
inline Mat cholesky_factor(const Mat& a) {
    const std::size_t n = a.rows();
    Mat l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        auto lj = l.row(j);
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
        if (!(d > 0.0)) throw NotPositiveDefinite(j, d);
        const double piv = std::sqrt(d);
        lj[j] = piv;
        for (std::size_t i = j + 1; i < n; ++i) {
            auto li = l.row(i);
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
            li[j] = s / piv;
        }
    }
    return l;
}

/// Solve L Lᵀ Z = B in place of B.
inline Mat cholesky_substitute(const Mat& l, Mat b) {
    const std::size_t n = l.rows();
    const std::size_t m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        auto bi = b.row(i);
        for (std::size_t k = 0; k < i; ++k) {
            const double lik = l(i, k);
            auto bk = b.row(k);
            for (std::size_t c = 0; c < m; ++c) bi[c] -= lik * bk[c];
        }
        for (std::size_t c = 0; c < m; ++c) bi[c] /= l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        auto bi = b.row(ii);
        for (std::size_t k = ii + 1; k < n; ++k) {
            const double lki = l(k, ii);
            auto bk = b.row(k);
            for (std::size_t c = 0; c < m; ++c) bi[c] -= lki * bk[c];
        }
        for (std::size_t c = 0; c < m; ++c) bi[c] /= l(ii, ii);
    }
    return b;
}

/// Solves A·Z = B for symmetric positive-definite A.
/// Throws NotPositiveDefinite when a pivot is not strictly positive.
inline Mat cholesky_solve(const Mat& a, const Mat& b) {
    if (a.rows() != a.cols()) throw std::invalid_argument("cholesky_solve: A not square");
    if (b.rows() != a.rows()) throw std::invalid_argument("cholesky_solve: B row mismatch");
    if (!is_symmetric(a, 1e-10)) throw std::invalid_argument("cholesky_solve: A not symmetric");
    return cholesky_substitute(cholesky_factor(a), b);
}

/// Minimum-norm least-squares solution of A·Z ≈ B.
///
/// Householder QR with column pivoting determines the numerical rank
/// (|R_ii| > max(n, k)·eps·|R_00|). Rank-deficient systems get a second
/// orthogonal reduction of the leading rows of R so the returned solution
/// is the minimum-norm one.
inline Mat least_squares(const Mat& a, const Mat& b) {
    const std::size_t n = a.rows();
    const std::size_t k = a.cols();
    const std::size_t m = b.cols();
    if (n == 0 || k == 0) throw std::invalid_argument("least_squares: empty system");
    if (b.rows() != n) throw std::invalid_argument("least_squares: B row mismatch");

    // Work column-major for the factorization: qr[j] is column j.
    std::vector<std::vector<double>> qr(k, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) qr[j][i] = a(i, j);
    std::vector<std::vector<double>> rhs(m, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < m; ++c) rhs[c][i] = b(i, c);

    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<double> norms(k);
    for (std::size_t j = 0; j < k; ++j) norms[j] = dot(qr[j], qr[j]);

    const std::size_t steps = std::min(n, k);
    std::vector<double> diag(steps, 0.0);
    std::size_t rank = 0;
    double tol = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
        // Pivot: remaining column with the largest trailing norm (recomputed
        // exactly to avoid downdating drift).
        std::size_t best = s;
        double best_norm = -1.0;
        for (std::size_t j = s; j < k; ++j) {
            double nn = 0.0;
            for (std::size_t i = s; i < n; ++i) nn += qr[j][i] * qr[j][i];
            norms[j] = nn;
            if (nn > best_norm) {
                best_norm = nn;
                best = j;
            }
        }
        std::swap(qr[s], qr[best]);
        std::swap(perm[s], perm[best]);
        std::swap(norms[s], norms[best]);

        const double alpha_norm = std::sqrt(best_norm);
        if (s == 0) {
            tol = static_cast<double>(std::max(n, k)) * std::numeric_limits<double>::epsilon() *
                  alpha_norm;
        }
        if (alpha_norm <= tol || alpha_norm == 0.0) break;

        auto& v = qr[s];
        const double alpha = v[s] > 0 ? -alpha_norm : alpha_norm;
        v[s] -= alpha;
        double vnorm_sq = 0.0;
        for (std::size_t i = s; i < n; ++i) vnorm_sq += v[i] * v[i];
        if (vnorm_sq > 0.0) {
            auto reflect = [&](std::vector<double>& x) {
                double p = 0.0;
                for (std::size_t i = s; i < n; ++i) p += v[i] * x[i];
                const double f = 2.0 * p / vnorm_sq;
                for (std::size_t i = s; i < n; ++i) x[i] -= f * v[i];
            };
            for (std::size_t j = s + 1; j < k; ++j) reflect(qr[j]);
            for (auto& r : rhs) reflect(r);
        }
        diag[s] = alpha;
        // Column s below the diagonal is now the Householder vector; the
        // R entry lives in diag.
        ++rank;
    }

    // R11 (rank×rank) is upper triangular with diag on the diagonal and
    // R(i, j) = qr[j][i] for i < j. R12 spans columns rank..k-1.
    auto r_at = [&](std::size_t i, std::size_t j) { return i == j ? diag[i] : qr[j][i]; };

    Mat z(k, m);
    if (rank == 0) return z;

    if (rank == k) {
        for (std::size_t c = 0; c < m; ++c) {
            std::vector<double> x(k);
            for (std::size_t ii = k; ii-- > 0;) {
                double s = rhs[c][ii];
                for (std::size_t j = ii + 1; j < k; ++j) s -= r_at(ii, j) * x[j];
                x[ii] = s / diag[ii];
            }
            for (std::size_t j = 0; j < k; ++j) z(perm[j], c) = x[j];
        }
        return z;
    }

    // Rank-deficient: W = [R11 R12] (rank×k). Factor Wᵀ = Q2·[S; 0] so that
    // W = Sᵀ·Q2ᵀ(top); minimum-norm x' = Q2·[S⁻ᵀ c; 0].
    std::vector<std::vector<double>> wt(rank, std::vector<double>(k, 0.0));  // columns of Wᵀ
    for (std::size_t i = 0; i < rank; ++i)
        for (std::size_t j = i; j < k; ++j) wt[i][j] = r_at(i, j);
    std::vector<std::vector<double>> house(rank);
    std::vector<double> sdiag(rank);
    for (std::size_t s = 0; s < rank; ++s) {
        auto& v = wt[s];
        double nn = 0.0;
        for (std::size_t i = s; i < k; ++i) nn += v[i] * v[i];
        const double an = std::sqrt(nn);
        const double alpha = v[s] > 0 ? -an : an;
        std::vector<double> h(k, 0.0);
        for (std::size_t i = s; i < k; ++i) h[i] = v[i];
        h[s] -= alpha;
        double hn = 0.0;
        for (std::size_t i = s; i < k; ++i) hn += h[i] * h[i];
        if (hn > 0.0) {
            for (std::size_t j = s + 1; j < rank; ++j) {
                double p = 0.0;
                for (std::size_t i = s; i < k; ++i) p += h[i] * wt[j][i];
                const double f = 2.0 * p / hn;
                for (std::size_t i = s; i < k; ++i) wt[j][i] -= f * h[i];
            }
        }
        sdiag[s] = alpha;
        house[s] = std::move(h);
    }
    // S(i, j) for i <= j (upper triangular, from columns of the reduced Wᵀ).
    auto s_at = [&](std::size_t i, std::size_t j) { return i == j ? sdiag[i] : wt[j][i]; };
    for (std::size_t c = 0; c < m; ++c) {
        // Solve Sᵀ y = c (forward substitution; Sᵀ is lower triangular).
        std::vector<double> y(k, 0.0);
        for (std::size_t i = 0; i < rank; ++i) {
            double s = rhs[c][i];
            for (std::size_t j = 0; j < i; ++j) s -= s_at(j, i) * y[j];
            y[i] = s / sdiag[i];
        }
        // x' = H_0 H_1 ... H_{rank-1} y
        for (std::size_t s = rank; s-- > 0;) {
            const auto& h = house[s];
            double hn = 0.0, p = 0.0;
            for (std::size_t i = s; i < k; ++i) {
                hn += h[i] * h[i];
                p += h[i] * y[i];
            }
            if (hn > 0.0) {
                const double f = 2.0 * p / hn;
                for (std::size_t i = s; i < k; ++i) y[i] -= f * h[i];
            }
        }
        for (std::size_t j = 0; j < k; ++j) z(perm[j], c) = y[j];
    }
    return z;
}

/// Eigenvalues of a symmetric matrix, descending, by cyclic Jacobi rotation.
inline std::vector<double> sym_eigvals(const Mat& input, int max_sweeps = 100) {
    if (input.rows() != input.cols()) throw std::invalid_argument("sym_eigvals: not square");
    if (!is_symmetric(input, 1e-10)) throw std::invalid_argument("sym_eigvals: not symmetric");
    const std::size_t n = input.rows();
    Mat a = input;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));

    double total = 0.0;
    for (double v : a.data()) total += v * v;
    const double eps = std::numeric_limits<double>::epsilon();

    bool converged = n <= 1;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off <= eps * eps * total || off == 0.0) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                // Skip rotations that would not change the diagonal in
                // floating point.
                if (std::abs(apq) < eps * 1e-3 * std::sqrt(std::abs(app * aqq)) ) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t r = 0; r < n; ++r) {
                    const double arp = a(r, p);
                    const double arq = a(r, q);
                    a(r, p) = c * arp - s * arq;
                    a(r, q) = s * arp + c * arq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double apr = a(p, r);
                    const double aqr = a(q, r);
                    a(p, r) = c * apr - s * aqr;
                    a(q, r) = s * apr + c * aqr;
                }
                a(p, q) = a(q, p) = 0.0;
            }
        }
    }
    if (!converged) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off > eps * eps * total && off != 0.0) {
            throw NoConvergence("sym_eigvals: Jacobi did not converge in " +
                                std::to_string(max_sweeps) + " sweeps");
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

}  // namespace kscn
