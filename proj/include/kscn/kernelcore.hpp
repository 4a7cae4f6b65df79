#pragma once

// Gaussian Gram matrices over concatenated [hidden outputs, inputs] rows,
// kept together with their squared distances so that adding a node is a
// rank-free O(n²) update, plus the kernel ridge solve and prediction.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "kscn/error.hpp"
#include "kscn/numerics.hpp"

namespace kscn {

struct KernelConfig {
    double c = 1.0;    // K = exp(−‖a − b‖² / c)
    double tau = 1e-3; // ridge factor

    void validate() const {
        if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("kernel.c: must be a positive number");
        if (!(tau > 0.0) || !std::isfinite(tau)) {
            throw ConfigError("kernel.tau: must be a positive number");
        }
    }
    friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

/// Row-wise feature block [H, X]. H may have zero columns.
struct FeatureRows {
    const Mat& H;
    const Mat& X;

    std::size_t rows() const { return X.rows(); }
    std::size_t width() const { return H.cols() + X.cols(); }
};

/// Pairwise squared distances between rows of a and rows of b.
inline Mat pairwise_sqdist(FeatureRows a, FeatureRows b) {
    if (a.width() != b.width()) {
        throw DimensionMismatch("feature width mismatch: " + std::to_string(a.width()) + " vs " +
                                std::to_string(b.width()));
    }
    if (a.H.cols() > 0 && a.H.rows() != a.X.rows()) throw DimensionMismatch("H/X row mismatch");
    if (b.H.cols() > 0 && b.H.rows() != b.X.rows()) throw DimensionMismatch("H/X row mismatch");
    Mat D(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.H.cols(); ++k) {
                const double t = a.H(i, k) - b.H(j, k);
                s += t * t;
            }
            for (std::size_t k = 0; k < a.X.cols(); ++k) {
                const double t = a.X(i, k) - b.X(j, k);
                s += t * t;
            }
            D(i, j) = s;
        }
    }
    return D;
}

/// Adds (a_i − b_j)² to every entry: the effect of appending one feature.
inline void add_feature_sqdist(Mat& D, std::span<const double> a, std::span<const double> b) {
    for (std::size_t i = 0; i < D.rows(); ++i) {
        auto row = D.row(i);
        const double ai = a[i];
        for (std::size_t j = 0; j < D.cols(); ++j) {
            const double t = ai - b[j];
            row[j] += t * t;
        }
    }
}

inline Mat gaussian_from_sqdist(const Mat& D, double c) {
    Mat K(D.rows(), D.cols());
    const double inv_c = 1.0 / c;
    for (std::size_t k = 0; k < D.size(); ++k) K.data()[k] = std::exp(-D.data()[k] * inv_c);
    return K;
}

struct GramState {
    Mat K;
    Mat sqdist;
    std::size_t feature_width = 0;
};

/// K_ij = exp(−‖[H(i), x_i] − [H(j), x_j]‖² / c).
inline GramState gram_build(const Mat& H, const Mat& X, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("gram_build: c must be positive");
    const FeatureRows f{H, X};
    GramState g;
    g.sqdist = pairwise_sqdist(f, f);
    for (std::size_t i = 0; i < g.sqdist.rows(); ++i) {
        g.sqdist(i, i) = 0.0;
        for (std::size_t j = 0; j < i; ++j) g.sqdist(i, j) = g.sqdist(j, i);
    }
    g.K = gaussian_from_sqdist(g.sqdist, c);
    g.feature_width = f.width();
    return g;
}

/// Gram state after appending one more feature column h_new.
inline GramState gram_extend(const GramState& g, std::span<const double> h_new, double c) {
    if (h_new.size() != g.sqdist.rows()) throw DimensionMismatch("gram_extend: length mismatch");
    if (!(c > 0.0)) throw std::invalid_argument("gram_extend: c must be positive");
    GramState out;
    out.sqdist = g.sqdist;
    add_feature_sqdist(out.sqdist, h_new, h_new);
    out.K = gaussian_from_sqdist(out.sqdist, c);
    out.feature_width = g.feature_width + 1;
    return out;
}

struct KernelSolution {
    Mat alpha;   // (K + τI)⁻¹ Y
    Mat fitted;  // K·alpha
};

inline KernelSolution kernel_ridge_fit(const Mat& K, const Mat& Y, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("kernel_ridge_fit: tau must be positive");
    if (K.rows() != K.cols() || K.rows() != Y.rows()) {
        throw DimensionMismatch("kernel_ridge_fit: shape mismatch");
    }
    Mat A = K;
    for (std::size_t i = 0; i < A.rows(); ++i) A(i, i) += tau;
    KernelSolution sol;
    sol.alpha = cholesky_solve(A, Y);
    sol.fitted = K * sol.alpha;
    return sol;
}

/// ½‖Y − Kα‖² + ½τ·αᵀKα: the ridge objective at a dual solution.
inline double ridge_objective(const Mat& Y, const KernelSolution& sol, double tau) {
    const double misfit = frobenius_sq(Y - sol.fitted);
    double norm = 0.0;
    for (std::size_t k = 0; k < sol.alpha.size(); ++k) norm += sol.alpha.data()[k] * sol.fitted.data()[k];
    return 0.5 * misfit + 0.5 * tau * norm;
}

/// Test-by-train kernel: entry (i, j) compares test row i with train row j.
inline Mat cross_gram(FeatureRows train, FeatureRows test, double c) {
    if (train.width() != test.width()) {
        throw DimensionMismatch("cross_gram: width mismatch (" + std::to_string(train.width()) +
                                " vs " + std::to_string(test.width()) + ")");
    }
    return gaussian_from_sqdist(pairwise_sqdist(test, train), c);
}

inline Mat kernel_predict(const Mat& K_t, const Mat& alpha) {
    if (K_t.cols() != alpha.rows()) throw DimensionMismatch("kernel_predict: shape mismatch");
    return K_t * alpha;
}

}  // namespace kscn
