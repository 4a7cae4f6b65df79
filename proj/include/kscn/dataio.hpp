#pragma once

// Datasets: CSV ingestion, the built-in numerical benchmark, lag augmentation
// for time-ordered process data, min-max normalization and partitioning.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kscn/error.hpp"
#include "kscn/numerics.hpp"
#include "kscn/random.hpp"

namespace kscn {

struct FeatureRange {
    double min = 0.0;
    double max = 1.0;
    friend bool operator==(const FeatureRange&, const FeatureRange&) = default;
};

using NormStats = std::vector<FeatureRange>;

struct Dataset {
    Mat X;
    Mat Y;
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;
    NormStats norm_stats;  // empty until normalize_fit_apply

    std::size_t n() const noexcept { return X.rows(); }
    std::size_t m() const noexcept { return X.cols(); }
    std::size_t outputs() const noexcept { return Y.cols(); }
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// 0.2·exp(−(10x−4)²) + 0.5·exp(−(80x−40)²) + 0.3·exp(−(80x−20)²)
inline double numerical_target(double x) {
    const double a = 10.0 * x - 4.0;
    const double b = 80.0 * x - 40.0;
    const double c = 80.0 * x - 20.0;
    return 0.2 * std::exp(-a * a) + 0.5 * std::exp(-b * b) + 0.3 * std::exp(-c * c);
}

/// n i.i.d. samples x ~ U[0, 1] of the three-bump benchmark function.
inline Dataset gen_numerical(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw BadCounts("gen_numerical: n must be at least 1");
    Rng rng(seed);
    Dataset d;
    d.X = Mat(n, 1);
    d.Y = Mat(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = uniform01(rng);
        d.X(i, 0) = x;
        d.Y(i, 0) = numerical_target(x);
    }
    d.feature_names = {"x"};
    d.target_names = {"y"};
    return d;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline double parse_number(std::string_view cell, std::size_t row, std::size_t col) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw NonNumericCell(std::string(cell), row, col);
    }
    return v;
}

}  // namespace detail

/// Shortest form that reads back bit-exactly (17 significant digits).
inline std::string format_number(double v) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

/// Parses CSV text with one header row. Columns listed in `target_cols`
/// become Y (in the listed order); all others become X in file order.
/// Row numbers in errors are 1-based file lines.
inline Dataset parse_csv(std::istream& in, std::span<const std::size_t> target_cols) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) {
            for (auto h : detail::split_commas(line)) header.emplace_back(h);
            break;
        }
    }
    if (header.empty()) throw ParseError("missing header row", line_no, 0);
    const std::size_t width = header.size();
    for (auto t : target_cols) {
        if (t >= width) throw ParseError("target column " + std::to_string(t) + " out of range", 1, t);
    }
    std::vector<bool> is_target(width, false);
    for (auto t : target_cols) {
        if (is_target[t]) throw ParseError("target column listed twice", 1, t);
        is_target[t] = true;
    }
    if (target_cols.size() == width) throw ParseError("no predictor columns remain", 1, 0);

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_commas(line);
        if (cells.size() != width) {
            throw ParseError("expected " + std::to_string(width) + " cells, found " +
                                 std::to_string(cells.size()),
                             line_no, std::min(cells.size(), width));
        }
        std::vector<double> r(width);
        for (std::size_t j = 0; j < width; ++j) r[j] = detail::parse_number(cells[j], line_no, j + 1);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw ParseError("empty data", line_no, 0);

    const std::size_t n = rows.size();
    const std::size_t M = target_cols.size();
    const std::size_t m = width - M;
    Dataset d;
    d.X = Mat(n, m);
    d.Y = Mat(n, M);
    for (std::size_t j = 0; j < width; ++j) {
        if (!is_target[j]) d.feature_names.push_back(header[j]);
    }
    for (auto t : target_cols) d.target_names.push_back(header[t]);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t xj = 0;
        for (std::size_t j = 0; j < width; ++j) {
            if (!is_target[j]) d.X(i, xj++) = rows[i][j];
        }
        for (std::size_t q = 0; q < M; ++q) d.Y(i, q) = rows[i][target_cols[q]];
    }
    return d;
}

inline Dataset load_csv(const std::filesystem::path& path, std::span<const std::size_t> target_cols) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_csv(in, target_cols);
}

/// Writes predictors then targets, one header row. Reloading with
/// target_cols = {m, …, m+M−1} reproduces the dataset bit-exactly.
inline void write_csv(std::ostream& out, const Dataset& d) {
    const std::size_t m = d.m();
    const std::size_t M = d.outputs();
    for (std::size_t j = 0; j < m; ++j) {
        out << (j < d.feature_names.size() ? d.feature_names[j] : "x" + std::to_string(j + 1));
        out << (j + 1 < m + M ? "," : "");
    }
    for (std::size_t q = 0; q < M; ++q) {
        out << (q < d.target_names.size() ? d.target_names[q] : "y" + std::to_string(q + 1));
        out << (q + 1 < M ? "," : "");
    }
    out << '\n';
    for (std::size_t i = 0; i < d.n(); ++i) {
        for (std::size_t j = 0; j < m; ++j) out << format_number(d.X(i, j)) << (j + 1 < m + M ? "," : "");
        for (std::size_t q = 0; q < M; ++q) out << format_number(d.Y(i, q)) << (q + 1 < M ? "," : "");
        out << '\n';
    }
}

inline void save_csv(const std::filesystem::path& path, const Dataset& d) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_csv(out, d);
    if (!out) throw IoError("write failed for " + path.string());
}

/// Debutanizer lag structure. Input columns X1..X7, one target y, in time
/// order. Output predictors, in order:
///   X1(k) X2(k) X3(k) X4(k) X5(k) X5(k−1) X5(k−2) X5(k−3)
///   (X6(k)+X7(k))/2 y(k−4) y(k−5) y(k−6)
/// The first six rows have incomplete history and are dropped.
inline Dataset augment_debutanizer(const Dataset& raw) {
    if (raw.m() != 7 || raw.outputs() != 1) {
        throw DimensionMismatch("augment_debutanizer: expects 7 predictors and 1 target");
    }
    constexpr std::size_t lag = 6;
    if (raw.n() < lag + 1) throw TooFewRows(raw.n(), lag + 1);
    const std::size_t n = raw.n() - lag;
    Dataset d;
    d.X = Mat(n, 12);
    d.Y = Mat(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t k = r + lag;
        auto out = d.X.row(r);
        for (std::size_t j = 0; j < 5; ++j) out[j] = raw.X(k, j);
        out[5] = raw.X(k - 1, 4);
        out[6] = raw.X(k - 2, 4);
        out[7] = raw.X(k - 3, 4);
        out[8] = 0.5 * (raw.X(k, 5) + raw.X(k, 6));
        out[9] = raw.Y(k - 4, 0);
        out[10] = raw.Y(k - 5, 0);
        out[11] = raw.Y(k - 6, 0);
        d.Y(r, 0) = raw.Y(k, 0);
    }
    auto name = [&](std::size_t j) {
        return j < raw.feature_names.size() ? raw.feature_names[j] : "X" + std::to_string(j + 1);
    };
    const std::string y = raw.target_names.empty() ? "y" : raw.target_names[0];
    d.feature_names = {name(0), name(1), name(2), name(3), name(4),
                       name(4) + "(k-1)", name(4) + "(k-2)", name(4) + "(k-3)",
                       "(" + name(5) + "+" + name(6) + ")/2",
                       y + "(k-4)", y + "(k-5)", y + "(k-6)"};
    d.target_names = {y};
    return d;
}

/// Power-load lag structure: X1(k)..X4(k), y(k−1). First row dropped.
inline Dataset augment_powerload(const Dataset& raw) {
    if (raw.m() != 4 || raw.outputs() != 1) {
        throw DimensionMismatch("augment_powerload: expects 4 predictors and 1 target");
    }
    if (raw.n() < 2) throw TooFewRows(raw.n(), 2);
    const std::size_t n = raw.n() - 1;
    Dataset d;
    d.X = Mat(n, 5);
    d.Y = Mat(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t k = r + 1;
        for (std::size_t j = 0; j < 4; ++j) d.X(r, j) = raw.X(k, j);
        d.X(r, 4) = raw.Y(k - 1, 0);
        d.Y(r, 0) = raw.Y(k, 0);
    }
    const std::string y = raw.target_names.empty() ? "y" : raw.target_names[0];
    for (std::size_t j = 0; j < 4; ++j) {
        d.feature_names.push_back(j < raw.feature_names.size() ? raw.feature_names[j]
                                                               : "X" + std::to_string(j + 1));
    }
    d.feature_names.push_back(y + "(k-1)");
    d.target_names = {y};
    return d;
}

/// Maps X through stored min-max stats; constant features map to 0.5.
inline Mat apply_normalization(const Mat& X, const NormStats& stats) {
    if (X.cols() != stats.size()) {
        throw DimensionMismatch("normalization: expected " + std::to_string(stats.size()) +
                                " columns, got " + std::to_string(X.cols()));
    }
    Mat out(X.rows(), X.cols());
    for (std::size_t j = 0; j < X.cols(); ++j) {
        const double lo = stats[j].min;
        const double span = stats[j].max - stats[j].min;
        for (std::size_t i = 0; i < X.rows(); ++i) {
            out(i, j) = span > 0.0 ? (X(i, j) - lo) / span : 0.5;
        }
    }
    return out;
}

/// Fits per-feature min-max on the training rows and applies it to all rows.
/// Targets are left in their original units.
inline Dataset normalize_fit_apply(const Dataset& d, const Split& s) {
    if (s.train.empty()) throw BadCounts("normalize_fit_apply: empty training partition");
    NormStats stats(d.m());
    for (std::size_t j = 0; j < d.m(); ++j) {
        double lo = d.X(s.train.front(), j);
        double hi = lo;
        for (auto i : s.train) {
            lo = std::min(lo, d.X(i, j));
            hi = std::max(hi, d.X(i, j));
        }
        stats[j] = {lo, hi};
    }
    Dataset out = d;
    out.X = apply_normalization(d.X, stats);
    out.norm_stats = std::move(stats);
    return out;
}

inline Split split_sequential(std::size_t n, std::size_t n_train, std::size_t n_val) {
    if (n_train + n_val > n) {
        throw BadCounts("split: n_train + n_val = " + std::to_string(n_train + n_val) +
                        " exceeds n = " + std::to_string(n));
    }
    Split s;
    s.train.resize(n_train);
    std::iota(s.train.begin(), s.train.end(), std::size_t{0});
    s.val.resize(n_val);
    std::iota(s.val.begin(), s.val.end(), n_train);
    s.test.resize(n - n_train - n_val);
    std::iota(s.test.begin(), s.test.end(), n_train + n_val);
    return s;
}

/// Sequential split applied to a seeded permutation of the rows.
inline Split split_shuffled(std::size_t n, std::size_t n_train, std::size_t n_val, std::uint64_t seed) {
    Split s = split_sequential(n, n_train, n_val);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(perm, rng);
    for (auto* part : {&s.train, &s.val, &s.test})
        for (auto& i : *part) i = perm[i];
    return s;
}

/// Replaces the validation partition by noisy copies of the test rows:
/// each copied value gets zero-mean Gaussian noise with standard deviation
/// `noise_frac` times that column's training standard deviation. The copies
/// are appended to the dataset.
inline std::pair<Dataset, Split> noisy_test_validation(const Dataset& d, const Split& s,
                                                       double noise_frac, std::uint64_t seed) {
    if (s.train.empty() || s.test.empty()) {
        throw BadCounts("noisy_test_validation: needs non-empty train and test partitions");
    }
    auto train_std = [&](const Mat& m, std::size_t j) {
        double mean = 0.0;
        for (auto i : s.train) mean += m(i, j);
        mean /= static_cast<double>(s.train.size());
        double var = 0.0;
        for (auto i : s.train) var += (m(i, j) - mean) * (m(i, j) - mean);
        return std::sqrt(var / static_cast<double>(s.train.size()));
    };
    std::vector<double> sx(d.m()), sy(d.outputs());
    for (std::size_t j = 0; j < d.m(); ++j) sx[j] = train_std(d.X, j);
    for (std::size_t q = 0; q < d.outputs(); ++q) sy[q] = train_std(d.Y, q);

    Dataset out = d;
    const std::size_t n0 = d.n();
    const std::size_t extra = s.test.size();
    out.X = Mat(n0 + extra, d.m());
    out.Y = Mat(n0 + extra, d.outputs());
    std::copy(d.X.data().begin(), d.X.data().end(), out.X.data().begin());
    std::copy(d.Y.data().begin(), d.Y.data().end(), out.Y.data().begin());
    Rng rng(seed);
    Split ns = s;
    ns.val.clear();
    for (std::size_t k = 0; k < extra; ++k) {
        const std::size_t src = s.test[k];
        const std::size_t dst = n0 + k;
        for (std::size_t j = 0; j < d.m(); ++j) {
            out.X(dst, j) = d.X(src, j) + noise_frac * sx[j] * standard_normal(rng);
        }
        for (std::size_t q = 0; q < d.outputs(); ++q) {
            out.Y(dst, q) = d.Y(src, q) + noise_frac * sy[q] * standard_normal(rng);
        }
        ns.val.push_back(dst);
    }
    return {std::move(out), std::move(ns)};
}

}  // namespace kscn
