#pragma once

// Metrics, Gram spectra, hyperparameter selection and the multi-trial
// harness (benchmarks, kernel-width sweeps, patience studies) with their
// CSV/JSON reports.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "kscn/baselines.hpp"
#include "kscn/dataio.hpp"
#include "kscn/error.hpp"
#include "kscn/kernelcore.hpp"
#include "kscn/kscn.hpp"
#include "kscn/model_io.hpp"
#include "kscn/numerics.hpp"
#include "kscn/randbase.hpp"

namespace kscn {

// ---------------------------------------------------------------- metrics

struct Metrics {
    double rmse = 0.0;
    std::optional<double> r2;
    std::string r2_absent;  // reason when r2 is missing
};

/// RMSE pools all n·M residuals; R² uses per-column means of Y_true.
inline Metrics compute_metrics(const Mat& Y_true, const Mat& Y_pred) {
    if (Y_true.rows() != Y_pred.rows() || Y_true.cols() != Y_pred.cols()) {
        throw DimensionMismatch("compute_metrics: shape mismatch");
    }
    if (Y_true.rows() == 0 || Y_true.cols() == 0) throw std::invalid_argument("compute_metrics: no rows");
    const std::size_t n = Y_true.rows(), M = Y_true.cols();
    double sse = 0.0, sst = 0.0;
    for (std::size_t q = 0; q < M; ++q) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += Y_true(i, q);
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double e = Y_true(i, q) - Y_pred(i, q);
            const double d = Y_true(i, q) - mean;
            sse += e * e;
            sst += d * d;
        }
    }
    Metrics m;
    m.rmse = std::sqrt(sse / static_cast<double>(n * M));
    if (sst > 0.0) {
        m.r2 = 1.0 - sse / sst;
    } else {
        m.r2_absent = "ZeroVariance";
    }
    return m;
}

// --------------------------------------------------------------- spectrum

struct SpectrumReport {
    std::vector<double> eigvals;               // descending, clamped at 0
    std::map<std::size_t, double> energy_topk; // k ∈ {1, 3, 5, 10}
    double effective_rank = 0.0;

    double energy(std::size_t k) const { return energy_topk.at(k); }
};

inline constexpr std::size_t kEnergyKs[] = {1, 3, 5, 10};

/// Share of the total spectrum held by the k largest eigenvalues.
inline double energy_fraction(const std::vector<double>& eigvals, std::size_t k) {
    double total = 0.0, top = 0.0;
    for (std::size_t i = 0; i < eigvals.size(); ++i) {
        total += eigvals[i];
        if (i < k) top += eigvals[i];
    }
    if (!(total > 0.0)) throw NumericError("energy_fraction: spectrum has zero mass");
    return top / total;
}

/// exp of the Shannon entropy of the normalized spectrum.
inline double effective_rank(const std::vector<double>& eigvals) {
    double total = 0.0;
    for (double v : eigvals) total += v;
    if (!(total > 0.0)) throw NumericError("effective_rank: spectrum has zero mass");
    double h = 0.0;
    for (double v : eigvals) {
        if (v <= 0.0) continue;
        const double p = v / total;
        h -= p * std::log(p);
    }
    return std::exp(h);
}

inline SpectrumReport spectrum(const Mat& K) {
    if (K.rows() != K.cols()) throw std::invalid_argument("spectrum: matrix is not square");
    if (!is_symmetric(K, 1e-10)) throw std::invalid_argument("spectrum: matrix is not symmetric");
    SpectrumReport rep;
    rep.eigvals = sym_eigvals(K);
    for (double& v : rep.eigvals) {
        if (v < -1e-10) throw NumericError("spectrum: eigenvalue " + std::to_string(v) + " below -1e-10");
        if (v < 0.0) v = 0.0;
    }
    for (std::size_t k : kEnergyKs) rep.energy_topk[k] = energy_fraction(rep.eigvals, k);
    rep.effective_rank = effective_rank(rep.eigvals);
    return rep;
}

struct SpectrumComparison {
    std::uint64_t seed = 0;
    std::size_t L = 0;
    SpectrumReport original;      // raw inputs only
    SpectrumReport unsupervised;  // L freely drawn nodes plus inputs
    SpectrumReport supervised;    // the trained KSCN's L nodes plus inputs
};

/// Per seed: trains a KSCN, then compares the training Gram of its nodes with
/// the Gram of L nodes drawn without the admissibility test (node j drawn from
/// the same half-range as the model's node j) and with the input-only Gram.
/// All three use the same c and the same normalized training rows.
inline std::vector<SpectrumComparison> spectrum_comparison(const Dataset& d, const Split& s,
                                                           const SupervisoryConfig& sup,
                                                           const KernelConfig& kc,
                                                           const std::vector<std::uint64_t>& seeds) {
    sup.validate();
    kc.validate();
    const Dataset nd = normalize_fit_apply(d, s);
    const Mat Xtr = nd.X.select_rows(s.train);
    const Mat none(Xtr.rows(), 0);
    const SpectrumReport original = spectrum(gram_build(none, Xtr, kc.c).K);
    std::vector<SpectrumComparison> out;
    for (std::uint64_t seed : seeds) {
        SupervisoryConfig cfg = sup;
        cfg.seed = seed;
        const KscnModel model = train_kscn(d, s, cfg, kc).model;
        SpectrumComparison cmp;
        cmp.seed = seed;
        cmp.L = model.nodes.size();
        cmp.original = original;
        cmp.supervised = spectrum(training_gram(model));
        Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::vector<HiddenNode> free_nodes;
        for (const auto& n : model.nodes) {
            free_nodes.push_back(draw_candidates(Xtr.cols(), n.gamma, 1, rng).front());
        }
        cmp.unsupervised = spectrum(gram_build(eval_nodes(free_nodes, Xtr), Xtr, kc.c).K);
        out.push_back(std::move(cmp));
    }
    return out;
}

// ------------------------------------------------------------- experiments

enum class ModelKind { Kscn, Scn, Rvfl, Krvfl, Rbfn };

inline constexpr ModelKind kAllModels[] = {ModelKind::Kscn, ModelKind::Scn, ModelKind::Rvfl,
                                           ModelKind::Krvfl, ModelKind::Rbfn};

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Kscn: return "kscn";
        case ModelKind::Scn: return "scn";
        case ModelKind::Rvfl: return "rvfl";
        case ModelKind::Krvfl: return "krvfl";
        case ModelKind::Rbfn: return "rbfn";
    }
    return "unknown";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view name) {
    for (ModelKind k : kAllModels)
        if (name == to_string(k)) return k;
    return std::nullopt;
}

inline bool is_kernel_model(ModelKind k) {
    return k == ModelKind::Kscn || k == ModelKind::Krvfl || k == ModelKind::Rbfn;
}

/// Resolved hyperparameters for every model family.
struct ModelSettings {
    SupervisoryConfig sup;
    KernelConfig kscn_kernel{10.0, 1e-3};
    std::size_t rvfl_L = 50;
    double rvfl_gamma = 1.0;
    std::size_t krvfl_L = 20;
    double krvfl_gamma = 1.0;
    KernelConfig krvfl_kernel{10.0, 1e-3};
    std::size_t rbfn_k = 50;
    double rbfn_c = 0.01;

    double kernel_width(ModelKind k) const {
        switch (k) {
            case ModelKind::Kscn: return kscn_kernel.c;
            case ModelKind::Krvfl: return krvfl_kernel.c;
            case ModelKind::Rbfn: return rbfn_c;
            default: throw ConfigError(std::string(to_string(k)) + ": model has no kernel width");
        }
    }
    void scale_kernel_width(ModelKind k, double factor) {
        switch (k) {
            case ModelKind::Kscn: kscn_kernel.c *= factor; break;
            case ModelKind::Krvfl: krvfl_kernel.c *= factor; break;
            case ModelKind::Rbfn: rbfn_c *= factor; break;
            default: throw ConfigError(std::string(to_string(k)) + ": model has no kernel width");
        }
    }
};

/// Raw data plus its fixed partition. Trial seeds vary only model randomness.
struct Experiment {
    Dataset data;
    Split split;
};

struct TrainedAny {
    AnyModel model;
    TrainTrace trace;
    std::size_t nodes = 0;
};

inline TrainedAny train_model(ModelKind kind, const Experiment& e, const ModelSettings& st,
                              std::uint64_t seed) {
    TrainedAny out;
    out.model.type = to_string(kind);
    auto single_step = [&](std::size_t L, const Mat& fitted) {
        StepRecord rec;
        rec.L = L;
        const Mat Ytr = e.data.Y.select_rows(e.split.train);
        rec.train_residual = std::sqrt(frobenius_sq(Ytr - fitted));
        out.trace.steps.push_back(rec);
        out.trace.best_L = L;
        out.trace.stop = StopReason::MaxNodes;
    };
    switch (kind) {
        case ModelKind::Kscn: {
            SupervisoryConfig sup = st.sup;
            sup.seed = seed;
            auto t = train_kscn(e.data, e.split, sup, st.kscn_kernel);
            out.nodes = t.model.nodes.size();
            out.trace = std::move(t.trace);
            out.model.model = std::move(t.model);
            break;
        }
        case ModelKind::Scn: {
            SupervisoryConfig sup = st.sup;
            sup.seed = seed;
            auto t = train_scn(e.data, e.split, sup);
            out.nodes = t.model.nodes.size();
            out.trace = std::move(t.trace);
            out.model.model = std::move(t.model);
            break;
        }
        case ModelKind::Rvfl: {
            auto m = train_rvfl(e.data, e.split, st.rvfl_L, st.rvfl_gamma, seed);
            out.nodes = m.nodes.size();
            single_step(out.nodes, predict(m, e.data.X.select_rows(e.split.train)));
            out.model.model = std::move(m);
            break;
        }
        case ModelKind::Krvfl: {
            KrvflOptions o;
            o.L = st.krvfl_L;
            o.gamma = st.krvfl_gamma;
            o.kernel = st.krvfl_kernel;
            o.seed = seed;
            auto t = train_krvfl(e.data, e.split, o);
            out.nodes = t.model.nodes.size();
            out.trace = std::move(t.trace);
            out.model.model = std::move(t.model);
            break;
        }
        case ModelKind::Rbfn: {
            auto m = train_rbfn(e.data, e.split, st.rbfn_k, st.rbfn_c, seed);
            out.nodes = m.centers.rows();
            single_step(out.nodes, predict(m, e.data.X.select_rows(e.split.train)));
            out.model.model = std::move(m);
            break;
        }
    }
    return out;
}

inline Metrics evaluate_rows(const AnyModel& model, const Dataset& d, const std::vector<std::size_t>& rows) {
    return compute_metrics(d.Y.select_rows(rows), predict(model, d.X.select_rows(rows)));
}

// --------------------------------------------------------------- parallel

namespace detail {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must be
/// written to per-index slots; the order of execution is irrelevant to them.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample standard deviation; 0 for fewer than two values.
inline double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

struct RunOptions {
    unsigned threads = 0;  // 0: machine parallelism
    bool timing = false;   // record wall time in reports (breaks byte-identical reruns)
};

// ----------------------------------------------------------------- trials

struct TrialRow {
    std::uint64_t seed = 0;
    ModelKind model = ModelKind::Kscn;
    std::size_t nodes = 0;
    Metrics train, val, test;
    double ms = 0.0;
    std::string error;  // non-empty for a failed trial

    bool ok() const { return error.empty(); }
};

struct Aggregate {
    ModelKind model = ModelKind::Kscn;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    double rmse_mean = 0.0, rmse_std = 0.0, rmse_min = 0.0, rmse_max = 0.0;
    double r2_mean = 0.0, r2_std = 0.0;
    std::size_t n_r2 = 0;
    double nodes_mean = 0.0, nodes_std = 0.0;
};

struct TrialReport {
    std::vector<TrialRow> rows;
    std::vector<Aggregate> aggregates;  // one per model, in request order

    const Aggregate& aggregate(ModelKind k) const {
        for (const auto& a : aggregates)
            if (a.model == k) return a;
        throw std::out_of_range(std::string("no aggregate for ") + to_string(k));
    }
};

/// Test-set aggregates for one model over its successful rows.
inline Aggregate aggregate_rows(ModelKind model, const std::vector<TrialRow>& rows) {
    Aggregate a;
    a.model = model;
    std::vector<double> rmse, r2, nodes;
    for (const auto& r : rows) {
        if (r.model != model) continue;
        if (!r.ok()) {
            ++a.n_failed;
            continue;
        }
        rmse.push_back(r.test.rmse);
        nodes.push_back(static_cast<double>(r.nodes));
        if (r.test.r2) r2.push_back(*r.test.r2);
    }
    a.n_ok = rmse.size();
    a.n_r2 = r2.size();
    if (!rmse.empty()) {
        a.rmse_mean = detail::mean_of(rmse);
        a.rmse_std = detail::std_of(rmse);
        a.rmse_min = *std::min_element(rmse.begin(), rmse.end());
        a.rmse_max = *std::max_element(rmse.begin(), rmse.end());
        a.nodes_mean = detail::mean_of(nodes);
        a.nodes_std = detail::std_of(nodes);
    }
    a.r2_mean = detail::mean_of(r2);
    a.r2_std = detail::std_of(r2);
    return a;
}

inline TrialRow run_single_trial(ModelKind kind, const Experiment& e, const ModelSettings& st,
                                 std::uint64_t seed, bool timing) {
    TrialRow row;
    row.seed = seed;
    row.model = kind;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const TrainedAny t = train_model(kind, e, st, seed);
        row.nodes = t.nodes;
        row.train = evaluate_rows(t.model, e.data, e.split.train);
        if (!e.split.val.empty()) row.val = evaluate_rows(t.model, e.data, e.split.val);
        if (e.split.test.empty()) throw BadCounts("empty test partition");
        row.test = evaluate_rows(t.model, e.data, e.split.test);
    } catch (const std::exception& ex) {
        row = TrialRow{};
        row.seed = seed;
        row.model = kind;
        row.error = ex.what();
    }
    if (timing) row.ms = elapsed_ms_since(t0);
    return row;
}

/// n_trials independent runs per model with seeds base_seed + i.
inline TrialReport run_trials(const Experiment& e, const ModelSettings& st,
                              const std::vector<ModelKind>& models, std::size_t n_trials,
                              std::uint64_t base_seed, const RunOptions& opt = {}) {
    if (n_trials == 0) throw ConfigError("n_trials: must be at least 1");
    if (models.empty()) throw ConfigError("models: must not be empty");
    TrialReport rep;
    rep.rows.resize(models.size() * n_trials);
    detail::parallel_for(rep.rows.size(), opt.threads, [&](std::size_t job) {
        const std::size_t mi = job / n_trials, t = job % n_trials;
        rep.rows[job] = run_single_trial(models[mi], e, st, base_seed + t, opt.timing);
    });
    for (ModelKind k : models) rep.aggregates.push_back(aggregate_rows(k, rep.rows));
    return rep;
}

// -------------------------------------------------------------- selection

/// n log-spaced values from lo to hi inclusive.
inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> v(n);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    v.back() = hi;
    return v;
}

struct SelectionGrids {
    std::vector<double> kernel_c = logspace(1e-2, 1e2, 41);
    std::vector<double> kernel_tau{0.1, 0.01, 0.001, 0.0001};
    std::vector<std::size_t> rvfl_L{5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90, 95, 100};
    std::vector<std::size_t> krvfl_L{0, 5, 10, 20, 30, 40, 50, 60, 80, 100};
    std::vector<std::size_t> rbfn_k{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    std::vector<double> rbfn_c = logspace(1e-4, 1e1, 26);
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

/// Mean validation MSE of each grid point over the selection seeds.
struct GridScores {
    std::vector<double> mean_val_mse;
    std::size_t best = 0;
};

namespace detail {

inline GridScores grid_search(std::size_t points, const std::vector<std::uint64_t>& seeds, unsigned threads,
                              const std::function<double(std::size_t, std::uint64_t)>& score) {
    if (points == 0) throw ConfigError("selection: empty grid");
    if (seeds.empty()) throw ConfigError("selection.seeds: must not be empty");
    std::vector<double> cell(points * seeds.size());
    parallel_for(cell.size(), threads, [&](std::size_t job) {
        const std::size_t p = job / seeds.size(), si = job % seeds.size();
        double v = std::numeric_limits<double>::infinity();
        try {
            v = score(p, seeds[si]);
        } catch (const Error&) {
        }
        cell[job] = std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    });
    GridScores g;
    g.mean_val_mse.resize(points);
    for (std::size_t p = 0; p < points; ++p) {
        double s = 0.0;
        for (std::size_t si = 0; si < seeds.size(); ++si) s += cell[p * seeds.size() + si];
        g.mean_val_mse[p] = s / static_cast<double>(seeds.size());
        if (g.mean_val_mse[p] < g.mean_val_mse[g.best]) g.best = p;
    }
    if (!std::isfinite(g.mean_val_mse[g.best])) throw NumericError("selection: every grid point failed");
    return g;
}

inline double val_mse(const Experiment& e, const AnyModel& m) {
    const double r = evaluate_rows(m, e.data, e.split.val).rmse;
    return r * r;
}

}  // namespace detail

/// Pair search of (c, τ) for KSCN on validation error.
inline KernelConfig select_kscn_kernel(const Experiment& e, const ModelSettings& st, const SelectionGrids& g,
                                       unsigned threads = 0) {
    const std::size_t nt = g.kernel_tau.size();
    auto scores = detail::grid_search(g.kernel_c.size() * nt, g.seeds, threads, [&](std::size_t p, std::uint64_t seed) {
        ModelSettings s = st;
        s.kscn_kernel = {g.kernel_c[p / nt], g.kernel_tau[p % nt]};
        return detail::val_mse(e, train_model(ModelKind::Kscn, e, s, seed).model);
    });
    return {g.kernel_c[scores.best / nt], g.kernel_tau[scores.best % nt]};
}

/// (L, γ) for RVFL over the configured γ pool.
inline std::pair<std::size_t, double> select_rvfl(const Experiment& e, const ModelSettings& st,
                                                  const SelectionGrids& g, unsigned threads = 0) {
    const auto& gammas = st.sup.gamma_pool;
    const std::size_t nl = g.rvfl_L.size();
    auto scores = detail::grid_search(gammas.size() * nl, g.seeds, threads, [&](std::size_t p, std::uint64_t seed) {
        ModelSettings s = st;
        s.rvfl_gamma = gammas[p / nl];
        s.rvfl_L = g.rvfl_L[p % nl];
        return detail::val_mse(e, train_model(ModelKind::Rvfl, e, s, seed).model);
    });
    return {g.rvfl_L[scores.best % nl], gammas[scores.best / nl]};
}

/// (L, c, τ) for KRVFL with γ fixed beforehand (normally RVFL's choice).
inline std::pair<std::size_t, KernelConfig> select_krvfl(const Experiment& e, const ModelSettings& st,
                                                         const SelectionGrids& g, unsigned threads = 0) {
    const std::size_t nt = g.kernel_tau.size(), nc = g.kernel_c.size();
    auto scores = detail::grid_search(g.krvfl_L.size() * nc * nt, g.seeds, threads,
                                      [&](std::size_t p, std::uint64_t seed) {
                                          ModelSettings s = st;
                                          s.krvfl_L = g.krvfl_L[p / (nc * nt)];
                                          s.krvfl_kernel = {g.kernel_c[(p / nt) % nc], g.kernel_tau[p % nt]};
                                          return detail::val_mse(e, train_model(ModelKind::Krvfl, e, s, seed).model);
                                      });
    const std::size_t b = scores.best;
    return {g.krvfl_L[b / (nc * nt)], KernelConfig{g.kernel_c[(b / nt) % nc], g.kernel_tau[b % nt]}};
}

/// (k, c) for RBFN; center counts above the training size are skipped.
inline std::pair<std::size_t, double> select_rbfn(const Experiment& e, const ModelSettings& st,
                                                  const SelectionGrids& g, unsigned threads = 0) {
    std::vector<std::size_t> ks;
    for (std::size_t k : g.rbfn_k)
        if (k >= 1 && k <= e.split.train.size()) ks.push_back(k);
    if (ks.empty()) throw ConfigError("rbfn.k_grid: no value fits the training partition");
    const std::size_t nc = g.rbfn_c.size();
    auto scores = detail::grid_search(ks.size() * nc, g.seeds, threads, [&](std::size_t p, std::uint64_t seed) {
        ModelSettings s = st;
        s.rbfn_k = ks[p / nc];
        s.rbfn_c = g.rbfn_c[p % nc];
        return detail::val_mse(e, train_model(ModelKind::Rbfn, e, s, seed).model);
    });
    return {ks[scores.best / nc], g.rbfn_c[scores.best % nc]};
}

/// Which hyperparameters still need a validation search.
struct SelectionNeeds {
    bool kscn_kernel = false;
    bool rvfl = false;
    bool krvfl = false;
    bool rbfn = false;
};

/// Fills the flagged settings by validation search. KRVFL takes RVFL's γ.
inline ModelSettings select_settings(const Experiment& e, ModelSettings st, const SelectionGrids& g,
                                     const SelectionNeeds& need, unsigned threads = 0) {
    if (need.kscn_kernel) st.kscn_kernel = select_kscn_kernel(e, st, g, threads);
    if (need.rvfl) std::tie(st.rvfl_L, st.rvfl_gamma) = select_rvfl(e, st, g, threads);
    if (need.krvfl) {
        st.krvfl_gamma = st.rvfl_gamma;
        std::tie(st.krvfl_L, st.krvfl_kernel) = select_krvfl(e, st, g, threads);
    }
    if (need.rbfn) std::tie(st.rbfn_k, st.rbfn_c) = select_rbfn(e, st, g, threads);
    return st;
}

// ------------------------------------------------------------------ sweep

struct SweepPoint {
    ModelKind model = ModelKind::Kscn;
    double multiplier = 1.0;
    double c = 0.0;
    Aggregate agg;
};

/// Retrains each kernel model with c' = multiplier·c* over n_trials seeds.
inline std::vector<SweepPoint> kernel_sweep(const Experiment& e, const ModelSettings& st,
                                            const std::vector<ModelKind>& models,
                                            const std::vector<double>& multipliers, std::size_t n_trials,
                                            std::uint64_t base_seed, const RunOptions& opt = {}) {
    if (multipliers.empty()) throw ConfigError("sweep.multipliers: must not be empty");
    for (double m : multipliers)
        if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("sweep.multipliers: entries must be positive");
    for (ModelKind k : models)
        if (!is_kernel_model(k)) throw ConfigError(std::string("sweep.models: ") + to_string(k) + " has no kernel width");
    if (n_trials == 0) throw ConfigError("n_trials: must be at least 1");

    std::vector<SweepPoint> pts;
    std::vector<ModelSettings> variants;
    for (ModelKind k : models) {
        for (double m : multipliers) {
            ModelSettings s = st;
            s.scale_kernel_width(k, m);
            pts.push_back({k, m, s.kernel_width(k), {}});
            variants.push_back(std::move(s));
        }
    }
    std::vector<TrialRow> rows(pts.size() * n_trials);
    detail::parallel_for(rows.size(), opt.threads, [&](std::size_t job) {
        const std::size_t p = job / n_trials, t = job % n_trials;
        rows[job] = run_single_trial(pts[p].model, e, variants[p], base_seed + t, opt.timing);
    });
    for (std::size_t p = 0; p < pts.size(); ++p) {
        std::vector<TrialRow> mine(rows.begin() + static_cast<std::ptrdiff_t>(p * n_trials),
                                   rows.begin() + static_cast<std::ptrdiff_t>((p + 1) * n_trials));
        pts[p].agg = aggregate_rows(pts[p].model, mine);
    }
    return pts;
}

/// (max mean RMSE)/(min mean RMSE) across one model's sweep points.
inline double sweep_ratio(const std::vector<SweepPoint>& pts, ModelKind k) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& p : pts) {
        if (p.model != k) continue;
        if (p.agg.n_ok == 0) return std::numeric_limits<double>::infinity();
        lo = std::min(lo, p.agg.rmse_mean);
        hi = std::max(hi, p.agg.rmse_mean);
    }
    if (!std::isfinite(lo)) throw std::out_of_range(std::string("no sweep points for ") + to_string(k));
    return hi / lo;
}

// --------------------------------------------------------- patience study

struct PatienceRow {
    std::size_t p_max = 0;
    Aggregate agg;
};

/// SCN and KSCN aggregates for each patience value.
inline std::vector<PatienceRow> patience_study(const Experiment& e, const ModelSettings& st,
                                               const std::vector<std::size_t>& values, std::size_t n_trials,
                                               std::uint64_t base_seed, const RunOptions& opt = {}) {
    for (std::size_t p : values)
        if (p == 0) throw ConfigError("patience_study.values: entries must be at least 1");
    const std::vector<ModelKind> models{ModelKind::Scn, ModelKind::Kscn};
    std::vector<PatienceRow> out;
    for (std::size_t p : values) {
        ModelSettings s = st;
        s.sup.patience = p;
        const TrialReport rep = run_trials(e, s, models, n_trials, base_seed, opt);
        for (const auto& a : rep.aggregates) out.push_back({p, a});
    }
    return out;
}

// ---------------------------------------------------------------- reports

namespace detail {

inline std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

inline Json metrics_json(const Metrics& m) {
    Json j{{"rmse", m.rmse}};
    if (m.r2) {
        j["r2"] = *m.r2;
    } else {
        j["r2"] = nullptr;
        j["r2_absent"] = m.r2_absent;
    }
    return j;
}

}  // namespace detail

inline Json to_json(const Aggregate& a) {
    return Json{{"model", to_string(a.model)}, {"n_ok", a.n_ok},         {"n_failed", a.n_failed},
                {"rmse_mean", a.rmse_mean},    {"rmse_std", a.rmse_std}, {"rmse_min", a.rmse_min},
                {"rmse_max", a.rmse_max},      {"r2_mean", a.r2_mean},   {"r2_std", a.r2_std},
                {"n_r2", a.n_r2},              {"nodes_mean", a.nodes_mean}, {"nodes_std", a.nodes_std}};
}

/// trials.csv: failed trials keep their seed and model with empty metric cells.
inline void write_trials_csv(std::ostream& out, const TrialReport& rep) {
    out << "seed,model,nodes,rmse_train,rmse_val,rmse_test,r2_test,ms\n";
    for (const auto& r : rep.rows) {
        out << r.seed << ',' << to_string(r.model) << ',';
        if (r.ok()) {
            out << r.nodes << ',' << format_number(r.train.rmse) << ',' << format_number(r.val.rmse) << ','
                << format_number(r.test.rmse) << ',' << detail::opt_number(r.test.r2);
        } else {
            out << ",,,,";
        }
        out << ',' << format_number(r.ms) << '\n';
    }
}

inline Json trials_json(const TrialReport& rep) {
    Json rows = Json::array();
    for (const auto& r : rep.rows) {
        Json j{{"seed", r.seed}, {"model", to_string(r.model)}, {"ms", r.ms}};
        if (r.ok()) {
            j["nodes"] = r.nodes;
            j["train"] = detail::metrics_json(r.train);
            j["val"] = detail::metrics_json(r.val);
            j["test"] = detail::metrics_json(r.test);
        } else {
            j["error"] = r.error;
        }
        rows.push_back(std::move(j));
    }
    Json aggs = Json::object();
    for (const auto& a : rep.aggregates) aggs[to_string(a.model)] = to_json(a);
    return Json{{"rows", std::move(rows)}, {"aggregates", std::move(aggs)}};
}

/// spectrum.csv: per kind, the eigenvalue at each rank averaged over seeds.
inline void write_spectrum_csv(std::ostream& out, const std::vector<SpectrumComparison>& cmp) {
    out << "kind,rank,eigval\n";
    if (cmp.empty()) return;
    auto emit = [&](const char* kind, auto pick) {
        const std::size_t n = pick(cmp.front()).eigvals.size();
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (const auto& c : cmp) s += pick(c).eigvals[i];
            out << kind << ',' << (i + 1) << ',' << format_number(s / static_cast<double>(cmp.size())) << '\n';
        }
    };
    emit("original", [](const SpectrumComparison& c) -> const SpectrumReport& { return c.original; });
    emit("unsupervised", [](const SpectrumComparison& c) -> const SpectrumReport& { return c.unsupervised; });
    emit("supervised", [](const SpectrumComparison& c) -> const SpectrumReport& { return c.supervised; });
}

/// Mean top-k energy per kind over the comparison seeds.
struct SpectrumSummary {
    std::map<std::size_t, double> original, unsupervised, supervised;
    double rank_original = 0.0, rank_unsupervised = 0.0, rank_supervised = 0.0;
};

inline SpectrumSummary summarize(const std::vector<SpectrumComparison>& cmp) {
    SpectrumSummary s;
    if (cmp.empty()) return s;
    const double n = static_cast<double>(cmp.size());
    for (const auto& c : cmp) {
        for (std::size_t k : kEnergyKs) {
            s.original[k] += c.original.energy(k) / n;
            s.unsupervised[k] += c.unsupervised.energy(k) / n;
            s.supervised[k] += c.supervised.energy(k) / n;
        }
        s.rank_original += c.original.effective_rank / n;
        s.rank_unsupervised += c.unsupervised.effective_rank / n;
        s.rank_supervised += c.supervised.effective_rank / n;
    }
    return s;
}

inline Json spectrum_json(const std::vector<SpectrumComparison>& cmp) {
    auto report = [](const SpectrumReport& r) {
        Json e = Json::object();
        for (const auto& [k, v] : r.energy_topk) e[std::to_string(k)] = v;
        return Json{{"energy_topk", e}, {"effective_rank", r.effective_rank}};
    };
    Json per_seed = Json::array();
    for (const auto& c : cmp) {
        per_seed.push_back({{"seed", c.seed},
                            {"L", c.L},
                            {"original", report(c.original)},
                            {"unsupervised", report(c.unsupervised)},
                            {"supervised", report(c.supervised)}});
    }
    const SpectrumSummary s = summarize(cmp);
    auto energies = [](const std::map<std::size_t, double>& m) {
        Json e = Json::object();
        for (const auto& [k, v] : m) e[std::to_string(k)] = v;
        return e;
    };
    Json agg{{"original", {{"energy_topk", energies(s.original)}, {"effective_rank", s.rank_original}}},
             {"unsupervised", {{"energy_topk", energies(s.unsupervised)}, {"effective_rank", s.rank_unsupervised}}},
             {"supervised", {{"energy_topk", energies(s.supervised)}, {"effective_rank", s.rank_supervised}}}};
    return Json{{"seeds", std::move(per_seed)}, {"aggregates", std::move(agg)}};
}

/// sweep.csv for one model: one row per multiplier.
inline void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& pts, ModelKind model) {
    out << "multiplier,mean_rmse,std_rmse\n";
    for (const auto& p : pts) {
        if (p.model != model) continue;
        out << format_number(p.multiplier) << ',' << format_number(p.agg.rmse_mean) << ','
            << format_number(p.agg.rmse_std) << '\n';
    }
}

inline Json sweep_json(const std::vector<SweepPoint>& pts) {
    Json rows = Json::array();
    Json aggs = Json::object();
    for (const auto& p : pts) {
        Json j = to_json(p.agg);
        j["multiplier"] = p.multiplier;
        j["c"] = p.c;
        rows.push_back(std::move(j));
        aggs[to_string(p.model)] = {{"ratio_max_min", sweep_ratio(pts, p.model)}};
    }
    return Json{{"points", std::move(rows)}, {"aggregates", std::move(aggs)}};
}

inline void write_patience_csv(std::ostream& out, const std::vector<PatienceRow>& rows) {
    out << "p_max,model,rmse_mean,rmse_std,nodes_mean,nodes_std\n";
    for (const auto& r : rows) {
        out << r.p_max << ',' << to_string(r.agg.model) << ',' << format_number(r.agg.rmse_mean) << ','
            << format_number(r.agg.rmse_std) << ',' << format_number(r.agg.nodes_mean) << ','
            << format_number(r.agg.nodes_std) << '\n';
    }
}

inline Json patience_json(const std::vector<PatienceRow>& rows) {
    Json arr = Json::array();
    for (const auto& r : rows) {
        Json j = to_json(r.agg);
        j["p_max"] = r.p_max;
        arr.push_back(std::move(j));
    }
    return Json{{"rows", std::move(arr)}};
}

/// trace.csv: one row per model state, L = 0 first.
inline void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
    out << "L,r,gamma,xi_min,xi_sum,train_residual,objective,val_error_sq,patience,ms\n";
    for (const auto& s : trace.steps) {
        std::string xi_min, xi_sum;
        if (!s.xi.empty()) {
            double lo = s.xi.front(), sum = 0.0;
            for (double v : s.xi) {
                lo = std::min(lo, v);
                sum += v;
            }
            xi_min = format_number(lo);
            xi_sum = format_number(sum);
        }
        out << s.L << ',' << format_number(s.r) << ',' << format_number(s.gamma) << ',' << xi_min << ','
            << xi_sum << ',' << format_number(s.train_residual) << ',' << format_number(s.objective) << ','
            << format_number(s.val_error_sq) << ',' << s.patience << ',' << format_number(s.elapsed_ms) << '\n';
    }
}

/// Zeroes every recorded step time so reruns serialize identically.
inline void clear_timing(TrainTrace& trace) {
    for (auto& s : trace.steps) s.elapsed_ms = 0.0;
}

template <typename Writer>
std::string render(Writer&& w) {
    std::ostringstream ss;
    w(ss);
    return ss.str();
}

}  // namespace kscn
