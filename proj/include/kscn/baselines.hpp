#pragma once

// Comparison learners: random-basis network (RVFL), its kernelized form
// (KRVFL) and a Gaussian RBF network with centers sampled from the data.

#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "kscn/dataio.hpp"
#include "kscn/kernelcore.hpp"
#include "kscn/kscn.hpp"
#include "kscn/randbase.hpp"

namespace kscn {

// Same layout as ScnModel: random tanh nodes plus least-squares output weights.
using RvflModel = ScnModel;

// Same layout as KscnModel; only the node generation differs.
using KrvflModel = KscnModel;

struct RbfnModel {
    Mat centers;  // k×m, normalized training rows
    double c = 1.0;
    Mat beta;     // k×M
    NormStats norm_stats;
    std::size_t M = 1;
};

/// L nodes drawn without any admissibility test; β by least squares.
inline RvflModel train_rvfl(const Dataset& raw, const Split& s, std::size_t L, double gamma,
                            std::uint64_t seed) {
    if (L == 0) throw ConfigError("rvfl.L: must be at least 1");
    if (s.train.empty()) throw BadCounts("train_rvfl: empty training partition");
    const Dataset d = normalize_fit_apply(raw, s);
    Rng rng(seed);
    RvflModel model;
    model.nodes = draw_candidates(d.m(), gamma, L, rng);
    const Mat Xtr = d.X.select_rows(s.train);
    model.beta = least_squares(eval_nodes(model.nodes, Xtr), d.Y.select_rows(s.train));
    model.norm_stats = d.norm_stats;
    model.M = d.outputs();
    return model;
}

struct KrvflOptions {
    std::size_t L = 10;
    double gamma = 1.0;
    KernelConfig kernel;
    std::uint64_t seed = 1;
    /// When set, nodes are chosen by the supervisory search exactly as in
    /// train_kscn (its L_max and patience are ignored; L and no early stopping
    /// apply). Used to check that both trainers share one code path.
    std::optional<SupervisoryConfig> supervision;
};

/// Kernel ridge over L unsupervised random nodes plus the raw inputs.
inline Trained<KrvflModel> train_krvfl(const Dataset& raw, const Split& s, const KrvflOptions& o) {
    if (s.train.empty()) throw BadCounts("train_krvfl: empty training partition");
    o.kernel.validate();
    if (!o.supervision && !(o.gamma > 0.0)) throw ConfigError("krvfl.gamma: must be positive");
    const Dataset d = normalize_fit_apply(raw, s);
    KernelGrowthOptions opt;
    opt.supervision = o.supervision;
    opt.gamma = o.gamma;
    opt.L_max = o.L;
    opt.seed = o.seed;
    const Mat Xtr = d.X.select_rows(s.train);
    const Mat Ytr = d.Y.select_rows(s.train);
    KernelGrowthResult grown;
    if (o.supervision) {
        grown = detail::grow_kernel_network(Xtr, Ytr, d.X.select_rows(s.val), d.Y.select_rows(s.val),
                                            o.kernel, opt);
    } else {
        // Unsupervised nodes do not depend on intermediate fits: draw all of
        // them and solve once.
        Rng rng(o.seed);
        for (std::size_t j = 0; j < o.L; ++j) {
            grown.nodes.push_back(draw_candidates(d.m(), o.gamma, 1, rng).front());
        }
        grown.trace.best_L = o.L;
        const Mat H = eval_nodes(grown.nodes, Xtr);
        const GramState g = gram_build(H, Xtr, o.kernel.c);
        auto sol = kernel_ridge_fit(g.K, Ytr, o.kernel.tau);
        StepRecord rec;
        rec.L = o.L;
        rec.train_residual = std::sqrt(frobenius_sq(Ytr - sol.fitted));
        rec.objective = ridge_objective(Ytr, sol, o.kernel.tau);
        grown.trace.steps.push_back(rec);
        grown.best_alpha = std::move(sol.alpha);
        grown.best_fitted = std::move(sol.fitted);
    }
    TrainTrace trace = grown.trace;
    return {detail::assemble_model(d, s, o.kernel, std::move(grown)), std::move(trace)};
}

/// Φ_ij = exp(−‖x_i − center_j‖² / c).
inline Mat rbf_design(const Mat& X, const Mat& centers, double c) {
    const Mat none_x(X.rows(), 0), none_c(centers.rows(), 0);
    return gaussian_from_sqdist(pairwise_sqdist({none_x, X}, {none_c, centers}), c);
}

/// k centers sampled without replacement from the training rows; β by
/// minimum-norm least squares.
inline RbfnModel train_rbfn(const Dataset& raw, const Split& s, std::size_t k, double c,
                            std::uint64_t seed) {
    if (s.train.empty()) throw BadCounts("train_rbfn: empty training partition");
    if (k == 0 || k > s.train.size()) {
        throw ConfigError("rbfn.k: BadCenterCount, need 1 <= k <= " + std::to_string(s.train.size()) +
                          ", got " + std::to_string(k));
    }
    if (!(c > 0.0)) throw ConfigError("rbfn.c: must be positive");
    const Dataset d = normalize_fit_apply(raw, s);
    const Mat Xtr = d.X.select_rows(s.train);
    std::vector<std::size_t> order(Xtr.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(order, rng);
    order.resize(k);
    RbfnModel model;
    model.centers = Xtr.select_rows(order);
    model.c = c;
    model.beta = least_squares(rbf_design(Xtr, model.centers, c), d.Y.select_rows(s.train));
    model.norm_stats = d.norm_stats;
    model.M = d.outputs();
    return model;
}

inline Mat predict(const RbfnModel& model, const Mat& X_raw) {
    const Mat X = apply_normalization(X_raw, model.norm_stats);
    return rbf_design(X, model.centers, model.c) * model.beta;
}

}  // namespace kscn
