#pragma once

// Kernel stochastic configuration network trainer.
//
// Each step scores candidate nodes against the current kernel residual
// Y − K(K + τI)⁻¹Y, appends the winner's output column to the feature rows,
// refreshes the Gram matrix through the additive squared-distance identity
// and refits the kernel ridge solution. Validation error drives patience-based
// early stopping with roll-back to the best step.

#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kscn/dataio.hpp"
#include "kscn/error.hpp"
#include "kscn/kernelcore.hpp"
#include "kscn/numerics.hpp"
#include "kscn/randbase.hpp"

namespace kscn {

/// Everything needed to evaluate the test kernel on new data.
struct KscnModel {
    std::vector<HiddenNode> nodes;
    KernelConfig kernel;
    Mat alpha;         // n_train×M
    Mat x_train;       // normalized training inputs
    NormStats norm_stats;
    std::size_t m = 0;
    std::size_t M = 1;
};

/// Options for the shared kernel growth loop. With `supervision` set, nodes
/// come from configure_next_node against the kernel residual; otherwise each
/// node is a single unsupervised draw from [−gamma, gamma].
struct KernelGrowthOptions {
    std::optional<SupervisoryConfig> supervision;
    double gamma = 1.0;
    std::size_t L_max = 100;
    std::optional<std::size_t> patience;  // early stopping when set
    std::uint64_t seed = 1;
};

struct KernelGrowthResult {
    std::vector<HiddenNode> nodes;  // all accepted nodes, in order
    Mat best_alpha;
    Mat best_fitted;
    TrainTrace trace;
};

namespace detail {

inline KernelGrowthResult grow_kernel_network(const Mat& Xtr, const Mat& Ytr, const Mat& Xv,
                                              const Mat& Yv, const KernelConfig& kc,
                                              const KernelGrowthOptions& opt) {
    kc.validate();
    const bool has_val = Xv.rows() > 0;
    if (opt.patience && !has_val) throw BadCounts("early stopping needs a validation partition");

    Rng rng(opt.seed);
    const Mat no_h(Xtr.rows(), 0);
    const Mat no_hv(Xv.rows(), 0);
    GramState gram = gram_build(no_h, Xtr, kc.c);
    Mat val_sqdist = has_val ? pairwise_sqdist({no_hv, Xv}, {no_h, Xtr}) : Mat();

    KernelGrowthResult out;
    TrainTrace& trace = out.trace;
    EarlyStopper stopper(opt.patience.value_or(0));

    KernelSolution sol;
    Mat residual;
    auto refit = [&](StepRecord& rec) {
        sol = kernel_ridge_fit(gram.K, Ytr, kc.tau);
        residual = Ytr - sol.fitted;
        rec.train_residual = std::sqrt(frobenius_sq(residual));
        rec.objective = ridge_objective(Ytr, sol, kc.tau);
        if (has_val) {
            const Mat pred = kernel_predict(gaussian_from_sqdist(val_sqdist, kc.c), sol.alpha);
            rec.val_error_sq = frobenius_sq(Yv - pred);
        }
    };
    auto keep_best = [&](std::size_t L) {
        trace.best_L = L;
        out.best_alpha = sol.alpha;
        out.best_fitted = sol.fitted;
    };

    {
        const auto t0 = std::chrono::steady_clock::now();
        StepRecord rec;
        refit(rec);
        if (opt.patience) stopper.observe(rec.val_error_sq);
        keep_best(0);
        rec.elapsed_ms = elapsed_ms_since(t0);
        trace.steps.push_back(rec);
    }

    trace.stop = StopReason::MaxNodes;
    for (std::size_t L = 1; L <= opt.L_max; ++L) {
        const auto t0 = std::chrono::steady_clock::now();
        StepRecord rec;
        rec.L = L;
        HiddenNode node;
        std::vector<double> h;
        if (opt.supervision) {
            if (frobenius_sq(residual) == 0.0) {
                trace.stop = StopReason::ZeroResidual;
                break;
            }
            auto found = configure_next_node(Xtr, residual, *opt.supervision, L, rng);
            if (!found) {
                trace.stop = StopReason::NoAdmissibleNode;
                break;
            }
            node = std::move(found->node);
            h = std::move(found->h);
            rec.xi = std::move(found->xi);
            rec.r = found->r;
        } else {
            node = draw_candidates(Xtr.cols(), opt.gamma, 1, rng).front();
            h = eval_node(node, Xtr);
        }
        rec.gamma = node.gamma;

        gram = gram_extend(gram, h, kc.c);
        if (has_val) add_feature_sqdist(val_sqdist, eval_node(node, Xv), h);
        out.nodes.push_back(std::move(node));
        refit(rec);

        bool improved = true;
        if (opt.patience) {
            improved = stopper.observe(rec.val_error_sq);
            rec.patience = stopper.counter();
        }
        if (improved) keep_best(L);
        rec.elapsed_ms = elapsed_ms_since(t0);
        trace.steps.push_back(std::move(rec));
        if (opt.patience && stopper.exhausted()) {
            trace.stop = StopReason::Patience;
            break;
        }
    }
    return out;
}

inline KscnModel assemble_model(const Dataset& normalized, const Split& s, const KernelConfig& kc,
                                KernelGrowthResult&& grown) {
    KscnModel model;
    model.nodes.assign(grown.nodes.begin(),
                       grown.nodes.begin() + static_cast<std::ptrdiff_t>(grown.trace.best_L));
    model.kernel = kc;
    model.alpha = std::move(grown.best_alpha);
    model.x_train = normalized.X.select_rows(s.train);
    model.norm_stats = normalized.norm_stats;
    model.m = normalized.m();
    model.M = normalized.outputs();
    return model;
}

}  // namespace detail

/// Trains a KSCN on the split's training rows, early-stopping on its
/// validation rows. Returns the best-validation snapshot and the full trace.
inline Trained<KscnModel> train_kscn(const Dataset& raw, const Split& s, const SupervisoryConfig& sup,
                                     const KernelConfig& kc) {
    sup.validate();
    kc.validate();
    if (s.train.empty()) throw BadCounts("train_kscn: empty training partition");
    if (s.val.empty()) throw BadCounts("train_kscn: EmptyValidation");
    const Dataset d = normalize_fit_apply(raw, s);
    KernelGrowthOptions opt;
    opt.supervision = sup;
    opt.L_max = sup.L_max;
    opt.patience = sup.patience;
    opt.seed = sup.seed;
    auto grown = detail::grow_kernel_network(d.X.select_rows(s.train), d.Y.select_rows(s.train),
                                             d.X.select_rows(s.val), d.Y.select_rows(s.val), kc, opt);
    TrainTrace trace = grown.trace;
    return {detail::assemble_model(d, s, kc, std::move(grown)), std::move(trace)};
}

/// Kernel ridge model over fixed, given nodes (no search, no early stopping).
inline KscnModel fit_kernel_network(const Dataset& raw, const Split& s, std::vector<HiddenNode> nodes,
                                    const KernelConfig& kc) {
    kc.validate();
    if (s.train.empty()) throw BadCounts("fit_kernel_network: empty training partition");
    const Dataset d = normalize_fit_apply(raw, s);
    KscnModel model;
    model.x_train = d.X.select_rows(s.train);
    const Mat H = eval_nodes(nodes, model.x_train);
    const GramState g = gram_build(H, model.x_train, kc.c);
    model.alpha = kernel_ridge_fit(g.K, d.Y.select_rows(s.train), kc.tau).alpha;
    model.nodes = std::move(nodes);
    model.kernel = kc;
    model.norm_stats = d.norm_stats;
    model.m = d.m();
    model.M = d.outputs();
    return model;
}

/// Test kernel between normalized inputs and the model's training rows.
inline Mat test_kernel(const KscnModel& model, const Mat& X_normalized) {
    const Mat H = eval_nodes(model.nodes, model.x_train);
    const Mat Ht = eval_nodes(model.nodes, X_normalized);
    return cross_gram({H, model.x_train}, {Ht, X_normalized}, model.kernel.c);
}

/// Predictions for raw (unnormalized) inputs.
inline Mat predict(const KscnModel& model, const Mat& X_raw) {
    if (X_raw.cols() != model.m) {
        throw DimensionMismatch("predict: model expects " + std::to_string(model.m) +
                                " input columns, got " + std::to_string(X_raw.cols()));
    }
    const Mat X = apply_normalization(X_raw, model.norm_stats);
    return kernel_predict(test_kernel(model, X), model.alpha);
}

/// Gram matrix of the model's own training rows.
inline Mat training_gram(const KscnModel& model) {
    const Mat H = eval_nodes(model.nodes, model.x_train);
    return gram_build(H, model.x_train, model.kernel.c).K;
}

}  // namespace kscn
