#pragma once

// Random hidden nodes, the supervisory admissibility test and the plain
// stochastic configuration network (linear output weights).

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kscn/dataio.hpp"
#include "kscn/error.hpp"
#include "kscn/numerics.hpp"
#include "kscn/random.hpp"

namespace kscn {

struct HiddenNode {
    std::vector<double> w;
    double b = 0.0;
    double gamma = 0.0;  // half-range the node was drawn from

    friend bool operator==(const HiddenNode&, const HiddenNode&) = default;
};

/// tanh(X·w + b), one entry per row of X.
inline std::vector<double> eval_node(const HiddenNode& node, const Mat& X) {
    if (X.cols() != node.w.size()) {
        throw DimensionMismatch("eval_node: node expects " + std::to_string(node.w.size()) +
                                " inputs, got " + std::to_string(X.cols()));
    }
    std::vector<double> h(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) h[i] = std::tanh(dot(X.row(i), node.w) + node.b);
    return h;
}

/// Output matrix with one column per node.
inline Mat eval_nodes(std::span<const HiddenNode> nodes, const Mat& X) {
    Mat H(X.rows(), nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) H.set_col(j, eval_node(nodes[j], X));
    return H;
}

/// T nodes with weights and bias i.i.d. uniform on [−gamma, gamma].
/// Each node consumes m + 1 draws: the m weights, then the bias.
inline std::vector<HiddenNode> draw_candidates(std::size_t m, double gamma, std::size_t T, Rng& rng) {
    if (T == 0) throw std::invalid_argument("draw_candidates: T must be at least 1");
    if (!(gamma > 0.0)) throw std::invalid_argument("draw_candidates: gamma must be positive");
    std::vector<HiddenNode> out(T);
    for (auto& node : out) {
        node.w.resize(m);
        for (auto& w : node.w) w = uniform(rng, -gamma, gamma);
        node.b = uniform(rng, -gamma, gamma);
        node.gamma = gamma;
    }
    return out;
}

/// ξ = (eᵀh)² / (hᵀh) − (1 − r − μ)·eᵀe.
/// Positive exactly when the candidate passes the supervisory inequality for
/// this output column.
inline double xi_score(std::span<const double> e, std::span<const double> h, double r, double mu) {
    if (e.size() != h.size()) throw DimensionMismatch("xi_score: length mismatch");
    const double hh = dot(h, h);
    if (!(hh > 0.0)) throw DegenerateCandidate();
    const double eh = dot(e, h);
    return eh * eh / hh - (1.0 - r - mu) * dot(e, e);
}

struct SupervisoryConfig {
    std::vector<double> gamma_pool{0.5, 1, 5, 10, 30, 50, 100, 150, 200, 250};
    std::vector<double> r_sequence{0.9, 0.99, 0.999, 0.9999, 0.99999};
    std::size_t candidates_per_step = 50;
    std::size_t L_max = 100;
    std::size_t patience = 5;
    std::uint64_t seed = 1;

    void validate() const {
        if (gamma_pool.empty()) throw ConfigError("gamma_pool: must not be empty");
        for (double g : gamma_pool)
            if (!(g > 0.0)) throw ConfigError("gamma_pool: entries must be positive");
        if (r_sequence.empty()) throw ConfigError("r_sequence: must not be empty");
        for (double r : r_sequence)
            if (!(r > 0.0 && r < 1.0)) throw ConfigError("r_sequence: entries must lie in (0, 1)");
        if (candidates_per_step == 0) throw ConfigError("candidates_per_step: must be at least 1");
        if (patience == 0) throw ConfigError("patience: must be at least 1");
    }
};

/// μ_L = (1 − r)/(L + 1): non-negative, ≤ 1 − r, tends to zero.
inline double mu_sequence(double r, std::size_t L) {
    return (1.0 - r) / static_cast<double>(L + 1);
}

struct ConfiguredNode {
    HiddenNode node;
    std::vector<double> h;   // output column on the reference inputs
    std::vector<double> xi;  // per-output scores
    double r = 0.0;
    std::size_t candidate_index = 0;  // position within the winning tier
};

/// Searches for the L-th node against `residual` (n×M).
///
/// Tiers are visited in order r ∈ r_sequence, then γ ∈ gamma_pool; each tier
/// draws a fresh pool of candidates and keeps those with ξ_q > 0 for every
/// output q. The first tier with an admissible candidate wins, and within it
/// the candidate with the largest Σ_q ξ_q (lowest index on ties). Returns
/// nullopt once every tier is exhausted.
inline std::optional<ConfiguredNode> configure_next_node(const Mat& X, const Mat& residual,
                                                         const SupervisoryConfig& config,
                                                         std::size_t L, Rng& rng) {
    if (residual.rows() != X.rows()) throw DimensionMismatch("configure_next_node: row mismatch");
    if (frobenius_sq(residual) == 0.0) {
        throw std::invalid_argument("configure_next_node: residual is identically zero");
    }
    const std::size_t M = residual.cols();
    std::vector<std::vector<double>> e(M);
    std::vector<double> ee(M);
    for (std::size_t q = 0; q < M; ++q) {
        e[q] = residual.col(q);
        ee[q] = dot(e[q], e[q]);
    }

    for (double r : config.r_sequence) {
        const double mu = mu_sequence(r, L);
        for (double gamma : config.gamma_pool) {
            auto pool = draw_candidates(X.cols(), gamma, config.candidates_per_step, rng);
            std::optional<ConfiguredNode> best;
            double best_total = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < pool.size(); ++c) {
                auto h = eval_node(pool[c], X);
                const double hh = dot(h, h);
                if (!(hh > 0.0)) continue;
                std::vector<double> xi(M);
                bool admissible = true;
                double total = 0.0;
                for (std::size_t q = 0; q < M; ++q) {
                    const double eh = dot(e[q], h);
                    xi[q] = eh * eh / hh - (1.0 - r - mu) * ee[q];
                    admissible = admissible && xi[q] > 0.0;
                    total += xi[q];
                }
                if (admissible && total > best_total) {
                    best_total = total;
                    best = ConfiguredNode{pool[c], std::move(h), std::move(xi), r, c};
                }
            }
            if (best) return best;
        }
    }
    return std::nullopt;
}

enum class StopReason { Patience, MaxNodes, NoAdmissibleNode, ZeroResidual };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::Patience: return "patience";
        case StopReason::MaxNodes: return "max_nodes";
        case StopReason::NoAdmissibleNode: return "no_admissible_node";
        case StopReason::ZeroResidual: return "zero_residual";
    }
    return "unknown";
}

/// One row per model state: L = 0 is the node-free starting model, then one
/// row per accepted node.
struct StepRecord {
    std::size_t L = 0;
    std::vector<double> xi;        // scores of the accepted node (empty at L = 0)
    double r = 0.0;                // tier the node was accepted in
    double gamma = 0.0;
    double train_residual = 0.0;   // ‖e_L‖_F on the training rows
    double objective = 0.0;        // regularized training objective (kernel models)
    double val_error_sq = 0.0;     // ‖e_v^L‖²_F
    std::size_t patience = 0;
    double elapsed_ms = 0.0;       // wall time of the step; not part of equality

    bool same_values(const StepRecord& o) const {
        return L == o.L && xi == o.xi && r == o.r && gamma == o.gamma &&
               train_residual == o.train_residual && objective == o.objective &&
               val_error_sq == o.val_error_sq && patience == o.patience;
    }
};

struct TrainTrace {
    std::vector<StepRecord> steps;
    StopReason stop = StopReason::MaxNodes;
    std::size_t best_L = 0;

    /// Nodes accepted during training (may exceed the returned model's size
    /// after roll-back).
    std::size_t accepted_nodes() const { return steps.empty() ? 0 : steps.size() - 1; }

    bool same_values(const TrainTrace& o) const {
        if (steps.size() != o.steps.size() || stop != o.stop || best_L != o.best_L) return false;
        for (std::size_t i = 0; i < steps.size(); ++i)
            if (!steps[i].same_values(o.steps[i])) return false;
        return true;
    }
};

/// Patience bookkeeping shared by every early-stopped trainer. The counter
/// grows by one whenever a step fails to lower the validation error of the
/// step before it and is never reset; training stops once it reaches the
/// limit. The lowest validation error seen so far marks the roll-back point.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience) : max_patience_(patience) {}

    /// Registers the validation error of the newest model. Returns true if it
    /// is the best so far.
    bool observe(double val_error_sq) {
        if (!started_) {
            started_ = true;
            prev_ = best_ = val_error_sq;
            return true;
        }
        if (!(val_error_sq < prev_)) ++counter_;
        prev_ = val_error_sq;
        if (val_error_sq < best_) {
            best_ = val_error_sq;
            return true;
        }
        return false;
    }

    bool exhausted() const { return counter_ >= max_patience_; }
    std::size_t counter() const { return counter_; }
    double best() const { return best_; }

private:
    std::size_t max_patience_;
    std::size_t counter_ = 0;
    bool started_ = false;
    double prev_ = 0.0;
    double best_ = 0.0;
};

struct ScnModel {
    std::vector<HiddenNode> nodes;
    Mat beta;  // L×M
    NormStats norm_stats;
    std::size_t M = 1;
};

/// Prediction from raw (unnormalized) inputs.
inline Mat predict(const ScnModel& model, const Mat& X_raw) {
    const Mat X = apply_normalization(X_raw, model.norm_stats);
    if (model.nodes.empty()) return Mat(X.rows(), model.M);
    return eval_nodes(model.nodes, X) * model.beta;
}

template <typename Model>
struct Trained {
    Model model;
    TrainTrace trace;
};

inline double elapsed_ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

/// Incremental SCN: nodes are configured against the linear residual
/// Y − Hβ and β is refit by global least squares after each addition.
/// Stops on patience, L_max, or when no admissible node exists; returns the
/// best-validation snapshot.
inline Trained<ScnModel> train_scn(const Dataset& raw, const Split& s, const SupervisoryConfig& config) {
    config.validate();
    if (s.train.empty()) throw BadCounts("train_scn: empty training partition");
    if (s.val.empty()) throw BadCounts("train_scn: empty validation partition");
    const Dataset d = normalize_fit_apply(raw, s);
    const Mat Xtr = d.X.select_rows(s.train);
    const Mat Ytr = d.Y.select_rows(s.train);
    const Mat Xv = d.X.select_rows(s.val);
    const Mat Yv = d.Y.select_rows(s.val);
    const std::size_t n = Xtr.rows();
    const std::size_t M = Ytr.cols();

    Rng rng(config.seed);
    std::vector<HiddenNode> nodes;
    Mat H(n, 0), Hv(Xv.rows(), 0);
    Mat beta(0, M);
    Mat residual = Ytr;

    TrainTrace trace;
    EarlyStopper stopper(config.patience);
    Mat best_beta = beta;
    {
        StepRecord rec;
        rec.train_residual = std::sqrt(frobenius_sq(residual));
        rec.val_error_sq = frobenius_sq(Yv);
        stopper.observe(rec.val_error_sq);
        trace.steps.push_back(rec);
    }

    trace.stop = StopReason::MaxNodes;
    for (std::size_t L = 1; L <= config.L_max; ++L) {
        const auto t0 = std::chrono::steady_clock::now();
        if (frobenius_sq(residual) == 0.0) {
            trace.stop = StopReason::ZeroResidual;
            break;
        }
        auto found = configure_next_node(Xtr, residual, config, L, rng);
        if (!found) {
            trace.stop = StopReason::NoAdmissibleNode;
            break;
        }
        nodes.push_back(found->node);
        H = H.hcat(Mat::column(found->h));
        Hv = Hv.hcat(Mat::column(eval_node(found->node, Xv)));
        beta = least_squares(H, Ytr);
        residual = Ytr - H * beta;
        const Mat val_res = Yv - Hv * beta;

        StepRecord rec;
        rec.L = L;
        rec.xi = found->xi;
        rec.r = found->r;
        rec.gamma = found->node.gamma;
        rec.train_residual = std::sqrt(frobenius_sq(residual));
        rec.val_error_sq = frobenius_sq(val_res);
        if (stopper.observe(rec.val_error_sq)) {
            trace.best_L = L;
            best_beta = beta;
        }
        rec.patience = stopper.counter();
        rec.elapsed_ms = elapsed_ms_since(t0);
        trace.steps.push_back(rec);
        if (stopper.exhausted()) {
            trace.stop = StopReason::Patience;
            break;
        }
    }

    ScnModel model;
    model.nodes.assign(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(trace.best_L));
    model.beta = best_beta;
    model.norm_stats = d.norm_stats;
    model.M = M;
    return {std::move(model), std::move(trace)};
}

}  // namespace kscn
