#pragma once

// Run configuration: a JSON document validated key by key (unknown keys are
// errors), resolved into an Experiment plus ModelSettings. Missing
// hyperparameters are chosen later by validation search.

#include <cstdint>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <tuple>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kscn/dataio.hpp"
#include "kscn/error.hpp"
#include "kscn/evalkit.hpp"

namespace kscn {

struct DatasetSource {
    std::string source = "builtin:numerical";  // or "csv"
    std::size_t n = 600;                       // builtin only
    std::uint64_t seed = 7;                    // data generation and split shuffle
    std::string path;                          // csv only
    std::vector<std::size_t> target_cols;      // csv only
    std::string augmentation = "none";         // none | debutanizer | powerload
};

struct SplitConfig {
    std::size_t n_train = 200;
    std::size_t n_val = 100;
    std::optional<bool> shuffle;          // default: builtin yes, csv no
    std::string validation = "partition"; // partition | noisy_test
    double noise_frac = 0.05;
};

struct RunConfig {
    std::string run_name = "numerical";
    DatasetSource dataset;
    SplitConfig split;
    ModelKind model = ModelKind::Kscn;  // train
    std::vector<ModelKind> models{std::begin(kAllModels), std::end(kAllModels)};
    SupervisoryConfig sup;
    std::uint64_t seed = 1;  // base seed for every model-side random draw
    std::size_t n_trials = 50;
    std::string out = "out";
    unsigned threads = 0;
    bool timing = false;

    // Hyperparameters; unset values are selected on validation error.
    std::optional<double> kscn_c, kscn_tau;
    std::optional<std::size_t> rvfl_L;
    std::optional<double> rvfl_gamma;
    std::optional<std::size_t> krvfl_L;
    std::optional<double> krvfl_gamma, krvfl_c, krvfl_tau;
    std::optional<std::size_t> rbfn_k;
    std::optional<double> rbfn_c;
    SelectionGrids grids;
    std::size_t selection_seeds = 5;

    std::vector<double> sweep_multipliers{0.1, 0.2, 0.5, 1, 2, 5, 10};
    std::vector<ModelKind> sweep_models{ModelKind::Kscn, ModelKind::Rbfn};
    std::size_t sweep_trials = 20;
    std::size_t spectrum_seeds = 10;
    std::vector<std::size_t> patience_values;  // empty: no patience study
    std::optional<std::size_t> patience_trials;
};

namespace detail {

/// Object reader that remembers which keys were consumed.
class ConfigObject {
public:
    ConfigObject(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + "expected an object");
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end() || it->is_null()) return nullptr;
        return &*it;
    }

    template <typename T>
    void read(const std::string& key, T& dst) {
        if (const Json* v = find(key)) dst = convert<T>(*v, key_path(key));
    }
    template <typename T>
    void read(const std::string& key, std::optional<T>& dst) {
        if (const Json* v = find(key)) dst = convert<T>(*v, key_path(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("config key '" + key_path(it.key()) + "': unknown key");
        }
    }

    template <typename T>
    static T convert(const Json& v, const std::string& path) {
        auto fail = [&](const char* what) { return ConfigError("config key '" + path + "': expected " + what); };
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw fail("a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw fail("a string");
            return v.get<std::string>();
        } else if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw fail("a number");
            return v.get<double>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer() || v.get<long long>() < 0) throw fail("a non-negative integer");
            return v.get<T>();
        } else if constexpr (std::is_same_v<T, ModelKind>) {
            if (!v.is_string()) throw fail("a model name");
            auto k = parse_model_kind(v.get<std::string>());
            if (!k) throw ConfigError("config key '" + path + "': unknown model '" + v.get<std::string>() + "'");
            return *k;
        } else {
            if (!v.is_array()) throw fail("an array");
            T out;
            for (std::size_t i = 0; i < v.size(); ++i) {
                out.push_back(convert<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
            }
            return out;
        }
    }

private:
    std::string where() const { return path_.empty() ? "config: " : "config key '" + path_ + "': "; }

    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

/// A grid is either an explicit list or {"min", "max", "points"} on a log scale.
inline void read_grid(ConfigObject& o, const std::string& key, std::vector<double>& dst) {
    const Json* v = o.find(key);
    if (!v) return;
    const std::string path = o.key_path(key);
    if (v->is_array()) {
        dst = ConfigObject::convert<std::vector<double>>(*v, path);
    } else {
        ConfigObject g(*v, path);
        double lo = 0.0, hi = 0.0;
        std::size_t points = 0;
        g.read("min", lo);
        g.read("max", hi);
        g.read("points", points);
        g.finish();
        if (!(lo > 0.0) || !(hi >= lo) || points == 0) {
            throw ConfigError("config key '" + path + "': need 0 < min <= max and points >= 1");
        }
        dst = logspace(lo, hi, points);
    }
    if (dst.empty()) throw ConfigError("config key '" + path + "': must not be empty");
    for (double x : dst)
        if (!(x > 0.0)) throw ConfigError("config key '" + path + "': entries must be positive");
}

inline void require_positive(const std::optional<double>& v, const std::string& path) {
    if (v && !(*v > 0.0)) throw ConfigError("config key '" + path + "': must be positive");
}

}  // namespace detail

/// Parses and validates a config document on top of the defaults.
inline RunConfig parse_run_config(const Json& j, RunConfig cfg = {}) {
    using detail::ConfigObject;
    ConfigObject root(j, "");
    root.read("run_name", cfg.run_name);
    if (const Json* v = root.find("dataset")) {
        ConfigObject o(*v, "dataset");
        o.read("source", cfg.dataset.source);
        o.read("n", cfg.dataset.n);
        o.read("seed", cfg.dataset.seed);
        o.read("path", cfg.dataset.path);
        o.read("target_cols", cfg.dataset.target_cols);
        o.read("augmentation", cfg.dataset.augmentation);
        o.finish();
    }
    if (const Json* v = root.find("split")) {
        ConfigObject o(*v, "split");
        o.read("n_train", cfg.split.n_train);
        o.read("n_val", cfg.split.n_val);
        o.read("shuffle", cfg.split.shuffle);
        o.read("validation", cfg.split.validation);
        o.read("noise_frac", cfg.split.noise_frac);
        o.finish();
    }
    root.read("model", cfg.model);
    root.read("models", cfg.models);
    if (const Json* v = root.find("supervisory")) {
        ConfigObject o(*v, "supervisory");
        o.read("gamma_pool", cfg.sup.gamma_pool);
        o.read("r_sequence", cfg.sup.r_sequence);
        o.read("candidates_per_step", cfg.sup.candidates_per_step);
        o.read("L_max", cfg.sup.L_max);
        o.read("patience", cfg.sup.patience);
        o.read("seed", cfg.seed);
        o.finish();
    }
    root.read("seed", cfg.seed);
    root.read("n_trials", cfg.n_trials);
    root.read("out", cfg.out);
    root.read("threads", cfg.threads);
    root.read("timing", cfg.timing);
    if (const Json* v = root.find("kernel")) {
        ConfigObject o(*v, "kernel");
        o.read("c", cfg.kscn_c);
        o.read("tau", cfg.kscn_tau);
        detail::read_grid(o, "c_grid", cfg.grids.kernel_c);
        detail::read_grid(o, "tau_grid", cfg.grids.kernel_tau);
        o.finish();
    }
    if (const Json* v = root.find("rvfl")) {
        ConfigObject o(*v, "rvfl");
        o.read("L", cfg.rvfl_L);
        o.read("gamma", cfg.rvfl_gamma);
        o.read("L_grid", cfg.grids.rvfl_L);
        o.finish();
    }
    if (const Json* v = root.find("krvfl")) {
        ConfigObject o(*v, "krvfl");
        o.read("L", cfg.krvfl_L);
        o.read("gamma", cfg.krvfl_gamma);
        o.read("c", cfg.krvfl_c);
        o.read("tau", cfg.krvfl_tau);
        o.read("L_grid", cfg.grids.krvfl_L);
        o.finish();
    }
    if (const Json* v = root.find("rbfn")) {
        ConfigObject o(*v, "rbfn");
        o.read("k", cfg.rbfn_k);
        o.read("c", cfg.rbfn_c);
        o.read("k_grid", cfg.grids.rbfn_k);
        detail::read_grid(o, "c_grid", cfg.grids.rbfn_c);
        o.finish();
    }
    if (const Json* v = root.find("selection")) {
        ConfigObject o(*v, "selection");
        o.read("seeds", cfg.selection_seeds);
        o.finish();
    }
    if (const Json* v = root.find("sweep")) {
        ConfigObject o(*v, "sweep");
        o.read("multipliers", cfg.sweep_multipliers);
        o.read("models", cfg.sweep_models);
        o.read("n_trials", cfg.sweep_trials);
        o.finish();
    }
    if (const Json* v = root.find("spectrum")) {
        ConfigObject o(*v, "spectrum");
        o.read("seeds", cfg.spectrum_seeds);
        o.finish();
    }
    if (const Json* v = root.find("patience_study")) {
        ConfigObject o(*v, "patience_study");
        o.read("values", cfg.patience_values);
        o.read("n_trials", cfg.patience_trials);
        o.finish();
    }
    root.finish();
    return cfg;
}

/// Checks cross-field constraints. Called after flags are applied.
inline void validate(const RunConfig& c) {
    auto bad = [](const std::string& key, const std::string& what) {
        return ConfigError("config key '" + key + "': " + what);
    };
    if (c.run_name.empty() || c.run_name.find('/') != std::string::npos || c.run_name == "." || c.run_name == "..") {
        throw bad("run_name", "must be a plain directory name");
    }
    if (c.dataset.source == "builtin:numerical") {
        if (c.dataset.n == 0) throw bad("dataset.n", "must be at least 1");
    } else if (c.dataset.source == "csv") {
        if (c.dataset.path.empty()) throw bad("dataset.path", "required for csv sources");
        if (c.dataset.target_cols.empty()) throw bad("dataset.target_cols", "required for csv sources");
    } else {
        throw bad("dataset.source", "expected 'builtin:numerical' or 'csv', got '" + c.dataset.source + "'");
    }
    const auto& aug = c.dataset.augmentation;
    if (aug != "none" && aug != "debutanizer" && aug != "powerload") {
        throw bad("dataset.augmentation", "expected none, debutanizer or powerload");
    }
    if (c.split.validation != "partition" && c.split.validation != "noisy_test") {
        throw bad("split.validation", "expected partition or noisy_test");
    }
    if (!(c.split.noise_frac >= 0.0)) throw bad("split.noise_frac", "must be non-negative");
    if (c.split.n_train == 0) throw bad("split.n_train", "must be at least 1");
    if (c.models.empty()) throw bad("models", "must not be empty");
    try {
        c.sup.validate();
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        const auto colon = what.find(':');
        throw bad("supervisory." + what.substr(0, colon), what.substr(colon + 2));
    }
    if (c.n_trials == 0) throw bad("n_trials", "must be at least 1");
    detail::require_positive(c.kscn_c, "kernel.c");
    detail::require_positive(c.kscn_tau, "kernel.tau");
    detail::require_positive(c.rvfl_gamma, "rvfl.gamma");
    detail::require_positive(c.krvfl_gamma, "krvfl.gamma");
    detail::require_positive(c.krvfl_c, "krvfl.c");
    detail::require_positive(c.krvfl_tau, "krvfl.tau");
    detail::require_positive(c.rbfn_c, "rbfn.c");
    if (c.rvfl_L && *c.rvfl_L == 0) throw bad("rvfl.L", "must be at least 1");
    if (c.rbfn_k && *c.rbfn_k == 0) throw bad("rbfn.k", "must be at least 1");
    if (c.selection_seeds == 0) throw bad("selection.seeds", "must be at least 1");
    if (c.sweep_trials == 0) throw bad("sweep.n_trials", "must be at least 1");
    for (double m : c.sweep_multipliers)
        if (!(m > 0.0)) throw bad("sweep.multipliers", "entries must be positive");
    for (ModelKind k : c.sweep_models)
        if (!is_kernel_model(k)) throw bad("sweep.models", std::string(to_string(k)) + " has no kernel width");
    if (c.spectrum_seeds == 0) throw bad("spectrum.seeds", "must be at least 1");
    for (std::size_t p : c.patience_values)
        if (p == 0) throw bad("patience_study.values", "entries must be at least 1");
}

inline RunConfig load_run_config(const std::filesystem::path& path, RunConfig defaults = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return parse_run_config(j, std::move(defaults));
}

/// Seeds used for hyperparameter selection: disjoint from the trial seeds.
inline std::vector<std::uint64_t> selection_seed_list(const RunConfig& c) {
    std::vector<std::uint64_t> s;
    for (std::size_t i = 0; i < c.selection_seeds; ++i) s.push_back(c.seed + c.n_trials + i);
    return s;
}

inline Experiment build_experiment(const RunConfig& c) {
    Experiment e;
    if (c.dataset.source == "builtin:numerical") {
        e.data = gen_numerical(c.dataset.n, c.dataset.seed);
    } else {
        e.data = load_csv(c.dataset.path, c.dataset.target_cols);
    }
    if (c.dataset.augmentation == "debutanizer") e.data = augment_debutanizer(e.data);
    if (c.dataset.augmentation == "powerload") e.data = augment_powerload(e.data);

    const bool shuffle = c.split.shuffle.value_or(c.dataset.source == "builtin:numerical");
    const std::size_t n_val = c.split.validation == "noisy_test" ? 0 : c.split.n_val;
    e.split = shuffle ? split_shuffled(e.data.n(), c.split.n_train, n_val, c.dataset.seed)
                      : split_sequential(e.data.n(), c.split.n_train, n_val);
    if (c.split.validation == "noisy_test") {
        std::tie(e.data, e.split) = noisy_test_validation(e.data, e.split, c.split.noise_frac, c.dataset.seed);
    }
    return e;
}

/// Settings from the config, with unset values left at their defaults.
inline ModelSettings base_settings(const RunConfig& c) {
    ModelSettings st;
    st.sup = c.sup;
    st.sup.seed = c.seed;
    if (c.kscn_c) st.kscn_kernel.c = *c.kscn_c;
    if (c.kscn_tau) st.kscn_kernel.tau = *c.kscn_tau;
    if (c.rvfl_L) st.rvfl_L = *c.rvfl_L;
    if (c.rvfl_gamma) st.rvfl_gamma = *c.rvfl_gamma;
    if (c.krvfl_L) st.krvfl_L = *c.krvfl_L;
    st.krvfl_gamma = c.krvfl_gamma.value_or(st.rvfl_gamma);
    if (c.krvfl_c) st.krvfl_kernel.c = *c.krvfl_c;
    if (c.krvfl_tau) st.krvfl_kernel.tau = *c.krvfl_tau;
    if (c.rbfn_k) st.rbfn_k = *c.rbfn_k;
    if (c.rbfn_c) st.rbfn_c = *c.rbfn_c;
    return st;
}

/// Hyperparameters the requested models need but the config leaves unset.
inline SelectionNeeds selection_needs(const RunConfig& c, const std::vector<ModelKind>& models) {
    auto uses = [&](ModelKind k) { return std::find(models.begin(), models.end(), k) != models.end(); };
    SelectionNeeds n;
    n.kscn_kernel = uses(ModelKind::Kscn) && (!c.kscn_c || !c.kscn_tau);
    n.krvfl = uses(ModelKind::Krvfl) && (!c.krvfl_L || !c.krvfl_c || !c.krvfl_tau);
    n.rvfl = (uses(ModelKind::Rvfl) && (!c.rvfl_L || !c.rvfl_gamma)) || (n.krvfl && !c.krvfl_gamma);
    n.rbfn = uses(ModelKind::Rbfn) && (!c.rbfn_k || !c.rbfn_c);
    return n;
}

/// Validation search for whatever is unset. A partly given family is searched
/// only along its missing dimensions.
inline ModelSettings resolve_settings(const RunConfig& c, const Experiment& e,
                                      const std::vector<ModelKind>& models) {
    const SelectionNeeds need = selection_needs(c, models);
    SelectionGrids g = c.grids;
    g.seeds = selection_seed_list(c);
    ModelSettings st = base_settings(c);
    if (need.kscn_kernel) {
        SelectionGrids gk = g;
        if (c.kscn_c) gk.kernel_c = {*c.kscn_c};
        if (c.kscn_tau) gk.kernel_tau = {*c.kscn_tau};
        st.kscn_kernel = select_kscn_kernel(e, st, gk, c.threads);
    }
    if (need.rvfl) {
        SelectionGrids gr = g;
        ModelSettings sr = st;
        if (c.rvfl_L) gr.rvfl_L = {*c.rvfl_L};
        if (c.rvfl_gamma) sr.sup.gamma_pool = {*c.rvfl_gamma};
        std::tie(st.rvfl_L, st.rvfl_gamma) = select_rvfl(e, sr, gr, c.threads);
    }
    st.krvfl_gamma = c.krvfl_gamma.value_or(st.rvfl_gamma);
    if (need.krvfl) {
        SelectionGrids gv = g;
        if (c.krvfl_L) gv.krvfl_L = {*c.krvfl_L};
        if (c.krvfl_c) gv.kernel_c = {*c.krvfl_c};
        if (c.krvfl_tau) gv.kernel_tau = {*c.krvfl_tau};
        std::tie(st.krvfl_L, st.krvfl_kernel) = select_krvfl(e, st, gv, c.threads);
    }
    if (need.rbfn) {
        SelectionGrids gb = g;
        if (c.rbfn_k) gb.rbfn_k = {*c.rbfn_k};
        if (c.rbfn_c) gb.rbfn_c = {*c.rbfn_c};
        std::tie(st.rbfn_k, st.rbfn_c) = select_rbfn(e, st, gb, c.threads);
    }
    return st;
}

/// Writes every resolved value back so the snapshot replays without search.
inline void pin_settings(RunConfig& c, const ModelSettings& st, const std::vector<ModelKind>& models) {
    auto uses = [&](ModelKind k) { return std::find(models.begin(), models.end(), k) != models.end(); };
    if (uses(ModelKind::Kscn)) {
        c.kscn_c = st.kscn_kernel.c;
        c.kscn_tau = st.kscn_kernel.tau;
    }
    if (uses(ModelKind::Rvfl) || uses(ModelKind::Krvfl)) {
        c.rvfl_L = st.rvfl_L;
        c.rvfl_gamma = st.rvfl_gamma;
    }
    if (uses(ModelKind::Krvfl)) {
        c.krvfl_L = st.krvfl_L;
        c.krvfl_gamma = st.krvfl_gamma;
        c.krvfl_c = st.krvfl_kernel.c;
        c.krvfl_tau = st.krvfl_kernel.tau;
    }
    if (uses(ModelKind::Rbfn)) {
        c.rbfn_k = st.rbfn_k;
        c.rbfn_c = st.rbfn_c;
    }
}

inline Json to_json(const RunConfig& c) {
    auto names = [](const std::vector<ModelKind>& ms) {
        Json a = Json::array();
        for (ModelKind k : ms) a.push_back(to_string(k));
        return a;
    };
    auto opt = [](const auto& v) { return v ? Json(*v) : Json(nullptr); };
    Json split{{"n_train", c.split.n_train},
               {"n_val", c.split.n_val},
               {"shuffle", c.split.shuffle.value_or(c.dataset.source == "builtin:numerical")},
               {"validation", c.split.validation},
               {"noise_frac", c.split.noise_frac}};
    Json dataset{{"source", c.dataset.source}, {"n", c.dataset.n}, {"seed", c.dataset.seed},
                 {"augmentation", c.dataset.augmentation}};
    if (c.dataset.source == "csv") {
        dataset["path"] = c.dataset.path;
        dataset["target_cols"] = c.dataset.target_cols;
    }
    return Json{
        {"run_name", c.run_name},
        {"dataset", dataset},
        {"split", split},
        {"model", to_string(c.model)},
        {"models", names(c.models)},
        {"supervisory",
         {{"gamma_pool", c.sup.gamma_pool},
          {"r_sequence", c.sup.r_sequence},
          {"candidates_per_step", c.sup.candidates_per_step},
          {"L_max", c.sup.L_max},
          {"patience", c.sup.patience}}},
        {"seed", c.seed},
        {"n_trials", c.n_trials},
        {"out", c.out},
        {"threads", c.threads},
        {"timing", c.timing},
        {"kernel", {{"c", opt(c.kscn_c)}, {"tau", opt(c.kscn_tau)}, {"c_grid", c.grids.kernel_c},
                    {"tau_grid", c.grids.kernel_tau}}},
        {"rvfl", {{"L", opt(c.rvfl_L)}, {"gamma", opt(c.rvfl_gamma)}, {"L_grid", c.grids.rvfl_L}}},
        {"krvfl", {{"L", opt(c.krvfl_L)}, {"gamma", opt(c.krvfl_gamma)}, {"c", opt(c.krvfl_c)},
                   {"tau", opt(c.krvfl_tau)}, {"L_grid", c.grids.krvfl_L}}},
        {"rbfn", {{"k", opt(c.rbfn_k)}, {"c", opt(c.rbfn_c)}, {"k_grid", c.grids.rbfn_k},
                  {"c_grid", c.grids.rbfn_c}}},
        {"selection", {{"seeds", c.selection_seeds}}},
        {"sweep", {{"multipliers", c.sweep_multipliers}, {"models", names(c.sweep_models)},
                   {"n_trials", c.sweep_trials}}},
        {"spectrum", {{"seeds", c.spectrum_seeds}}},
        {"patience_study", {{"values", c.patience_values}, {"n_trials", opt(c.patience_trials)}}},
    };
}

}  // namespace kscn
