// kscn: train, benchmark and inspect kernel stochastic configuration networks.
//
//   kscn train    [--config F] [--seed N] [--out DIR]
//   kscn bench    [--config F] [--trials N] [--models kscn,scn,...]
//   kscn spectrum [--config F]
//   kscn sweep    [--config F] [--trials N]
//   kscn predict  MODEL IN.csv OUT.csv
//
// Exit codes: 1 configuration, 2 data, 3 numeric failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kscn/config.hpp"
#include "kscn/dataio.hpp"
#include "kscn/error.hpp"
#include "kscn/evalkit.hpp"
#include "kscn/model_io.hpp"

namespace fs = std::filesystem;
using namespace kscn;

namespace {

enum class Level { Error, Warn, Info, Debug };

Level log_level() {
    static const Level level = [] {
        const char* env = std::getenv("KSCN_LOG");
        const std::string v = env ? env : "info";
        if (v == "error") return Level::Error;
        if (v == "warn") return Level::Warn;
        if (v == "debug") return Level::Debug;
        return Level::Info;
    }();
    return level;
}

void log(Level lv, const std::string& msg) {
    static const char* names[] = {"error", "warn", "info", "debug"};
    if (lv <= log_level()) std::cerr << "[" << names[static_cast<int>(lv)] << "] " << msg << '\n';
}

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
    std::optional<std::string> models;
    bool timing = false;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "JSON run configuration");
    sub->add_option("--seed", f.seed, "base seed");
    sub->add_option("--trials", f.trials, "number of trials");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--threads", f.threads, "worker cap (0: all cores)");
    sub->add_option("--models", f.models, "comma-separated models: kscn,scn,rvfl,krvfl,rbfn");
    sub->add_flag("--timing", f.timing, "record wall times (outputs no longer byte-stable)");
}

std::vector<ModelKind> parse_model_list(const std::string& list) {
    std::vector<ModelKind> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto k = parse_model_kind(item);
        if (!k) throw ConfigError("--models: unknown model '" + item + "'");
        out.push_back(*k);
    }
    if (out.empty()) throw ConfigError("--models: empty list");
    return out;
}

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
    if (f.seed) c.seed = *f.seed;
    if (f.trials) c.n_trials = *f.trials;
    if (f.out) c.out = *f.out;
    if (f.threads) c.threads = *f.threads;
    if (f.models) {
        c.models = parse_model_list(*f.models);
        c.model = c.models.front();
    }
    if (f.timing) c.timing = true;
    validate(c);
    return c;
}

fs::path run_dir(const RunConfig& c) {
    fs::path dir = fs::path(c.out) / c.run_name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

void write_json(const fs::path& p, const Json& j) { write_text_atomic(p, j.dump(2) + "\n"); }

ModelSettings prepare(RunConfig& c, const Experiment& e, const std::vector<ModelKind>& models) {
    const SelectionNeeds need = selection_needs(c, models);
    if (need.kscn_kernel || need.rvfl || need.krvfl || need.rbfn) {
        log(Level::Info, "selecting hyperparameters on validation error");
    }
    ModelSettings st = resolve_settings(c, e, models);
    pin_settings(c, st, models);
    return st;
}

Json model_json(const AnyModel& m) {
    return std::visit([&](const auto& v) { return to_json(v, m.type); }, m.model);
}

int cmd_train(const CommonFlags& f) {
    RunConfig c = resolve_config(f);
    const Experiment e = build_experiment(c);
    const ModelSettings st = prepare(c, e, {c.model});
    TrainedAny t = train_model(c.model, e, st, c.seed);
    if (!c.timing) clear_timing(t.trace);
    const fs::path dir = run_dir(c);
    write_text_atomic(dir / "model.json", model_json(t.model).dump(1) + "\n");
    write_text_atomic(dir / "trace.csv", render([&](std::ostream& o) { write_trace_csv(o, t.trace); }));
    write_json(dir / "resolved-config.json", to_json(c));
    if (!e.split.test.empty()) {
        const Metrics m = evaluate_rows(t.model, e.data, e.split.test);
        log(Level::Info, std::string(to_string(c.model)) + ": " + std::to_string(t.nodes) +
                             " nodes, test RMSE " + format_number(m.rmse));
    }
    log(Level::Info, "wrote " + dir.string());
    return 0;
}

void print_table(const TrialReport& rep) {
    std::printf("%-6s %12s %12s %12s %12s %8s %8s\n", "model", "rmse_mean", "rmse_std", "rmse_min", "rmse_max",
                "nodes", "failed");
    for (const auto& a : rep.aggregates) {
        std::printf("%-6s %12.6g %12.6g %12.6g %12.6g %8.2f %8zu\n", to_string(a.model), a.rmse_mean, a.rmse_std,
                    a.rmse_min, a.rmse_max, a.nodes_mean, a.n_failed);
    }
}

int cmd_bench(const CommonFlags& f) {
    RunConfig c = resolve_config(f);
    const Experiment e = build_experiment(c);
    std::vector<ModelKind> needed = c.models;
    if (!c.patience_values.empty()) {
        needed.push_back(ModelKind::Kscn);
        needed.push_back(ModelKind::Scn);
    }
    const ModelSettings st = prepare(c, e, needed);
    const RunOptions opt{c.threads, c.timing};
    log(Level::Info, "running " + std::to_string(c.n_trials) + " trials per model");
    const TrialReport rep = run_trials(e, st, c.models, c.n_trials, c.seed, opt);
    const fs::path dir = run_dir(c);
    write_text_atomic(dir / "trials.csv", render([&](std::ostream& o) { write_trials_csv(o, rep); }));
    write_json(dir / "trials.json", trials_json(rep));
    if (!c.patience_values.empty()) {
        const auto rows = patience_study(e, st, c.patience_values, c.patience_trials.value_or(c.n_trials), c.seed, opt);
        write_text_atomic(dir / "patience.csv", render([&](std::ostream& o) { write_patience_csv(o, rows); }));
        write_json(dir / "patience.json", patience_json(rows));
    }
    write_json(dir / "resolved-config.json", to_json(c));
    print_table(rep);
    log(Level::Info, "wrote " + dir.string());
    return 0;
}

int cmd_spectrum(const CommonFlags& f) {
    RunConfig c = resolve_config(f);
    const Experiment e = build_experiment(c);
    const ModelSettings st = prepare(c, e, {ModelKind::Kscn});
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < c.spectrum_seeds; ++i) seeds.push_back(c.seed + i);
    const auto cmp = spectrum_comparison(e.data, e.split, st.sup, st.kscn_kernel, seeds);
    const fs::path dir = run_dir(c);
    write_text_atomic(dir / "spectrum.csv", render([&](std::ostream& o) { write_spectrum_csv(o, cmp); }));
    write_json(dir / "spectrum.json", spectrum_json(cmp));
    write_json(dir / "resolved-config.json", to_json(c));
    const SpectrumSummary s = summarize(cmp);
    std::printf("%-13s %10s %10s %10s %10s %10s\n", "kind", "top1", "top3", "top5", "top10", "eff_rank");
    auto row = [](const char* kind, const std::map<std::size_t, double>& e, double rank) {
        std::printf("%-13s %10.6f %10.6f %10.6f %10.6f %10.4f\n", kind, e.at(1), e.at(3), e.at(5), e.at(10), rank);
    };
    row("original", s.original, s.rank_original);
    row("unsupervised", s.unsupervised, s.rank_unsupervised);
    row("supervised", s.supervised, s.rank_supervised);
    log(Level::Info, "wrote " + dir.string());
    return 0;
}

int cmd_sweep(const CommonFlags& f) {
    RunConfig c = resolve_config(f);
    if (f.trials) c.sweep_trials = *f.trials;
    const Experiment e = build_experiment(c);
    const ModelSettings st = prepare(c, e, c.sweep_models);
    const auto pts = kernel_sweep(e, st, c.sweep_models, c.sweep_multipliers, c.sweep_trials, c.seed,
                                  {c.threads, c.timing});
    const fs::path dir = run_dir(c);
    for (ModelKind k : c.sweep_models) {
        const std::string text = render([&](std::ostream& o) { write_sweep_csv(o, pts, k); });
        write_text_atomic(dir / ("sweep_" + std::string(to_string(k)) + ".csv"), text);
        if (k == c.sweep_models.front()) write_text_atomic(dir / "sweep.csv", text);
    }
    write_json(dir / "sweep.json", sweep_json(pts));
    write_json(dir / "resolved-config.json", to_json(c));
    for (ModelKind k : c.sweep_models) {
        std::printf("%-6s max/min mean RMSE ratio %.6g\n", to_string(k), sweep_ratio(pts, k));
    }
    log(Level::Info, "wrote " + dir.string());
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& in_path, const std::string& out_path) {
    const AnyModel model = load_any_model(model_path);
    const Dataset in = load_csv(in_path, {});
    Dataset out;
    out.X = Mat(in.n(), 0);
    out.Y = predict(model, in.X);
    for (std::size_t q = 0; q < out.Y.cols(); ++q) out.target_names.push_back("y" + std::to_string(q + 1));
    std::ostringstream ss;
    write_csv(ss, out);
    write_text_atomic(out_path, ss.str());
    log(Level::Info, "wrote " + std::to_string(in.n()) + " predictions to " + out_path);
    return 0;
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return 1;
        case ErrorKind::Data: return 2;
        case ErrorKind::Numeric: return 3;
    }
    return 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel stochastic configuration networks"};
    app.require_subcommand(1);
    CommonFlags flags;
    auto* train = app.add_subcommand("train", "train one model; writes model.json and trace.csv");
    auto* bench = app.add_subcommand("bench", "multi-trial benchmark; writes trials.csv");
    auto* spec = app.add_subcommand("spectrum", "Gram spectrum comparison; writes spectrum.csv");
    auto* sweep = app.add_subcommand("sweep", "kernel width sweep; writes sweep.csv");
    auto* pred = app.add_subcommand("predict", "predict a CSV of inputs with a saved model");
    for (auto* s : {train, bench, spec, sweep}) add_common(s, flags);
    std::string model_path, in_path, out_path;
    pred->add_option("model", model_path, "model JSON")->required();
    pred->add_option("input", in_path, "input CSV (predictor columns only)")->required();
    pred->add_option("output", out_path, "prediction CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*train) return cmd_train(flags);
        if (*bench) return cmd_bench(flags);
        if (*spec) return cmd_spectrum(flags);
        if (*sweep) return cmd_sweep(flags);
        if (*pred) return cmd_predict(model_path, in_path, out_path);
    } catch (const Error& e) {
        log(Level::Error, e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        log(Level::Error, e.what());
        return 3;
    }
    return 1;
}
