#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "kscn/evalkit.hpp"
#include "oracles.hpp"

using namespace kscn;

namespace {

Experiment small_experiment() {
    Experiment e;
    e.data = gen_numerical(200, 7);
    e.split = split_shuffled(200, 80, 40, 7);
    return e;
}

ModelSettings small_settings() {
    ModelSettings st;
    st.sup.L_max = 15;
    st.rvfl_L = 20;
    st.rvfl_gamma = 5.0;
    st.krvfl_L = 5;
    st.rbfn_k = 20;
    st.rbfn_c = 0.01;
    return st;
}

std::vector<std::vector<std::string>> csv_cells(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

TEST(ComputeMetrics, PerfectPrediction) {
    const Mat Y{{1.0}, {2.0}, {4.0}};
    const Metrics m = compute_metrics(Y, Y);
    EXPECT_EQ(m.rmse, 0.0);
    ASSERT_TRUE(m.r2.has_value());
    EXPECT_EQ(*m.r2, 1.0);
}

TEST(ComputeMetrics, ColumnMeansGiveZeroR2) {
    const Mat Y{{1.0, 0.0}, {2.0, 5.0}, {6.0, 1.0}};
    const Mat P{{3.0, 2.0}, {3.0, 2.0}, {3.0, 2.0}};
    EXPECT_NEAR(*compute_metrics(Y, P).r2, 0.0, 1e-15);
}

TEST(ComputeMetrics, HandArithmetic) {
    const Metrics m = compute_metrics(Mat{{0.0}, {1.0}, {2.0}}, Mat(3, 1));
    EXPECT_NEAR(m.rmse, std::sqrt(5.0 / 3.0), 1e-15);
    EXPECT_NEAR(m.rmse, 1.29099, 1e-5);
    EXPECT_NEAR(*m.r2, -1.5, 1e-15);
}

TEST(ComputeMetrics, ZeroVarianceLeavesR2Absent) {
    const Metrics m = compute_metrics(Mat{{2.0}, {2.0}}, Mat{{1.0}, {3.0}});
    EXPECT_FALSE(m.r2.has_value());
    EXPECT_EQ(m.r2_absent, "ZeroVariance");
    EXPECT_EQ(m.rmse, 1.0);
}

TEST(ComputeMetrics, PooledRmseOverOutputs) {
    const Metrics m = compute_metrics(Mat{{0.0, 0.0}, {0.0, 0.0}}, Mat{{1.0, 1.0}, {1.0, 3.0}});
    EXPECT_NEAR(m.rmse, std::sqrt(12.0 / 4.0), 1e-15);
}

TEST(ComputeMetrics, PermutationInvariantAndR2AtMostOne) {
    std::mt19937_64 g(5);
    for (int t = 0; t < 20; ++t) {
        const Mat Y = oracle::random_mat(15, 2, 100 + t);
        const Mat P = oracle::random_mat(15, 2, 200 + t);
        const Metrics m = compute_metrics(Y, P);
        EXPECT_LE(*m.r2, 1.0);
        std::vector<std::size_t> perm(15);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), g);
        const Metrics mp = compute_metrics(Y.select_rows(perm), P.select_rows(perm));
        EXPECT_NEAR(mp.rmse, m.rmse, 1e-14);
        EXPECT_NEAR(*mp.r2, *m.r2, 1e-12);
    }
}

TEST(ComputeMetrics, BadShapes) {
    EXPECT_THROW(compute_metrics(Mat(2, 1), Mat(3, 1)), DimensionMismatch);
    EXPECT_THROW(compute_metrics(Mat(0, 1), Mat(0, 1)), std::invalid_argument);
}

TEST(Spectrum, AllOnesIsRankOne) {
    const SpectrumReport r = spectrum(Mat(6, 6, 1.0));
    EXPECT_NEAR(r.eigvals[0], 6.0, 1e-12);
    for (std::size_t i = 1; i < 6; ++i) EXPECT_NEAR(r.eigvals[i], 0.0, 1e-12);
    EXPECT_NEAR(r.energy(1), 1.0, 1e-12);
    EXPECT_NEAR(r.effective_rank, 1.0, 1e-9);
}

TEST(Spectrum, IdentityIsFlat) {
    const SpectrumReport r = spectrum(Mat::identity(20));
    for (std::size_t k : kEnergyKs) EXPECT_NEAR(r.energy(k), double(k) / 20.0, 1e-14);
    EXPECT_NEAR(r.effective_rank, 20.0, 1e-10);
}

TEST(Spectrum, CraftedGramByHand) {
    // Two 2×2 blocks with eigenvalues 1 ± 0.5 and 1 ± 0.8.
    const Mat K{{1.0, 0.5, 0.0, 0.0}, {0.5, 1.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.8}, {0.0, 0.0, 0.8, 1.0}};
    const SpectrumReport r = spectrum(K);
    const std::vector<double> expect{1.8, 1.5, 0.5, 0.2};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r.eigvals[i], expect[i], 1e-14);
    EXPECT_NEAR(r.energy(1), 0.45, 1e-14);
    EXPECT_NEAR(r.energy(3), 0.95, 1e-14);
    EXPECT_NEAR(r.energy(5), 1.0, 1e-14);
    double h = 0.0;
    for (double v : expect) h -= (v / 4.0) * std::log(v / 4.0);
    EXPECT_NEAR(r.effective_rank, std::exp(h), 1e-12);
}

TEST(Spectrum, StatisticsOnRealGrams) {
    const Mat X = oracle::random_mat(50, 2, 9, 0.0, 1.0);
    for (double c : {0.01, 0.3, 10.0}) {
        const SpectrumReport r = spectrum(gram_build(Mat(50, 0), X, c).K);
        double prev = 0.0;
        for (std::size_t k : kEnergyKs) {
            EXPECT_GE(r.energy(k), prev);
            prev = r.energy(k);
        }
        EXPECT_NEAR(energy_fraction(r.eigvals, 50), 1.0, 1e-14);
        EXPECT_GE(r.effective_rank, 1.0);
        EXPECT_LE(r.effective_rank, 50.0);
        double sum = 0.0;
        for (double v : r.eigvals) sum += v;
        EXPECT_NEAR(sum, 50.0, 1e-8 * 50.0);
    }
}

TEST(Spectrum, NegativeEigenvalueRejected) {
    EXPECT_THROW(spectrum(Mat{{1.0, 2.0}, {2.0, 1.0}}), NumericError);
}

TEST(SpectrumComparison, ZeroNodesGivesIdenticalReports) {
    const Experiment e = small_experiment();
    SupervisoryConfig sup;
    sup.L_max = 0;
    const auto cmp = spectrum_comparison(e.data, e.split, sup, {1.0, 1e-3}, {1, 2});
    for (const auto& c : cmp) {
        EXPECT_EQ(c.L, 0u);
        EXPECT_EQ(c.original.eigvals, c.unsupervised.eigvals);
        EXPECT_EQ(c.original.eigvals, c.supervised.eigvals);
    }
}

TEST(SpectrumComparison, EigenvalueSumsEqualTrace) {
    const Experiment e = small_experiment();
    SupervisoryConfig sup;
    sup.L_max = 10;
    const auto cmp = spectrum_comparison(e.data, e.split, sup, {1.0, 1e-3}, {3});
    ASSERT_EQ(cmp.size(), 1u);
    const double n = static_cast<double>(e.split.train.size());
    for (const SpectrumReport* r : {&cmp[0].original, &cmp[0].unsupervised, &cmp[0].supervised}) {
        double sum = 0.0;
        for (double v : r->eigvals) sum += v;
        EXPECT_NEAR(sum, n, 1e-8 * n);
    }
    EXPECT_GT(cmp[0].L, 0u);
}

TEST(SpectrumCsv, ThreeKindsWithRankRows) {
    const Experiment e = small_experiment();
    SupervisoryConfig sup;
    sup.L_max = 5;
    const auto cmp = spectrum_comparison(e.data, e.split, sup, {1.0, 1e-3}, {1, 2});
    const auto rows = csv_cells(render([&](std::ostream& o) { write_spectrum_csv(o, cmp); }));
    EXPECT_EQ(rows[0], (std::vector<std::string>{"kind", "rank", "eigval"}));
    EXPECT_EQ(rows.size(), 1 + 3 * e.split.train.size());
    EXPECT_EQ(rows[1][0], "original");
    EXPECT_EQ(rows.back()[0], "supervised");
}

TEST(Logspace, EndpointsAndCount) {
    const auto v = logspace(1e-2, 1e2, 41);
    ASSERT_EQ(v.size(), 41u);
    EXPECT_NEAR(v.front(), 1e-2, 1e-16);
    EXPECT_NEAR(v.back(), 1e2, 1e-12);
    EXPECT_NEAR(v[20], 1.0, 1e-14);
    for (std::size_t i = 1; i < v.size(); ++i) EXPECT_NEAR(v[i] / v[i - 1], std::pow(10.0, 0.1), 1e-12);
}

TEST(RunTrials, SingleTrialAggregatesDegenerate) {
    const Experiment e = small_experiment();
    const TrialReport rep = run_trials(e, small_settings(), {ModelKind::Rvfl}, 1, 4);
    const Aggregate& a = rep.aggregate(ModelKind::Rvfl);
    EXPECT_EQ(a.n_ok, 1u);
    EXPECT_EQ(a.rmse_std, 0.0);
    EXPECT_EQ(a.rmse_min, a.rmse_mean);
    EXPECT_EQ(a.rmse_max, a.rmse_mean);
    EXPECT_EQ(a.nodes_std, 0.0);
}

TEST(RunTrials, SeedsAndRowsPerModel) {
    const Experiment e = small_experiment();
    const TrialReport rep = run_trials(e, small_settings(), {ModelKind::Scn, ModelKind::Rbfn}, 3, 10);
    ASSERT_EQ(rep.rows.size(), 6u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(rep.rows[i].seed, 10 + i);
        EXPECT_EQ(rep.rows[i].model, ModelKind::Scn);
        EXPECT_EQ(rep.rows[3 + i].seed, 10 + i);
        EXPECT_EQ(rep.rows[3 + i].model, ModelKind::Rbfn);
    }
    EXPECT_THROW(run_trials(e, small_settings(), {ModelKind::Scn}, 0, 1), ConfigError);
}

TEST(RunTrials, TestRmseMatchesDirectPrediction) {
    const Experiment e = small_experiment();
    const ModelSettings st = small_settings();
    const TrialReport rep = run_trials(e, st, {ModelKind::Kscn}, 2, 5);
    for (const auto& row : rep.rows) {
        const TrainedAny t = train_model(ModelKind::Kscn, e, st, row.seed);
        const Mat pred = predict(t.model, e.data.X.select_rows(e.split.test));
        const Metrics m = compute_metrics(e.data.Y.select_rows(e.split.test), pred);
        EXPECT_EQ(row.test.rmse, m.rmse);
        EXPECT_EQ(row.nodes, t.nodes);
    }
}

TEST(RunTrials, CsvRecomputeMatchesJsonAggregates) {
    const Experiment e = small_experiment();
    const std::vector<ModelKind> models{ModelKind::Kscn, ModelKind::Scn, ModelKind::Rvfl, ModelKind::Krvfl,
                                        ModelKind::Rbfn};
    const TrialReport rep = run_trials(e, small_settings(), models, 4, 1);
    const auto rows = csv_cells(render([&](std::ostream& o) { write_trials_csv(o, rep); }));
    const Json j = trials_json(rep);
    ASSERT_EQ(rows[0], (std::vector<std::string>{"seed", "model", "nodes", "rmse_train", "rmse_val", "rmse_test",
                                                 "r2_test", "ms"}));
    ASSERT_EQ(rows.size(), 1 + models.size() * 4);
    for (ModelKind k : models) {
        std::vector<double> rmse, nodes;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i][1] != to_string(k)) continue;
            rmse.push_back(std::stod(rows[i][5]));
            nodes.push_back(std::stod(rows[i][2]));
        }
        double mean = 0.0;
        for (double v : rmse) mean += v;
        mean /= double(rmse.size());
        double var = 0.0;
        for (double v : rmse) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / double(rmse.size() - 1));
        const Json& a = j["aggregates"][to_string(k)];
        EXPECT_NEAR(a["rmse_mean"].get<double>(), mean, 1e-15);
        EXPECT_NEAR(a["rmse_std"].get<double>(), sd, 1e-15);
        EXPECT_EQ(a["rmse_min"].get<double>(), *std::min_element(rmse.begin(), rmse.end()));
        EXPECT_EQ(a["rmse_max"].get<double>(), *std::max_element(rmse.begin(), rmse.end()));
        double nm = 0.0;
        for (double v : nodes) nm += v;
        EXPECT_NEAR(a["nodes_mean"].get<double>(), nm / double(nodes.size()), 1e-12);
    }
}

TEST(RunTrials, ReproducibleBytesAcrossThreadCounts) {
    const Experiment e = small_experiment();
    const std::vector<ModelKind> models{ModelKind::Kscn, ModelKind::Scn, ModelKind::Rbfn};
    const TrialReport a = run_trials(e, small_settings(), models, 3, 2, {1, false});
    const TrialReport b = run_trials(e, small_settings(), models, 3, 2, {4, false});
    const auto csv = [](const TrialReport& r) { return render([&](std::ostream& o) { write_trials_csv(o, r); }); };
    EXPECT_EQ(csv(a), csv(b));
    EXPECT_EQ(trials_json(a).dump(), trials_json(b).dump());
}

TEST(RunTrials, FailedTrialsRecordedAndExcluded) {
    const Experiment e = small_experiment();
    ModelSettings st = small_settings();
    st.rbfn_k = e.split.train.size() + 1;
    const TrialReport rep = run_trials(e, st, {ModelKind::Rbfn, ModelKind::Rvfl}, 2, 1);
    const Aggregate& bad = rep.aggregate(ModelKind::Rbfn);
    EXPECT_EQ(bad.n_ok, 0u);
    EXPECT_EQ(bad.n_failed, 2u);
    EXPECT_EQ(rep.aggregate(ModelKind::Rvfl).n_failed, 0u);
    EXPECT_FALSE(rep.rows[0].ok());
    const auto rows = csv_cells(render([&](std::ostream& o) { write_trials_csv(o, rep); }));
    EXPECT_EQ(rows[1][0], "1");
    EXPECT_EQ(rows[1][1], "rbfn");
    EXPECT_TRUE(rows[1][5].empty());
    EXPECT_TRUE(trials_json(rep)["rows"][0].contains("error"));
}

TEST(KernelSweep, UnitMultiplierEqualsBaseRun) {
    const Experiment e = small_experiment();
    const ModelSettings st = small_settings();
    const std::vector<double> mult{0.1, 1.0, 10.0};
    const auto pts = kernel_sweep(e, st, {ModelKind::Kscn, ModelKind::Rbfn}, mult, 3, 1);
    ASSERT_EQ(pts.size(), 6u);
    const TrialReport base = run_trials(e, st, {ModelKind::Kscn, ModelKind::Rbfn}, 3, 1);
    EXPECT_EQ(pts[1].agg.rmse_mean, base.aggregate(ModelKind::Kscn).rmse_mean);
    EXPECT_EQ(pts[4].agg.rmse_mean, base.aggregate(ModelKind::Rbfn).rmse_mean);
    EXPECT_EQ(pts[0].c, st.kscn_kernel.c * 0.1);
    EXPECT_EQ(pts[5].c, st.rbfn_c * 10.0);

    const auto rows = csv_cells(render([&](std::ostream& o) { write_sweep_csv(o, pts, ModelKind::Kscn); }));
    EXPECT_EQ(rows[0], (std::vector<std::string>{"multiplier", "mean_rmse", "std_rmse"}));
    EXPECT_EQ(rows.size(), 1 + mult.size());
    EXPECT_EQ(std::stod(rows[2][0]), 1.0);

    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        lo = std::min(lo, pts[i].agg.rmse_mean);
        hi = std::max(hi, pts[i].agg.rmse_mean);
    }
    EXPECT_EQ(sweep_ratio(pts, ModelKind::Kscn), hi / lo);
}

TEST(KernelSweep, BadArguments) {
    const Experiment e = small_experiment();
    EXPECT_THROW(kernel_sweep(e, small_settings(), {ModelKind::Kscn}, {0.0}, 1, 1), ConfigError);
    EXPECT_THROW(kernel_sweep(e, small_settings(), {ModelKind::Scn}, {1.0}, 1, 1), ConfigError);
}

TEST(PatienceStudy, RowsPerValueAndModel) {
    const Experiment e = small_experiment();
    const auto rows = patience_study(e, small_settings(), {1, 3}, 2, 1);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].p_max, 1u);
    EXPECT_EQ(rows[0].agg.model, ModelKind::Scn);
    EXPECT_EQ(rows[1].agg.model, ModelKind::Kscn);
    EXPECT_EQ(rows[3].p_max, 3u);
    EXPECT_THROW(patience_study(e, small_settings(), {0}, 1, 1), ConfigError);
}

TEST(TraceCsv, OneRowPerModelState) {
    const Experiment e = small_experiment();
    const TrainedAny t = train_model(ModelKind::Kscn, e, small_settings(), 3);
    const auto rows = csv_cells(render([&](std::ostream& o) { write_trace_csv(o, t.trace); }));
    EXPECT_EQ(rows[0].front(), "L");
    EXPECT_EQ(rows.size(), 1 + t.trace.accepted_nodes() + 1);
    EXPECT_EQ(rows[1][0], "0");
}

TEST(ModelKinds, NamesRoundTrip) {
    for (ModelKind k : kAllModels) EXPECT_EQ(parse_model_kind(to_string(k)), k);
    EXPECT_FALSE(parse_model_kind("svr").has_value());
}
