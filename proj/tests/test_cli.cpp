#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "kscn/dataio.hpp"
#include "kscn/model_io.hpp"

using namespace kscn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string err;
};

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        dir = fs::temp_directory_path() /
              (std::string("kscn_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    Outcome run(const std::string& args) const {
        const fs::path err = dir / "stderr.txt";
        const std::string cmd = std::string(KSCN_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() +
                                " 2> " + err.string();
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path write_config(const std::string& name, const std::string& run_name, const std::string& extra = "") const {
        const fs::path p = dir / name;
        std::ofstream out(p);
        out << R"({"run_name": ")" << run_name << R"(", "out": ")" << (dir / "out").string() << R"(",
            "dataset": {"n": 150}, "split": {"n_train": 60, "n_val": 30},
            "supervisory": {"L_max": 10}, "kernel": {"c": 5, "tau": 0.001},
            "rvfl": {"L": 10, "gamma": 5}, "krvfl": {"L": 5, "c": 1, "tau": 0.001},
            "rbfn": {"k": 20, "c": 0.01}, "n_trials": 2)"
            << extra << "}";
        return p;
    }
};

std::size_t line_count(const std::string& s) {
    std::size_t n = 0;
    for (char ch : s) n += ch == '\n';
    return n;
}

}  // namespace

TEST_F(Cli, TrainWritesArtifacts) {
    const auto cfg = write_config("c.json", "a");
    ASSERT_EQ(run("train --config " + cfg.string()).code, 0);
    const fs::path out = dir / "out" / "a";
    ASSERT_TRUE(fs::exists(out / "model.json"));
    ASSERT_TRUE(fs::exists(out / "trace.csv"));
    ASSERT_TRUE(fs::exists(out / "resolved-config.json"));
    const KscnModel m = load_model(out / "model.json");
    const std::string trace = slurp(out / "trace.csv");
    EXPECT_GE(line_count(trace), m.nodes.size() + 2);
    EXPECT_EQ(trace.substr(0, 2), "L,");
}

TEST_F(Cli, SameSeedSameBytes) {
    const auto a = write_config("a.json", "a");
    const auto b = write_config("b.json", "b");
    ASSERT_EQ(run("train --config " + a.string()).code, 0);
    ASSERT_EQ(run("train --config " + b.string()).code, 0);
    for (const char* f : {"model.json", "trace.csv"}) {
        EXPECT_EQ(slurp(dir / "out" / "a" / f), slurp(dir / "out" / "b" / f)) << f;
    }
    ASSERT_EQ(run("train --seed 2 --config " + b.string()).code, 0);
    EXPECT_NE(slurp(dir / "out" / "a" / "model.json"), slurp(dir / "out" / "b" / "model.json"));
}

TEST_F(Cli, UnknownKeyExitsOneAndNamesKey) {
    const auto cfg = write_config("c.json", "a", R"(, "kernel_width": 3)");
    const Outcome r = run("train --config " + cfg.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("kernel_width"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "out" / "a"));
}

TEST_F(Cli, BadFlagsExitOne) {
    EXPECT_EQ(run("bench --models kscn,svr").code, 1);
    EXPECT_EQ(run("nonsense").code, 1);
    EXPECT_EQ(run("train --config " + (dir / "missing.json").string()).code, 1);
}

TEST_F(Cli, BenchSingleTrialDegenerateAggregates) {
    const auto cfg = write_config("c.json", "a");
    ASSERT_EQ(run("bench --trials 1 --models kscn,scn,rvfl,krvfl,rbfn --config " + cfg.string()).code, 0);
    const Json j = Json::parse(slurp(dir / "out" / "a" / "trials.json"));
    ASSERT_EQ(j["aggregates"].size(), 5u);
    for (const auto& a : j["aggregates"]) {
        EXPECT_EQ(a["rmse_std"].get<double>(), 0.0);
        EXPECT_EQ(a["rmse_min"].get<double>(), a["rmse_max"].get<double>());
        EXPECT_EQ(a["rmse_mean"].get<double>(), a["rmse_min"].get<double>());
    }
    EXPECT_EQ(line_count(slurp(dir / "out" / "a" / "trials.csv")), 6u);
}

TEST_F(Cli, PredictMatchesTrainingAndRejectsWidth) {
    const auto cfg = write_config("c.json", "a");
    ASSERT_EQ(run("train --config " + cfg.string()).code, 0);
    const fs::path model = dir / "out" / "a" / "model.json";

    const Dataset d = gen_numerical(150, 7);
    Dataset in;
    in.X = d.X;
    in.Y = Mat(d.n(), 0);
    in.feature_names = {"x"};
    const fs::path in_csv = dir / "in.csv";
    save_csv(in_csv, in);
    const std::string before = slurp(in_csv);
    ASSERT_EQ(run("predict " + model.string() + " " + in_csv.string() + " " + (dir / "pred.csv").string()).code, 0);
    EXPECT_EQ(slurp(in_csv), before);

    std::istringstream pred(slurp(dir / "pred.csv"));
    std::string line;
    std::getline(pred, line);
    EXPECT_EQ(line, "y1");
    const Mat ref = predict(load_any_model(model), d.X);
    std::size_t i = 0;
    for (; std::getline(pred, line); ++i) {
        ASSERT_LT(i, ref.rows());
        EXPECT_EQ(std::stod(line), ref(i, 0));
    }
    EXPECT_EQ(i, ref.rows());

    Dataset wide;
    wide.X = Mat(3, 2);
    wide.Y = Mat(3, 0);
    save_csv(dir / "wide.csv", wide);
    EXPECT_EQ(run("predict " + model.string() + " " + (dir / "wide.csv").string() + " " + (dir / "p2.csv").string()).code,
              2);
    EXPECT_FALSE(fs::exists(dir / "p2.csv"));
}

TEST_F(Cli, ConfigFileNotModified) {
    const auto cfg = write_config("c.json", "a");
    const std::string before = slurp(cfg);
    ASSERT_EQ(run("train --config " + cfg.string()).code, 0);
    EXPECT_EQ(slurp(cfg), before);
}
