#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

#include "ncpp/csv.hpp"
#include "test_common.hpp"

namespace {

std::string g_cli;

int run(const std::string& args, const std::string& log = "/dev/null",
        const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + g_cli + " " + args + " >" + log + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("cli binary is available") {
    g_cli = testutil::cli_path();
    REQUIRE_MESSAGE(!g_cli.empty(), "NCPP_CLI_PATH must point at the built binary");
    REQUIRE(std::filesystem::exists(g_cli));
}

TEST_CASE("synth -> ingest -> train -> evaluate -> predict -> explain chain") {
    const std::string dir = testutil::temp_dir("cli_chain");
    const std::string fast = "--epochs 4 --d-model 8 --batch-size 8";

    CHECK(run("synth --n 16 --suite Stream --seed 11 --out " + dir + "/raw.csv") == 0);
    CHECK(std::filesystem::exists(dir + "/raw.csv"));
    CHECK(std::filesystem::exists(dir + "/raw_truth.json"));
    CHECK(std::filesystem::exists(dir + "/synth_manifest.json"));

    CHECK(run("ingest --data " + dir + "/raw.csv --suite Stream --out " + dir + "/clean.csv") == 0);
    auto clean = ncpp::read_csv(dir + "/clean.csv");
    CHECK(clean.rows.size() == 16);

    CHECK(run("train --data " + dir + "/clean.csv --suite Stream " + fast + " --out-dir " + dir +
              "/run") == 0);
    for (const std::string f : {"model.ckpt", "model.ckpt.json", "history.csv", "report.json",
                                "report.csv", "report_radar.csv", "train_manifest.json"})
        CHECK(std::filesystem::exists(dir + "/run/" + f));

    // the manifest records input hashes and artifact hashes that still verify
    auto manifest = nlohmann::json::parse(slurp(dir + "/run/train_manifest.json"));
    CHECK(manifest["command"] == "train");
    CHECK(manifest["seed"] == 42);
    CHECK(!manifest["inputs"].empty());
    CHECK(manifest["artifacts"].size() == 6);
    CHECK(manifest["effective_config"]["model"]["d_model"] == 8);

    // the raw CSV (not just the consolidated one) trains too
    CHECK(run("train --data " + dir + "/raw.csv --suite Stream " + fast + " --out-dir " + dir +
              "/run_raw") == 0);

    CHECK(run("evaluate --model " + dir + "/run/model.ckpt --data " + dir +
              "/clean.csv --out-dir " + dir + "/eval") == 0);
    CHECK(std::filesystem::exists(dir + "/eval/eval_report.json"));

    CHECK(run("predict --model " + dir + "/run/model.ckpt --data " + dir + "/clean.csv --out " +
              dir + "/pred.csv") == 0);
    auto pred = ncpp::read_csv(dir + "/pred.csv");
    CHECK(pred.rows.size() == 16);
    CHECK(pred.header.size() == 5); // record + 4 Stream benchmarks

    CHECK(run("explain --model " + dir + "/run/model.ckpt --data " + dir +
              "/clean.csv --out-dir " + dir + "/explain") == 0);
    int importance_files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir + "/explain"))
        if (e.path().filename().string().rfind("importance_", 0) == 0) ++importance_files;
    CHECK(importance_files >= 5);
}

TEST_CASE("cv and ablate emit their tables") {
    const std::string dir = testutil::temp_dir("cli_cv");
    CHECK(run("synth --n 15 --suite HPCG --seed 3 --out " + dir + "/raw.csv") == 0);
    CHECK(run("cv --data " + dir + "/raw.csv --suite HPCG --k 3 --epochs 2 --d-model 8 "
              "--batch-size 8 --out-dir " + dir + "/cv") == 0);
    auto rep = nlohmann::json::parse(slurp(dir + "/cv/cv_report.json"));
    CHECK(rep["folds"] == 3);

    CHECK(run("ablate --data " + dir + "/raw.csv --suite HPCG --epochs 2 --d-model 8 "
              "--batch-size 8 --out-dir " + dir + "/abl") == 0);
    auto table = ncpp::read_csv(dir + "/abl/ablation.csv");
    CHECK(table.header == std::vector<std::string>{"seed", "arm", "mae", "mse", "mape"});
    REQUIRE(table.rows.size() == 6);
    CHECK(table.rows[0][1] == "full");
    CHECK(table.rows[1][1] == "no-intra");
    CHECK(table.rows[5][1] == "no-workload");

    // a single named arm
    CHECK(run("ablate --data " + dir + "/raw.csv --suite HPCG --epochs 2 --d-model 8 "
              "--batch-size 8 --arm no-cpu --out-dir " + dir + "/abl1") == 0);
    auto one = ncpp::read_csv(dir + "/abl1/ablation.csv");
    REQUIRE(one.rows.size() == 1);
    CHECK(one.rows[0][1] == "no-cpu");
}

TEST_CASE("exit codes distinguish usage, data, numeric, and io failures") {
    const std::string dir = testutil::temp_dir("cli_err");

    // usage: unknown flag / missing required option
    CHECK(run("train --no-such-flag") == 1);
    CHECK(run("definitely-not-a-subcommand") == 1);

    // io: input file does not exist
    CHECK(run("ingest --data " + dir + "/missing.csv --suite Stream --out " + dir + "/x.csv") == 4);

    // data: malformed CSV (ragged row)
    {
        std::ofstream out(dir + "/bad.csv");
        out << "Suite,Benchmark,Score\nStream,Copy\n";
    }
    CHECK(run("ingest --data " + dir + "/bad.csv --suite Stream --out " + dir + "/x.csv") == 2);
    // data: unknown suite
    CHECK(run("synth --n 8 --suite NotASuite --out " + dir + "/s.csv") == 2);

    // numeric: training diverges
    CHECK(run("synth --n 12 --suite HPCG --out " + dir + "/raw.csv") == 0);
    const int rc = run("train --data " + dir + "/raw.csv --suite HPCG --epochs 3 --d-model 8 "
                       "--batch-size 8 --lr 1e200 --out-dir " + dir + "/run");
    CHECK(rc == 3);
}

TEST_CASE("NCPP_SEED environment variable overrides the seed flag") {
    const std::string dir = testutil::temp_dir("cli_seed");
    CHECK(run("synth --n 8 --suite HPCG --seed 42 --out " + dir + "/a.csv") == 0);
    CHECK(run("synth --n 8 --suite HPCG --seed 7 --out " + dir + "/b.csv") == 0);
    CHECK(run("synth --n 8 --suite HPCG --seed 42 --out " + dir + "/c.csv", "/dev/null",
              "NCPP_SEED=7") == 0);
    CHECK(slurp(dir + "/a.csv") != slurp(dir + "/b.csv"));
    CHECK(slurp(dir + "/c.csv") == slurp(dir + "/b.csv")); // env won over the flag
    CHECK(run("synth --n 8 --suite HPCG --out " + dir + "/d.csv", "/dev/null",
              "NCPP_SEED=banana") == 2);
}

TEST_CASE("config file supplies values and flags take precedence") {
    const std::string dir = testutil::temp_dir("cli_cfg");
    {
        std::ofstream out(dir + "/cfg.json");
        out << R"({"model": {"d_model": 8, "heads": 2},
                   "train": {"epochs": 2, "batch_size": 8, "seed": 5},
                   "split": {"train": 0.6, "val": 0.2, "test": 0.2}})";
    }
    CHECK(run("synth --n 12 --suite HPCG --out " + dir + "/raw.csv") == 0);
    CHECK(run("train --data " + dir + "/raw.csv --suite HPCG --config " + dir +
              "/cfg.json --out-dir " + dir + "/run") == 0);
    auto m = nlohmann::json::parse(slurp(dir + "/run/train_manifest.json"));
    CHECK(m["effective_config"]["model"]["d_model"] == 8);
    CHECK(m["effective_config"]["train"]["epochs"] == 2);
    CHECK(m["seed"] == 5);
    CHECK(m["config_hash"].get<uint64_t>() != 0);

    // a flag overrides the file
    CHECK(run("train --data " + dir + "/raw.csv --suite HPCG --config " + dir +
              "/cfg.json --epochs 3 --out-dir " + dir + "/run2") == 0);
    auto m2 = nlohmann::json::parse(slurp(dir + "/run2/train_manifest.json"));
    CHECK(m2["effective_config"]["train"]["epochs"] == 3);

    // history row count matches the epochs actually run
    auto hist = ncpp::read_csv(dir + "/run2/history.csv");
    CHECK(hist.rows.size() == 3);
}
