#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "hyperts/cli/commands.hpp"
#include "hyperts/core/csv.hpp"
#include "hyperts/detect/report.hpp"
#include "test_helpers.hpp"

using namespace hyperts;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(HYPERTS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Small but complete pipeline fixture shared by the subcases.
struct Pipeline {
    testutil::TempDir tmp{"hyperts_cli"};
    std::string data, bundle, run;

    Pipeline() {
        data = tmp.file("data.csv");
        bundle = tmp.file("bundle");
        run = tmp.file("run");
        REQUIRE(run_cli("synth --out " + data + " --length 1200 --rate 0.04 --seed 5") == 0);
        REQUIRE(run_cli("prepare " + data + " --out " + bundle + " --window 12") == 0);
    }
};

} // namespace

TEST_CASE("cli synth") {
    testutil::TempDir tmp("hyperts_synth_cli");
    SUBCASE("same seed produces byte-identical files") {
        REQUIRE(run_cli("synth --out " + tmp.file("a.csv") + " --length 500 --seed 7") == 0);
        REQUIRE(run_cli("synth --out " + tmp.file("b.csv") + " --length 500 --seed 7") == 0);
        CHECK(testutil::read_text(tmp.file("a.csv")) == testutil::read_text(tmp.file("b.csv")));
    }
    SUBCASE("five channels give a six-column csv") {
        REQUIRE(run_cli("synth --out " + tmp.file("c.csv") + " --length 100 --seed 1") == 0);
        auto table = csv::read_file(tmp.file("c.csv"));
        CHECK(table.header.size() == 6);
        CHECK(table.header.back() == "label");
    }
    SUBCASE("out-of-range rate exits with the config code") {
        CHECK(run_cli("synth --out " + tmp.file("d.csv") + " --rate 0.9") == 2);
    }
}

TEST_CASE("cli prepare") {
    testutil::TempDir tmp("hyperts_prep_cli");
    const std::string data = tmp.file("data.csv");
    REQUIRE(run_cli("synth --out " + data + " --length 800 --seed 3") == 0);

    SUBCASE("produces the bundle layout") {
        REQUIRE(run_cli("prepare " + data + " --out " + tmp.file("b") + " --window 12") == 0);
        for (const char* name : {"train.csv", "val.csv", "test.csv", "norm_state.json", "meta.json"})
            CHECK(fs::exists(tmp.file("b") + "/" + name));
    }
    SUBCASE("refuses to overwrite without force") {
        REQUIRE(run_cli("prepare " + data + " --out " + tmp.file("c") + " --window 12") == 0);
        CHECK(run_cli("prepare " + data + " --out " + tmp.file("c") + " --window 12") == 2);
        CHECK(run_cli("prepare " + data + " --out " + tmp.file("c") + " --window 12 --force") == 0);
    }
    SUBCASE("missing input exits with the data code") {
        CHECK(run_cli("prepare " + tmp.file("nope.csv") + " --out " + tmp.file("d")) == 3);
    }
    SUBCASE("bad split ratios exit with the config code") {
        CHECK(run_cli("prepare " + data + " --out " + tmp.file("e") +
                      " --split 0.9 0.05 0.05 --window 64") == 2);
    }
}

TEST_CASE("cli train, detect, evaluate pipeline") {
    Pipeline p;
    REQUIRE(run_cli("train " + p.bundle + " --out " + p.run +
                    " --epochs 2 --batches-per-epoch 8") == 0);
    CHECK(fs::exists(p.run + "/checkpoint.ckpt"));
    CHECK(fs::exists(p.run + "/loss_history.csv"));
    CHECK(fs::exists(p.run + "/laplacian_epoch1.csv"));

    SUBCASE("zero epochs still writes an initialization checkpoint") {
        REQUIRE(run_cli("train " + p.bundle + " --out " + p.tmp.file("run0") + " --epochs 0") == 0);
        CHECK(fs::exists(p.tmp.file("run0") + "/checkpoint.ckpt"));
    }
    SUBCASE("ablation and structure flags are accepted") {
        REQUIRE(run_cli("train " + p.bundle + " --out " + p.tmp.file("run_ng") +
                        " --epochs 1 --batches-per-epoch 4 --ablation no_gcn") == 0);
        REQUIRE(run_cli("train " + p.bundle + " --out " + p.tmp.file("run_gsl") +
                        " --epochs 1 --batches-per-epoch 4 --structure gsl") == 0);
        CHECK(run_cli("train " + p.bundle + " --out " + p.tmp.file("run_bad") +
                      " --ablation bogus") == 2);
    }
    SUBCASE("detectors produce reports with identical schema") {
        REQUIRE(run_cli("detect " + p.bundle + " " + p.run + "/checkpoint.ckpt --out " +
                        p.tmp.file("d_gmm") + " --detector gmm") == 0);
        REQUIRE(run_cli("detect " + p.bundle + " " + p.run + "/checkpoint.ckpt --out " +
                        p.tmp.file("d_pca") + " --detector pca") == 0);
        auto gmm_table = csv::read_file(p.tmp.file("d_gmm") + "/report.csv");
        auto pca_table = csv::read_file(p.tmp.file("d_pca") + "/report.csv");
        CHECK(gmm_table.header == pca_table.header);
        CHECK(gmm_table.rows.size() == pca_table.rows.size());

        // Max policy flags nothing on validation, so the threshold line
        // holds on test scores drawn from the same model.
        auto report = detect::load_report_csv(p.tmp.file("d_gmm") + "/report.csv");
        for (std::size_t i = 0; i < report.scores.size(); ++i)
            CHECK(report.flags[i] == (report.scores[i] > report.threshold ? 1 : 0));

        REQUIRE(run_cli("evaluate " + p.tmp.file("d_gmm") + "/report.csv " + p.bundle) == 0);
        CHECK(fs::exists(p.tmp.file("d_gmm") + "/metrics.json"));
        auto metrics_text = testutil::read_text(p.tmp.file("d_gmm") + "/metrics.json");
        CHECK(metrics_text.find("precision") != std::string::npos);
        CHECK(metrics_text.find("recall") != std::string::npos);
    }
    SUBCASE("missing checkpoint exits with the data code") {
        CHECK(run_cli("detect " + p.bundle + " " + p.tmp.file("nope.ckpt") + " --out " +
                      p.tmp.file("dx")) == 3);
    }
    SUBCASE("identical seeds give byte-identical checkpoints and reports") {
        REQUIRE(run_cli("train " + p.bundle + " --out " + p.tmp.file("r1") +
                        " --epochs 1 --batches-per-epoch 6 --seed 99") == 0);
        REQUIRE(run_cli("train " + p.bundle + " --out " + p.tmp.file("r2") +
                        " --epochs 1 --batches-per-epoch 6 --seed 99") == 0);
        CHECK(testutil::read_text(p.tmp.file("r1") + "/checkpoint.ckpt") ==
              testutil::read_text(p.tmp.file("r2") + "/checkpoint.ckpt"));
        REQUIRE(run_cli("detect " + p.bundle + " " + p.tmp.file("r1") + "/checkpoint.ckpt --out " +
                        p.tmp.file("d1")) == 0);
        REQUIRE(run_cli("detect " + p.bundle + " " + p.tmp.file("r2") + "/checkpoint.ckpt --out " +
                        p.tmp.file("d2") + " --threads 4") == 0);
        CHECK(testutil::read_text(p.tmp.file("d1") + "/report.csv") ==
              testutil::read_text(p.tmp.file("d2") + "/report.csv"));
    }
}

TEST_CASE("cli config file with unknown keys is rejected") {
    testutil::TempDir tmp("hyperts_cfg");
    testutil::write_text(tmp.file("bad.json"), R"({"model": {"windoww": 9}})");
    testutil::write_text(tmp.file("ok.json"), R"({"model": {"window": 16}, "split": [0.6, 0.2, 0.2]})");
    const std::string data = tmp.file("data.csv");
    REQUIRE(run_cli("synth --out " + data + " --length 400 --seed 2") == 0);
    CHECK(run_cli("prepare " + data + " --out " + tmp.file("b1") + " --config " +
                  tmp.file("bad.json")) == 2);
    CHECK(run_cli("prepare " + data + " --out " + tmp.file("b2") + " --config " +
                  tmp.file("ok.json")) == 0);
    auto meta = testutil::read_text(tmp.file("b2") + "/meta.json");
    CHECK(meta.find("\"window\": 16") != std::string::npos);
}
