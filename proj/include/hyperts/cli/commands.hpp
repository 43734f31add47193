#pragma once

#include <cstdint>
#include <string>

#include "hyperts/cli/run_config.hpp"
#include "hyperts/data/synth.hpp"
#include "hyperts/eval/metrics.hpp"

namespace hyperts::cli {

struct PrepareArgs {
    std::string input_csv;
    std::string out_dir;
    RunConfig config;
    bool force = false;
};

/// Clean, split chronologically, fit min-max on the training slice and
/// write train/val/test.csv, norm_state.json and meta.json.
void cmd_prepare(const PrepareArgs& args);

struct SynthArgs {
    data::SynthSpec spec;
    std::uint64_t seed = 7;
    std::string out_csv;
};

void cmd_synth(const SynthArgs& args);

struct TrainArgs {
    std::string bundle_dir;
    std::string out_dir;
    RunConfig config;
    bool force = false;
};

/// Train on the prepared bundle; writes checkpoint.ckpt, loss_history.csv
/// and per-epoch laplacian snapshots into out_dir.
void cmd_train(const TrainArgs& args);

struct DetectArgs {
    std::string bundle_dir;
    std::string checkpoint_path;
    std::string out_dir;
    DetectorConfig detector;
    int threads = 1;
    bool force = false;
};

/// Fit the detector on validation errors, score the test split and write
/// report.csv plus report.json into out_dir.
void cmd_detect(const DetectArgs& args);

struct EvaluateArgs {
    std::string report_csv;
    std::string bundle_dir; // labels come from the bundle's test split
    std::string out_json;   // empty writes next to the report
    bool point_adjust = false;
};

/// Join report flags with test labels and write precision/recall/f1.
eval::Metrics cmd_evaluate(const EvaluateArgs& args);

} // namespace hyperts::cli
