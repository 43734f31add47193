#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hyperts/cli/commands.hpp"
#include "hyperts/core/error.hpp"

namespace {

using namespace hyperts;

std::string default_run_dir(std::uint64_t seed) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm_buf{};
    localtime_r(&now, &tm_buf);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_buf);
    return "runs/" + std::string(stamp) + "_" + std::to_string(seed);
}

struct CommonOptions {
    std::string config_path;
    cli::RunConfig load() const {
        return config_path.empty() ? cli::RunConfig{} : cli::RunConfig::from_file(config_path);
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hypergraph time-series forecaster and anomaly detector"};
    app.require_subcommand(1);

    // prepare
    auto* prepare = app.add_subcommand("prepare", "clean, split and normalize a CSV");
    CommonOptions prep_common;
    cli::PrepareArgs prepare_args;
    double prep_window = -1, prep_horizon = -1;
    std::vector<double> prep_split;
    prepare->add_option("input", prepare_args.input_csv, "input CSV file")->required();
    prepare->add_option("--out", prepare_args.out_dir, "output bundle directory")->required();
    prepare->add_option("--config", prep_common.config_path, "run config JSON");
    prepare->add_option("--window", prep_window, "window length override");
    prepare->add_option("--horizon", prep_horizon, "horizon override");
    prepare->add_option("--split", prep_split, "train/val/test ratios")->expected(3);
    prepare->add_flag("--force", prepare_args.force, "overwrite an existing bundle");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a labeled synthetic dataset");
    cli::SynthArgs synth_args;
    std::vector<std::string> synth_channels;
    synth->add_option("--out", synth_args.out_csv, "output CSV path")->required();
    synth->add_option("--length", synth_args.spec.length, "number of timesteps");
    synth->add_option("--rate", synth_args.spec.anomaly_rate, "anomalous timestep fraction");
    synth->add_option("--seed", synth_args.seed, "generator seed");
    synth->add_option("--channels", synth_channels,
                      "channel kinds (stationary, periodic, high_frequency, seasonal_spike, "
                      "step_change)");

    // train
    auto* train = app.add_subcommand("train", "train a forecaster on a prepared bundle");
    CommonOptions train_common;
    cli::TrainArgs train_args;
    std::string train_ablation, train_structure;
    double train_lr = -1;
    int train_epochs = -1, train_batch = -1, train_bpe = -1;
    std::uint64_t train_seed = 0;
    bool train_seed_set = false;
    train->add_option("bundle", train_args.bundle_dir, "prepared bundle directory")->required();
    train->add_option("--out", train_args.out_dir, "run output directory (default runs/<stamp>)");
    train->add_option("--config", train_common.config_path, "run config JSON");
    train->add_option("--epochs", train_epochs, "training epochs");
    train->add_option("--batch", train_batch, "mini-batch size");
    train->add_option("--batches-per-epoch", train_bpe, "cap on batches per epoch (0 = all)");
    train->add_option("--lr", train_lr, "learning rate");
    train->add_option("--ablation", train_ablation,
                      "full, no_hyper, no_tcn, no_gcn or no_mtcl");
    train->add_option("--structure", train_structure, "mtcl or gsl");
    train
        ->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& v) { train_seed = v; train_seed_set = true; },
            "run seed")
        ->expected(1);
    train->add_flag("--force", train_args.force, "overwrite an existing run directory");

    // detect
    auto* det = app.add_subcommand("detect", "score a test split against a checkpoint");
    CommonOptions detect_common;
    cli::DetectArgs detect_args;
    std::string det_kind, det_policy, det_kmode;
    double det_quantile = -1;
    det->add_option("bundle", detect_args.bundle_dir, "prepared bundle directory")->required();
    det->add_option("checkpoint", detect_args.checkpoint_path, "checkpoint file")->required();
    det->add_option("--out", detect_args.out_dir, "report output directory");
    det->add_option("--config", detect_common.config_path, "run config JSON");
    det->add_option("--detector", det_kind, "gmm or pca");
    det->add_option("--threshold-policy", det_policy, "max or quantile");
    det->add_option("--quantile", det_quantile, "quantile for the quantile policy");
    det->add_option("--k-mode", det_kmode, "gmm component selection: bic or f1");
    int det_kmax = -1;
    det->add_option("--k-max", det_kmax, "gmm component sweep bound");
    det->add_option("--threads", detect_args.threads, "worker threads for window scoring");
    det->add_flag("--force", detect_args.force, "overwrite an existing report directory");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "compare a report against test labels");
    cli::EvaluateArgs eval_args;
    evaluate->add_option("report", eval_args.report_csv, "report.csv from detect")->required();
    evaluate->add_option("bundle", eval_args.bundle_dir, "prepared bundle directory")->required();
    evaluate->add_option("--out", eval_args.out_json, "metrics JSON path");
    evaluate->add_flag("--point-adjust", eval_args.point_adjust,
                       "credit whole labeled segments once hit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (prepare->parsed()) {
            prepare_args.config = prep_common.load();
            if (prep_window > 0) prepare_args.config.model.window = static_cast<int>(prep_window);
            if (prep_horizon > 0)
                prepare_args.config.model.horizon = static_cast<int>(prep_horizon);
            if (!prep_split.empty())
                prepare_args.config.split = {prep_split[0], prep_split[1], prep_split[2]};
            cli::cmd_prepare(prepare_args);
            std::cout << "bundle written to " << prepare_args.out_dir << std::endl;
        } else if (synth->parsed()) {
            if (!synth_channels.empty()) {
                synth_args.spec.channels.clear();
                for (const auto& name : synth_channels)
                    synth_args.spec.channels.push_back(data::channel_kind_from_string(name));
            }
            cli::cmd_synth(synth_args);
            std::cout << "dataset written to " << synth_args.out_csv << std::endl;
        } else if (train->parsed()) {
            train_args.config = train_common.load();
            auto& m = train_args.config.model;
            if (train_epochs >= 0) m.epochs = train_epochs;
            if (train_batch > 0) m.batch = train_batch;
            if (train_bpe >= 0) m.batches_per_epoch = train_bpe;
            if (train_lr > 0) m.lr = train_lr;
            if (!train_ablation.empty()) m.ablation = model::ablation_from_string(train_ablation);
            if (!train_structure.empty())
                m.structure = model::structure_mode_from_string(train_structure);
            if (train_seed_set) m.seed = train_seed;
            if (train_args.out_dir.empty()) train_args.out_dir = default_run_dir(m.seed);
            cli::cmd_train(train_args);
            std::cout << "checkpoint written to " << train_args.out_dir << std::endl;
        } else if (det->parsed()) {
            detect_args.detector = detect_common.load().detector;
            if (!det_kind.empty()) detect_args.detector.kind = det_kind;
            if (!det_policy.empty()) detect_args.detector.threshold_policy = det_policy;
            if (det_quantile > 0) detect_args.detector.quantile = det_quantile;
            if (!det_kmode.empty()) detect_args.detector.k_mode = det_kmode;
            if (det_kmax > 0) detect_args.detector.k_max = det_kmax;
            if (detect_args.out_dir.empty()) detect_args.out_dir = default_run_dir(0);
            cli::cmd_detect(detect_args);
            std::cout << "report written to " << detect_args.out_dir << std::endl;
        } else if (evaluate->parsed()) {
            cli::cmd_evaluate(eval_args);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << std::endl;
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << std::endl;
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
