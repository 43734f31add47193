#include "hyperts/cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "hyperts/core/csv.hpp"
#include "hyperts/core/error.hpp"
#include "hyperts/detect/gmm.hpp"
#include "hyperts/detect/pca.hpp"
#include "hyperts/detect/report.hpp"
#include "hyperts/model/checkpoint.hpp"

namespace hyperts::cli {

namespace fs = std::filesystem;

namespace {

void ensure_out_dir(const std::string& dir, bool force, const char* what) {
    fs::path path(dir);
    if (fs::exists(path)) {
        if (!force && !fs::is_empty(path))
            throw ConfigError(std::string(what) + " output directory '" + dir +
                              "' already exists; pass --force to overwrite");
    } else {
        std::error_code ec;
        fs::create_directories(path, ec);
        if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
    }
}

data::TimeSeriesDataset load_split(const std::string& bundle_dir, const std::string& name) {
    return data::load_csv((fs::path(bundle_dir) / (name + ".csv")).string());
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

std::vector<std::uint8_t> labels_at(const data::TimeSeriesDataset& ds,
                                    const std::vector<int>& rows) {
    std::vector<std::uint8_t> out;
    out.reserve(rows.size());
    for (int r : rows) {
        if (r < 0 || static_cast<std::size_t>(r) >= ds.labels.size())
            throw DataError("timestep " + std::to_string(r) + " outside the labeled split");
        out.push_back(ds.labels[static_cast<std::size_t>(r)]);
    }
    return out;
}

} // namespace

void cmd_prepare(const PrepareArgs& args) {
    ensure_out_dir(args.out_dir, args.force, "prepare");
    auto raw = data::load_csv(args.input_csv);
    auto cleaned = data::clean(raw);

    const std::size_t min_len =
        static_cast<std::size_t>(args.config.model.window + args.config.model.horizon);
    auto splits = data::split(cleaned, args.config.split, min_len);

    auto norm = data::minmax_fit(splits.train);
    auto train = data::minmax_apply(splits.train, norm);
    auto val = data::minmax_apply(splits.val, norm);
    auto test = data::minmax_apply(splits.test, norm);

    const fs::path out(args.out_dir);
    data::save_csv((out / "train.csv").string(), train);
    data::save_csv((out / "val.csv").string(), val);
    data::save_csv((out / "test.csv").string(), test);
    norm.save_json((out / "norm_state.json").string());

    nlohmann::json meta;
    meta["feature_names"] = cleaned.feature_names;
    meta["has_labels"] = cleaned.has_labels();
    meta["rows"] = {{"train", train.timesteps()}, {"val", val.timesteps()},
                    {"test", test.timesteps()}};
    meta["window"] = args.config.model.window;
    meta["horizon"] = args.config.model.horizon;
    meta["split"] = {args.config.split.train, args.config.split.val, args.config.split.test};
    write_json_file((out / "meta.json").string(), meta);
}

void cmd_synth(const SynthArgs& args) {
    auto ds = data::synth_generate(args.spec, args.seed);
    data::save_csv(args.out_csv, ds);
}

void cmd_train(const TrainArgs& args) {
    ensure_out_dir(args.out_dir, args.force, "train");
    auto train_ds = load_split(args.bundle_dir, "train");
    auto norm = data::NormalizationState::load_json(
        (fs::path(args.bundle_dir) / "norm_state.json").string());

    auto result = model::train(train_ds, args.config.model, args.out_dir);

    model::Checkpoint ckpt;
    ckpt.config = args.config.model;
    ckpt.config.hypergraph.nodes = static_cast<int>(train_ds.features());
    ckpt.norm = norm;
    ckpt.epoch = args.config.model.epochs;
    ckpt.loss_history = result.epoch_losses;
    ckpt.params = result.params;
    model::save_checkpoint((fs::path(args.out_dir) / "checkpoint.ckpt").string(), ckpt);

    Mat history(result.epoch_losses.size(), 2);
    for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
        history(e, 0) = static_cast<double>(e + 1);
        history(e, 1) = result.epoch_losses[e];
    }
    csv::write_matrix((fs::path(args.out_dir) / "loss_history.csv").string(), {"epoch", "loss"},
                      history);
}

void cmd_detect(const DetectArgs& args) {
    args.detector.validate();
    ensure_out_dir(args.out_dir, args.force, "detect");
    auto ckpt = model::load_checkpoint(args.checkpoint_path);
    auto val = load_split(args.bundle_dir, "val");
    auto test = load_split(args.bundle_dir, "test");

    auto val_pred = model::predict(val, ckpt.params, ckpt.config, args.threads);
    auto test_pred = model::predict(test, ckpt.params, ckpt.config, args.threads);

    Mat val_raw = detect::signed_errors(val_pred, val);
    Mat test_raw = detect::signed_errors(test_pred, test);

    auto normalizer = detect::ErrorNormalizer::fit(val_raw);
    Mat val_errors = normalizer.apply(val_raw);
    Mat test_errors = normalizer.apply(test_raw);
    if (args.detector.sliding_normalizer) {
        val_errors = detect::sliding_window_normalize(val_errors, args.detector.sliding_window);
        test_errors = detect::sliding_window_normalize(test_errors, args.detector.sliding_window);
    }

    std::vector<double> val_scores, test_scores;
    Mat attribution;
    if (args.detector.kind == "pca") {
        auto det = detect::pca_fit(val_errors, args.detector.variance_target);
        val_scores = detect::pca_score(val_errors, det);
        test_scores = detect::pca_score(test_errors, det, &attribution);
    } else {
        detect::GmmFitOptions options;
        options.k_max = args.detector.k_max;
        options.mode =
            args.detector.k_mode == "f1" ? detect::KSelection::f1 : detect::KSelection::bic;
        options.seed = 1;
        std::vector<std::uint8_t> val_labels;
        const std::vector<std::uint8_t>* labels_ptr = nullptr;
        if (options.mode == detect::KSelection::f1) {
            if (!val.has_labels())
                throw ConfigError("gmm k selection by f1 needs a labeled validation split");
            val_labels = labels_at(val, val_pred.target_rows);
            labels_ptr = &val_labels;
        }
        auto det = detect::gmm_fit(val_errors, options, labels_ptr);
        val_scores = detect::gmm_score(val_errors, det);
        test_scores = detect::gmm_score(test_errors, det);
        attribution = test_errors;
    }

    const auto policy = args.detector.threshold_policy == "quantile"
                            ? detect::ThresholdPolicy::quantile
                            : detect::ThresholdPolicy::max;
    const double threshold = detect::threshold_select(val_scores, policy, args.detector.quantile);

    auto report = detect::flag_anomalies(test_scores, threshold, attribution,
                                         test_pred.target_rows, test.feature_names);
    detect::write_report_csv((fs::path(args.out_dir) / "report.csv").string(), report);
    detect::write_report_json((fs::path(args.out_dir) / "report.json").string(), report,
                              args.detector.kind);
}

eval::Metrics cmd_evaluate(const EvaluateArgs& args) {
    auto report = detect::load_report_csv(args.report_csv);
    auto test = load_split(args.bundle_dir, "test");
    if (!test.has_labels())
        throw DataError("evaluate needs a labeled test split in " + args.bundle_dir);

    auto labels = labels_at(test, report.timesteps);
    auto flags = report.flags;
    if (args.point_adjust) flags = eval::point_adjust(flags, labels);
    auto counts = eval::confusion(flags, labels);
    auto m = eval::metrics(counts);

    long n_anomalies = 0;
    for (auto l : labels) n_anomalies += l;
    nlohmann::json j;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["threshold"] = report.threshold;
    j["n_anomalies"] = n_anomalies;
    j["point_adjust"] = args.point_adjust;

    const std::string out_path =
        args.out_json.empty()
            ? (fs::path(args.report_csv).parent_path() / "metrics.json").string()
            : args.out_json;
    write_json_file(out_path, j);
    std::cout << j.dump(2) << std::endl;
    return m;
}

} // namespace hyperts::cli
