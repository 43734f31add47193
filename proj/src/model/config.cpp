#include "hyperts/model/config.hpp"

#include "hyperts/core/error.hpp"

namespace hyperts::model {

Ablation ablation_from_string(const std::string& name) {
    if (name == "full") return Ablation::full;
    if (name == "no_hyper") return Ablation::no_hyper;
    if (name == "no_tcn") return Ablation::no_tcn;
    if (name == "no_gcn") return Ablation::no_gcn;
    if (name == "no_mtcl") return Ablation::no_mtcl;
    throw ConfigError("unknown ablation '" + name +
                      "' (expected full, no_hyper, no_tcn, no_gcn or no_mtcl)");
}

std::string to_string(Ablation a) {
    switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_hyper: return "no_hyper";
    case Ablation::no_tcn: return "no_tcn";
    case Ablation::no_gcn: return "no_gcn";
    case Ablation::no_mtcl: return "no_mtcl";
    }
    throw ConfigError("unknown ablation value");
}

StructureMode structure_mode_from_string(const std::string& name) {
    if (name == "mtcl") return StructureMode::mtcl;
    if (name == "gsl") return StructureMode::gsl;
    throw ConfigError("unknown structure mode '" + name + "' (expected mtcl or gsl)");
}

std::string to_string(StructureMode m) {
    return m == StructureMode::mtcl ? "mtcl" : "gsl";
}

void ModelConfig::validate() const {
    if (window < 1) throw ConfigError("window length must be >= 1");
    if (horizon < 1) throw ConfigError("prediction horizon must be >= 1");
    if (hypergraph.nodes < 1) throw ConfigError("model config has no feature count");
    tcn.validate();
    mask.validate();
    if (ablation != Ablation::no_tcn && window < tcn::required_window(tcn))
        throw ConfigError("window length " + std::to_string(window) +
                          " below the receptive field; need at least " +
                          std::to_string(tcn::required_window(tcn)));
    for (int h : mlp_hidden)
        if (h < 1) throw ConfigError("mlp hidden widths must be positive");
    if (gconv_channels < 0) throw ConfigError("gconv channel width must be nonnegative");
    if (gsl_neighbors < 1) throw ConfigError("gsl neighbor count must be >= 1");
    if (lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
    if (epochs < 0) throw ConfigError("epoch count must be nonnegative");
    if (batch < 1) throw ConfigError("batch size must be >= 1");
    if (batches_per_epoch < 0) throw ConfigError("batches per epoch must be nonnegative");
    if (hypergraph.embed_dim < 1) throw ConfigError("embedding dimension must be >= 1");
    if (hypergraph.alpha <= 0.0) throw ConfigError("embedding nonlinearity gain must be positive");
}

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::vector<std::string>& known,
                         const std::string& scope) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const auto& k : known)
            if (k == key) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown config key '" + scope + key + "'");
    }
}

} // namespace

nlohmann::json ModelConfig::to_json() const {
    nlohmann::json j;
    j["window"] = window;
    j["horizon"] = horizon;
    j["tcn"] = {{"layers", tcn.layers},
                {"kernel_sizes", tcn.kernel_sizes},
                {"dilation_exponential", tcn.dilation_exponential},
                {"conv_channels", tcn.conv_channels},
                {"residual_channels", tcn.residual_channels},
                {"skip_channels", tcn.skip_channels}};
    j["hypergraph"] = {{"nodes", hypergraph.nodes},
                       {"embed_dim", hypergraph.embed_dim},
                       {"hyperedges", hypergraph.hyperedges},
                       {"alpha", hypergraph.alpha},
                       {"attention_input",
                        hypergraph.attention_input == hg::AttentionInput::n2 ? "n2" : "n1"}};
    j["gsl_neighbors"] = gsl_neighbors;
    j["mlp_hidden"] = mlp_hidden;
    j["gconv_channels"] = gconv_channels;
    j["mask"] = {{"ratio", mask.base_ratio},
                 {"tau", mask.tau},
                 {"decay", mask.alpha_decay},
                 {"stage_boundaries", mask.stage_boundaries},
                 {"invert_importance", mask.invert_importance}};
    j["ablation"] = to_string(ablation);
    j["structure"] = to_string(structure);
    j["lr"] = lr;
    j["momentum"] = momentum;
    j["epochs"] = epochs;
    j["batch"] = batch;
    j["batches_per_epoch"] = batches_per_epoch;
    j["seed"] = seed;
    j["snapshot_laplacian"] = snapshot_laplacian;
    return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"window", "horizon", "tcn", "hypergraph", "gsl_neighbors",
                            "mlp_hidden", "gconv_channels", "mask", "ablation", "structure",
                            "lr", "momentum", "epochs", "batch", "batches_per_epoch", "seed",
                            "snapshot_laplacian"},
                        "");
    ModelConfig c;
    try {
        c.window = j.value("window", c.window);
        c.horizon = j.value("horizon", c.horizon);
        if (j.contains("tcn")) {
            const auto& t = j.at("tcn");
            reject_unknown_keys(t, {"layers", "kernel_sizes", "dilation_exponential",
                                    "conv_channels", "residual_channels", "skip_channels"},
                                "tcn.");
            c.tcn.layers = t.value("layers", c.tcn.layers);
            c.tcn.kernel_sizes = t.value("kernel_sizes", c.tcn.kernel_sizes);
            c.tcn.dilation_exponential =
                t.value("dilation_exponential", c.tcn.dilation_exponential);
            c.tcn.conv_channels = t.value("conv_channels", c.tcn.conv_channels);
            c.tcn.residual_channels = t.value("residual_channels", c.tcn.residual_channels);
            c.tcn.skip_channels = t.value("skip_channels", c.tcn.skip_channels);
        }
        if (j.contains("hypergraph")) {
            const auto& h = j.at("hypergraph");
            reject_unknown_keys(h, {"nodes", "embed_dim", "hyperedges", "alpha", "attention_input"},
                                "hypergraph.");
            c.hypergraph.nodes = h.value("nodes", c.hypergraph.nodes);
            c.hypergraph.embed_dim = h.value("embed_dim", c.hypergraph.embed_dim);
            c.hypergraph.hyperedges = h.value("hyperedges", c.hypergraph.hyperedges);
            c.hypergraph.alpha = h.value("alpha", c.hypergraph.alpha);
            const std::string att = h.value("attention_input", std::string("n2"));
            if (att != "n1" && att != "n2")
                throw ConfigError("hypergraph.attention_input must be n1 or n2");
            c.hypergraph.attention_input =
                att == "n2" ? hg::AttentionInput::n2 : hg::AttentionInput::n1;
        }
        c.gsl_neighbors = j.value("gsl_neighbors", c.gsl_neighbors);
        c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
        c.gconv_channels = j.value("gconv_channels", c.gconv_channels);
        if (j.contains("mask")) {
            const auto& m = j.at("mask");
            reject_unknown_keys(m, {"ratio", "tau", "decay", "stage_boundaries",
                                    "invert_importance"},
                                "mask.");
            c.mask.base_ratio = m.value("ratio", c.mask.base_ratio);
            c.mask.tau = m.value("tau", c.mask.tau);
            c.mask.alpha_decay = m.value("decay", c.mask.alpha_decay);
            c.mask.stage_boundaries = m.value("stage_boundaries", c.mask.stage_boundaries);
            c.mask.invert_importance = m.value("invert_importance", c.mask.invert_importance);
        }
        if (j.contains("ablation")) c.ablation = ablation_from_string(j.at("ablation"));
        if (j.contains("structure")) c.structure = structure_mode_from_string(j.at("structure"));
        c.lr = j.value("lr", c.lr);
        c.momentum = j.value("momentum", c.momentum);
        c.epochs = j.value("epochs", c.epochs);
        c.batch = j.value("batch", c.batch);
        c.batches_per_epoch = j.value("batches_per_epoch", c.batches_per_epoch);
        c.seed = j.value("seed", c.seed);
        c.snapshot_laplacian = j.value("snapshot_laplacian", c.snapshot_laplacian);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed model config: ") + e.what());
    }
    return c;
}

} // namespace hyperts::model
