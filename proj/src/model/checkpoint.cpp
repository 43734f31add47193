#include "hyperts/model/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "hyperts/core/error.hpp"
#include "json.hpp"

namespace hyperts::model {

namespace {

constexpr char kMagic[8] = {'H', 'Y', 'T', 'S', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

struct BlobRef {
    std::string name;
    std::vector<int> shape;
    const std::vector<double>* data;
};

std::vector<BlobRef> collect_blobs(ModelParams& params) {
    std::vector<BlobRef> blobs;
    for (const auto& [name, tensor] : params.named())
        blobs.push_back({name, tensor.shape(), &tensor.data()});
    for (const auto& [name, buffer] : params.named_buffers())
        blobs.push_back({name, {static_cast<int>(buffer->size())}, buffer});
    return blobs;
}

void write_all(std::ofstream& out, const void* data, std::size_t size) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

} // namespace

void save_checkpoint(const std::string& path, Checkpoint& checkpoint) {
    auto blobs = collect_blobs(checkpoint.params);

    nlohmann::json header;
    header["version"] = kVersion;
    header["config"] = checkpoint.config.to_json();
    nlohmann::json norm;
    for (std::size_t i = 0; i < checkpoint.norm.feature_names.size(); ++i)
        norm[checkpoint.norm.feature_names[i]] = {{"min", checkpoint.norm.min_values[i]},
                                                  {"max", checkpoint.norm.max_values[i]}};
    header["normalization"] = norm;
    header["feature_order"] = checkpoint.norm.feature_names;
    header["epoch"] = checkpoint.epoch;
    header["loss_history"] = checkpoint.loss_history;
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& blob : blobs)
        manifest.push_back({{"name", blob.name}, {"shape", blob.shape}});
    header["manifest"] = manifest;

    const std::string header_text = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    write_all(out, kMagic, sizeof(kMagic));
    const std::uint32_t version = kVersion;
    write_all(out, &version, sizeof(version));
    const std::uint64_t header_len = header_text.size();
    write_all(out, &header_len, sizeof(header_len));
    write_all(out, header_text.data(), header_text.size());
    for (const auto& blob : blobs)
        write_all(out, blob.data->data(), blob.data->size() * sizeof(double));
    if (!out) throw DataError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError(path + ": not a checkpoint file");
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kVersion)
        throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw DataError(path + ": truncated checkpoint header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": corrupt checkpoint header: " + e.what());
    }

    Checkpoint ckpt;
    ckpt.config = ModelConfig::from_json(header.at("config"));
    for (const auto& name : header.at("feature_order").get<std::vector<std::string>>()) {
        const auto& entry = header.at("normalization").at(name);
        ckpt.norm.feature_names.push_back(name);
        ckpt.norm.min_values.push_back(entry.at("min").get<double>());
        ckpt.norm.max_values.push_back(entry.at("max").get<double>());
    }
    ckpt.epoch = header.at("epoch").get<int>();
    ckpt.loss_history = header.at("loss_history").get<std::vector<double>>();

    Rng rng(0);
    ckpt.params = ModelParams::init(ckpt.config, rng);
    auto blobs = collect_blobs(ckpt.params);
    const auto& manifest = header.at("manifest");
    if (manifest.size() != blobs.size())
        throw DataError(path + ": manifest lists " + std::to_string(manifest.size()) +
                        " tensors, model has " + std::to_string(blobs.size()));
    for (std::size_t i = 0; i < blobs.size(); ++i) {
        const auto name = manifest[i].at("name").get<std::string>();
        const auto shape = manifest[i].at("shape").get<std::vector<int>>();
        if (name != blobs[i].name || shape != blobs[i].shape)
            throw DataError(path + ": manifest entry '" + name +
                            "' does not match model tensor '" + blobs[i].name + "'");
        auto* dst = const_cast<std::vector<double>*>(blobs[i].data);
        in.read(reinterpret_cast<char*>(dst->data()),
                static_cast<std::streamsize>(dst->size() * sizeof(double)));
        if (!in) throw DataError(path + ": truncated tensor data for '" + name + "'");
    }
    return ckpt;
}

} // namespace hyperts::model
