#include "tscf/persistence.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "tscf/errors.hpp"
#include "tscf/hash.hpp"

namespace tscf::persistence {

using models::ClassifierConfig;
using models::LayerSpec;
using models::NoiserConfig;
using models::SequentialModel;
using nlohmann::json;
using nn::Tensor;

namespace {

static_assert(sizeof(float) == 4);

void byteswap_if_big_endian(std::vector<float>& values) {
    if constexpr (std::endian::native == std::endian::big) {
        for (float& v : values) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            bits = __builtin_bswap32(bits);
            std::memcpy(&v, &bits, 4);
        }
    }
}

json tensor_entry(const std::string& name, const Tensor& t, std::size_t offset) {
    json e;
    e["name"] = name;
    e["shape"] = t.shape;
    e["dtype"] = "float32";
    e["offset"] = offset;
    e["length"] = t.numel() * sizeof(float);
    return e;
}

struct BlobWriter {
    std::vector<float> values;

    std::size_t append(const std::string& name, const Tensor& t, json& directory) {
        if (!t.all_finite()) {
            throw IoError("checkpoint: parameter '" + name + "' contains NaN/Inf");
        }
        const std::size_t offset = values.size() * sizeof(float);
        directory.push_back(tensor_entry(name, t, offset));
        values.insert(values.end(), t.values.begin(), t.values.end());
        return offset;
    }
};

void save_model(const std::string& kind, const SequentialModel& net,
                const json& arch, const json& meta, const std::string& base) {
    json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["model_kind"] = kind;
    manifest["endianness"] = "little";
    manifest["arch"] = arch;
    json layers = json::array();
    for (const LayerSpec& l : net.layers) layers.push_back(layer_to_json(l));
    manifest["layers"] = layers;
    manifest["meta"] = meta;

    BlobWriter blob;
    json directory = json::array();
    for (const std::string& name : net.params.names()) {
        blob.append(name, net.params.at(name), directory);
    }
    for (const std::string& name : net.buffers.names()) {
        blob.append(name, net.buffers.at(name), directory);
    }
    manifest["tensors"] = std::move(directory);

    byteswap_if_big_endian(blob.values);
    const std::string bin_path = base + ".bin";
    {
        std::ofstream out(bin_path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write checkpoint blob: " + bin_path);
        out.write(reinterpret_cast<const char*>(blob.values.data()),
                  static_cast<std::streamsize>(blob.values.size() * sizeof(float)));
        if (!out) throw IoError("write failed: " + bin_path);
    }
    manifest["blob_hash"] = hash_file(bin_path);

    std::ofstream out(base + ".json", std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint manifest: " + base + ".json");
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + base + ".json");
}

json read_manifest(const std::string& base, const std::string& expected_kind) {
    std::ifstream in(base + ".json");
    if (!in) {
        throw IoError("checkpoint manifest not found: " + base + ".json");
    }
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw IoError("checkpoint manifest " + base + ".json is not valid JSON: " +
                      e.what());
    }
    const int version = manifest.value("format_version", -1);
    if (version != kFormatVersion) {
        throw IoError("checkpoint " + base + ": unsupported format version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(kFormatVersion) + ")");
    }
    const std::string kind = manifest.value("model_kind", "");
    if (kind != expected_kind) {
        throw IoError("checkpoint " + base + ": model kind '" + kind +
                      "' does not match requested '" + expected_kind + "'");
    }
    if (manifest.value("endianness", "little") != "little") {
        throw IoError("checkpoint " + base + ": unknown endianness declaration");
    }
    return manifest;
}

void load_into(const json& manifest, const std::string& base, SequentialModel& net) {
    const std::string bin_path = base + ".bin";
    const std::string expected_hash = manifest.value("blob_hash", "");
    if (hash_file(bin_path) != expected_hash) {
        throw IoError("checkpoint " + base + ": blob hash mismatch (corrupt or tampered)");
    }
    std::ifstream in(bin_path, std::ios::binary);
    if (!in) throw IoError("checkpoint blob not found: " + bin_path);
    std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());

    std::size_t expected_offset = 0;
    for (const json& entry : manifest.at("tensors")) {
        const std::string name = entry.at("name");
        const std::size_t offset = entry.at("offset");
        const std::size_t length = entry.at("length");
        const auto shape = entry.at("shape").get<nn::Shape>();
        if (entry.value("dtype", "float32") != "float32") {
            throw IoError("checkpoint tensor '" + name + "': unsupported dtype");
        }
        if (offset != expected_offset) {
            throw IoError("checkpoint tensor '" + name + "': offsets must be contiguous");
        }
        if (length != nn::shape_numel(shape) * sizeof(float)) {
            throw IoError("checkpoint tensor '" + name + "': length does not match shape");
        }
        expected_offset = offset + length;

        Tensor* dst = nullptr;
        if (net.params.contains(name)) {
            dst = &net.params.at(name);
        } else if (net.buffers.contains(name)) {
            dst = &net.buffers.at(name);
        } else {
            throw IoError("checkpoint tensor '" + name + "' has no slot in the model");
        }
        if (dst->shape != shape) {
            throw IoError("checkpoint tensor '" + name + "': shape " + nn::shape_str(shape) +
                          " does not match model " + nn::shape_str(dst->shape));
        }
        if (offset + length > raw.size()) {
            throw IoError("checkpoint tensor '" + name + "': blob too short");
        }
        std::memcpy(dst->values.data(), raw.data() + offset, length);
        byteswap_if_big_endian(dst->values);
    }
    if (expected_offset != raw.size()) {
        throw IoError("checkpoint " + base + ": blob has trailing bytes");
    }
    const std::size_t declared = manifest.at("tensors").size();
    if (declared != net.params.size() + net.buffers.size()) {
        throw IoError("checkpoint " + base + ": tensor directory is missing entries");
    }
}

void check_layers(const json& manifest, const SequentialModel& net,
                  const std::string& base) {
    const json& layers = manifest.at("layers");
    if (layers.size() != net.layers.size()) {
        throw IoError("checkpoint " + base + ": layer count mismatch");
    }
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (layer_from_json(layers[i]) != net.layers[i]) {
            throw IoError("checkpoint " + base + ": layer spec mismatch at index " +
                          std::to_string(i));
        }
    }
}

}  // namespace

json layer_to_json(const LayerSpec& layer) {
    json j;
    j["kind"] = models::layer_kind_name(layer.kind);
    j["name"] = layer.name;
    switch (layer.kind) {
        case models::LayerKind::Conv1d:
            j["in"] = layer.in_dim;
            j["out"] = layer.out_dim;
            j["kernel"] = layer.kernel;
            break;
        case models::LayerKind::Dense:
            j["in"] = layer.in_dim;
            j["out"] = layer.out_dim;
            if (layer.zero_init) j["zero_init"] = true;
            break;
        case models::LayerKind::BatchNorm:
            j["features"] = layer.in_dim;
            break;
        case models::LayerKind::Dropout:
            j["rate"] = layer.rate;
            break;
        case models::LayerKind::Activation:
            j["activation"] = nn::act_name(layer.act);
            break;
    }
    return j;
}

LayerSpec layer_from_json(const json& j) {
    LayerSpec layer;
    layer.kind = models::layer_kind_from_name(j.at("kind"));
    layer.name = j.at("name");
    switch (layer.kind) {
        case models::LayerKind::Conv1d:
            layer.in_dim = j.at("in");
            layer.out_dim = j.at("out");
            layer.kernel = j.at("kernel");
            break;
        case models::LayerKind::Dense:
            layer.in_dim = j.at("in");
            layer.out_dim = j.at("out");
            layer.zero_init = j.value("zero_init", false);
            break;
        case models::LayerKind::BatchNorm:
            layer.in_dim = j.at("features");
            break;
        case models::LayerKind::Dropout:
            layer.rate = j.at("rate");
            break;
        case models::LayerKind::Activation:
            layer.act = nn::act_from_name(j.at("activation"));
            break;
    }
    return layer;
}

namespace {

json classifier_arch(const ClassifierConfig& cfg) {
    json j;
    j["series_len"] = cfg.series_len;
    j["classes"] = cfg.classes;
    j["conv_blocks"] = cfg.conv_blocks;
    j["conv_channels"] = cfg.conv_channels;
    j["kernel"] = cfg.kernel;
    j["dense_units"] = cfg.dense_units;
    j["dropout"] = cfg.dropout;
    return j;
}

ClassifierConfig classifier_arch_from_json(const json& j) {
    ClassifierConfig cfg;
    cfg.series_len = j.at("series_len");
    cfg.classes = j.at("classes");
    cfg.conv_blocks = j.at("conv_blocks");
    cfg.conv_channels = j.at("conv_channels");
    cfg.kernel = j.at("kernel");
    cfg.dense_units = j.at("dense_units");
    cfg.dropout = j.at("dropout");
    return cfg;
}

}  // namespace

void save_classifier(const models::ClassifierModel& model, const std::string& base,
                     const json& meta) {
    save_model("classifier", model.net, classifier_arch(model.cfg), meta, base);
}

void save_noiser(const models::NoiserModel& model, const std::string& base,
                 const json& meta) {
    json arch;
    arch["series_len"] = model.cfg.series_len;
    arch["hidden_units"] = model.cfg.hidden_units;
    arch["dropout"] = model.cfg.dropout;
    save_model("noiser", model.net, arch, meta, base);
}

void save_discriminator(const models::DiscriminatorModel& model,
                        const std::string& base, const json& meta) {
    save_model("discriminator", model.net, classifier_arch(model.cfg), meta, base);
}

models::ClassifierModel load_classifier(const std::string& base) {
    const json manifest = read_manifest(base, "classifier");
    Rng init_rng(0);
    models::ClassifierModel model =
        models::make_classifier(classifier_arch_from_json(manifest.at("arch")), init_rng);
    check_layers(manifest, model.net, base);
    load_into(manifest, base, model.net);
    return model;
}

models::NoiserModel load_noiser(const std::string& base) {
    const json manifest = read_manifest(base, "noiser");
    const json& arch = manifest.at("arch");
    NoiserConfig cfg;
    cfg.series_len = arch.at("series_len");
    cfg.hidden_units = arch.at("hidden_units");
    cfg.dropout = arch.at("dropout");
    Rng init_rng(0);
    models::NoiserModel model = models::make_noiser(cfg, init_rng);
    check_layers(manifest, model.net, base);
    load_into(manifest, base, model.net);
    return model;
}

models::DiscriminatorModel load_discriminator(const std::string& base) {
    const json manifest = read_manifest(base, "discriminator");
    Rng init_rng(0);
    models::DiscriminatorModel model = models::make_discriminator(
        classifier_arch_from_json(manifest.at("arch")), init_rng);
    check_layers(manifest, model.net, base);
    load_into(manifest, base, model.net);
    return model;
}

json load_meta(const std::string& base) {
    std::ifstream in(base + ".json");
    if (!in) throw IoError("checkpoint manifest not found: " + base + ".json");
    json manifest;
    in >> manifest;
    return manifest.value("meta", json::object());
}

bool checkpoint_exists(const std::string& base) {
    return std::filesystem::exists(base + ".json") &&
           std::filesystem::exists(base + ".bin");
}

}  // namespace tscf::persistence
