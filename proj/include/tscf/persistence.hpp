#pragma once

#include <string>

#include <json.hpp>

#include "tscf/models.hpp"

namespace tscf::persistence {

// A checkpoint is two files: `<base>.json` (manifest: format version, model
// kind, layer specs, tensor directory, metadata, blob hash) and `<base>.bin`
// (raw little-endian float32 values, row-major, concatenated in directory
// order: parameters first, then buffers). The format is fixed little-endian
// so checkpoints load identically across platforms.

constexpr int kFormatVersion = 1;

nlohmann::json layer_to_json(const models::LayerSpec& layer);
models::LayerSpec layer_from_json(const nlohmann::json& j);

// Refuses to write non-finite parameters, naming the offender.
void save_classifier(const models::ClassifierModel& model, const std::string& base,
                     const nlohmann::json& meta = nlohmann::json::object());
void save_noiser(const models::NoiserModel& model, const std::string& base,
                 const nlohmann::json& meta = nlohmann::json::object());
void save_discriminator(const models::DiscriminatorModel& model,
                        const std::string& base,
                        const nlohmann::json& meta = nlohmann::json::object());

models::ClassifierModel load_classifier(const std::string& base);
models::NoiserModel load_noiser(const std::string& base);
models::DiscriminatorModel load_discriminator(const std::string& base);

// Metadata block of a saved checkpoint.
nlohmann::json load_meta(const std::string& base);

bool checkpoint_exists(const std::string& base);

}  // namespace tscf::persistence
