// Shared JSON (de)serialization helpers for the artifact writers. Internal to
// src/; public headers stay free of the json dependency.
#pragma once

#include <optional>
#include <string>

#include "advforge/tabular.hpp"
#include "json.hpp"

namespace advforge {

using nlohmann::ordered_json;

ordered_json read_json_file(const std::string& path, const char* what);
Schema schema_from_json(const ordered_json& j);
ordered_json schema_to_json(const Schema& s);
ordered_json encoder_to_json(const std::optional<EncoderMap>& encoder);
std::optional<EncoderMap> encoder_from_json(const ordered_json& j);

}  // namespace advforge
