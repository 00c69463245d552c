#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "plateflow/haar/cascade.hpp"

namespace plateflow::haar {

inline constexpr const char* kCascadeFormatVersion = "plateflow-cascade-v1";

nlohmann::json cascade_to_json(const CascadeModel& model);
/// Rejects unknown versions and models that fail validate().
CascadeModel cascade_from_json(const nlohmann::json& doc);

void save_cascade(const std::filesystem::path& path, const CascadeModel& model);
CascadeModel load_cascade(const std::filesystem::path& path);

}  // namespace plateflow::haar
