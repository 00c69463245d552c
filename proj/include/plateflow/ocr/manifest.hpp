#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace plateflow::ocr {

/// Ground-truth plate strings keyed by (stream_id, instance_id).
struct OcrManifest {
  std::map<std::string, std::map<int, std::string>> streams;

  const std::string* lookup(const std::string& stream_id, int instance_id) const;
  void merge(const OcrManifest& other);
  bool operator==(const OcrManifest&) const = default;
};

nlohmann::json manifest_to_json(const OcrManifest& m);
OcrManifest manifest_from_json(const nlohmann::json& doc);
OcrManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const OcrManifest& m);

}  // namespace plateflow::ocr
