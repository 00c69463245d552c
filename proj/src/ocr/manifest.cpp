#include "plateflow/ocr/manifest.hpp"

#include <fstream>
#include <stdexcept>

namespace plateflow::ocr {

using nlohmann::json;

const std::string* OcrManifest::lookup(const std::string& stream_id, int instance_id) const {
  const auto s = streams.find(stream_id);
  if (s == streams.end()) return nullptr;
  const auto i = s->second.find(instance_id);
  return i == s->second.end() ? nullptr : &i->second;
}

void OcrManifest::merge(const OcrManifest& other) {
  for (const auto& [sid, instances] : other.streams) {
    for (const auto& [iid, text] : instances) streams[sid][iid] = text;
  }
}

json manifest_to_json(const OcrManifest& m) {
  json streams = json::object();
  for (const auto& [sid, instances] : m.streams) {
    json entry = json::object();
    for (const auto& [iid, text] : instances) entry[std::to_string(iid)] = text;
    streams[sid] = std::move(entry);
  }
  return {{"v", 1}, {"streams", std::move(streams)}};
}

OcrManifest manifest_from_json(const json& doc) {
  try {
    if (doc.at("v").get<int>() != 1) throw std::runtime_error("unsupported OCR manifest version");
    OcrManifest m;
    for (const auto& [sid, instances] : doc.at("streams").items()) {
      for (const auto& [iid, text] : instances.items()) m.streams[sid][std::stoi(iid)] = text.get<std::string>();
    }
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed OCR manifest: ") + e.what());
  }
}

OcrManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return manifest_from_json(json::parse(in));
}

void save_manifest(const std::filesystem::path& path, const OcrManifest& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << manifest_to_json(m).dump() << '\n';
}

}  // namespace plateflow::ocr
