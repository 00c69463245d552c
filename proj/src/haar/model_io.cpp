#include "plateflow/haar/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace plateflow::haar {

using nlohmann::json;

namespace {

// JSON has no infinities; they are spelled "+inf" / "-inf".
json encode_real(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

double decode_real(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "+inf" || s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ModelError("bad real value '" + s + "'");
  }
  if (!v.is_number()) throw ModelError("expected a number");
  return v.get<double>();
}

}  // namespace

json cascade_to_json(const CascadeModel& model) {
  json features = json::array();
  for (const auto& f : model.features) {
    features.push_back({{"kind", std::string(to_string(f.kind))}, {"x", f.x}, {"y", f.y}, {"w", f.w}, {"h", f.h}});
  }
  json stages = json::array();
  for (const auto& stage : model.stages) {
    json stumps = json::array();
    for (const auto& s : stage.stumps) {
      stumps.push_back({{"feature_id", s.feature_id},
                        {"threshold", encode_real(s.threshold)},
                        {"polarity", s.polarity},
                        {"alpha", encode_real(s.alpha)}});
    }
    stages.push_back({{"stumps", std::move(stumps)}, {"stage_threshold", encode_real(stage.stage_threshold)}});
  }
  return {{"version", kCascadeFormatVersion},
          {"base_window", {{"w", model.base_w}, {"h", model.base_h}}},
          {"features", std::move(features)},
          {"stages", std::move(stages)}};
}

CascadeModel cascade_from_json(const json& doc) {
  try {
    if (!doc.is_object() || doc.value("version", std::string{}) != kCascadeFormatVersion) {
      throw ModelError("unsupported cascade format version");
    }
    CascadeModel model;
    model.base_w = doc.at("base_window").at("w").get<int>();
    model.base_h = doc.at("base_window").at("h").get<int>();
    for (const auto& f : doc.at("features")) {
      model.features.push_back({haar_kind_from_string(f.at("kind").get<std::string>()), f.at("x").get<int>(),
                                f.at("y").get<int>(), f.at("w").get<int>(), f.at("h").get<int>()});
    }
    for (const auto& st : doc.at("stages")) {
      Stage stage;
      stage.stage_threshold = decode_real(st.at("stage_threshold"));
      for (const auto& s : st.at("stumps")) {
        stage.stumps.push_back({s.at("feature_id").get<int>(), decode_real(s.at("threshold")),
                                s.at("polarity").get<int>(), decode_real(s.at("alpha"))});
      }
      model.stages.push_back(std::move(stage));
    }
    validate(model);
    return model;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed cascade document: ") + e.what());
  }
}

void save_cascade(const std::filesystem::path& path, const CascadeModel& model) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path.string());
  out << cascade_to_json(model).dump(1) << '\n';
}

CascadeModel load_cascade(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
  return cascade_from_json(doc);
}

}  // namespace plateflow::haar
