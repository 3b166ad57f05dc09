#include "fewts/serialize.hpp"

#include <algorithm>
#include <unordered_map>

#include "fewts/errors.hpp"
#include "fewts/util.hpp"
#include "json.hpp"

namespace fewts {

using nlohmann::json;

void save_params_file(const std::filesystem::path& path, const std::string& kind,
                      const NamedParams& params, const std::string& config_json) {
  json doc;
  doc["format"] = "fewts";
  doc["kind"] = kind;
  doc["config"] = config_json.empty() ? json() : json::parse(config_json);
  json plist = json::array();
  for (const auto& p : params) {
    json entry;
    entry["name"] = p.name;
    entry["shape"] = p.tensor.shape();
    entry["data"] = std::vector<double>(p.tensor.data().begin(), p.tensor.data().end());
    plist.push_back(std::move(entry));
  }
  doc["params"] = std::move(plist);
  write_text_file(path, doc.dump(2) + "\n");
}

LoadedParams load_params_file(const std::filesystem::path& path,
                              const std::string& expected_kind) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw DataError("malformed parameter file " + path.string() + ": " + e.what());
  }
  LoadedParams out;
  try {
    if (doc.at("format").get<std::string>() != "fewts") {
      throw DataError("parameter file " + path.string() + ": unrecognized format tag");
    }
    out.kind = doc.at("kind").get<std::string>();
    out.config_json = doc.contains("config") ? doc["config"].dump() : "null";
    for (const auto& entry : doc.at("params")) {
      Shape shape = entry.at("shape").get<Shape>();
      std::vector<double> data = entry.at("data").get<std::vector<double>>();
      out.params.push_back(
          {entry.at("name").get<std::string>(), Tensor::from(std::move(data), std::move(shape),
                                                             /*requires_grad=*/true)});
    }
  } catch (const json::exception& e) {
    throw DataError("malformed parameter file " + path.string() + ": " + e.what());
  }
  if (!expected_kind.empty() && out.kind != expected_kind) {
    throw DataError("parameter file " + path.string() + " holds '" + out.kind + "', expected '" +
                    expected_kind + "'");
  }
  return out;
}

void assign_params(NamedParams& into, const NamedParams& from) {
  std::unordered_map<std::string, const NamedTensor*> by_name;
  for (const auto& p : from) by_name[p.name] = &p;
  for (auto& dst : into) {
    auto it = by_name.find(dst.name);
    if (it == by_name.end()) throw DataError("assign_params: missing parameter '" + dst.name + "'");
    const Tensor& src = it->second->tensor;
    if (src.shape() != dst.tensor.shape()) {
      throw DimensionError("assign_params: parameter '" + dst.name + "' has shape " +
                           shape_str(src.shape()) + ", expected " + shape_str(dst.tensor.shape()));
    }
    std::copy(src.data().begin(), src.data().end(), dst.tensor.data_mut().begin());
  }
}

}  // namespace fewts
