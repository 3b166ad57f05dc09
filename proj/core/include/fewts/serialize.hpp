#pragma once

#include <filesystem>
#include <string>

#include "fewts/tensor.hpp"

namespace fewts {

// Parameter archives are JSON documents:
//   { "format": "fewts", "kind": <tag>, "config": <object>, "params": [
//       {"name": ..., "shape": [...], "data": [...]}, ... ] }
// Doubles are written in shortest round-trip form, so save -> load -> save
// reproduces the file byte for byte.

struct LoadedParams {
  std::string kind;
  std::string config_json;  // the "config" object re-serialized; "null" if absent
  NamedParams params;       // fresh leaves with requires_grad = true
};

void save_params_file(const std::filesystem::path& path, const std::string& kind,
                      const NamedParams& params, const std::string& config_json = "null");

/// Throws DataError on malformed documents or a kind mismatch (when
/// expected_kind is non-empty).
LoadedParams load_params_file(const std::filesystem::path& path,
                              const std::string& expected_kind = "");

/// Copies values from `from` into `into`, matching by name. Shapes must
/// agree; every name in `into` must be present in `from`.
void assign_params(NamedParams& into, const NamedParams& from);

}  // namespace fewts
