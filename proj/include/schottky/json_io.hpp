#pragma once

// JSON encoding of surfaces and complex values.

#include <fstream>
#include <string>

#include <json.hpp>

#include "schottky/errors.hpp"
#include "schottky/schottky_group.hpp"

namespace schottky {

using json = nlohmann::ordered_json;

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw DomainError("expected a complex number as [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

/// {"genus": g, "handles": [{"w_plus": [re,im], "w_minus": [re,im], "rho": [re,im]}, ...]}
inline SurfaceParams surface_params_from_json(const json& j) {
  if (!j.is_object() || !j.contains("handles") || !j["handles"].is_array())
    throw DomainError("surface JSON must be an object with a \"handles\" array");
  SurfaceParams p;
  for (const auto& h : j["handles"]) {
    if (!h.contains("w_plus") || !h.contains("w_minus") || !h.contains("rho"))
      throw DomainError("each handle needs w_plus, w_minus and rho");
    p.handles.push_back(
        {complex_from_json(h["w_plus"]), complex_from_json(h["w_minus"]), complex_from_json(h["rho"])});
  }
  if (j.contains("genus") && j["genus"].get<int>() != p.genus())
    throw DomainError("surface JSON: genus does not match the number of handles");
  return p;
}

inline json to_json(const SurfaceParams& p) {
  json handles = json::array();
  for (const auto& h : p.handles)
    handles.push_back({{"w_plus", to_json(h.w_plus)}, {"w_minus", to_json(h.w_minus)}, {"rho", to_json(h.rho)}});
  return {{"genus", p.genus()}, {"handles", handles}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DomainError("cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw DomainError(path + ": " + e.what());
  }
}

inline SchottkySurface load_surface(const std::string& path) {
  return SchottkySurface::validate(surface_params_from_json(read_json_file(path)));
}

}  // namespace schottky
