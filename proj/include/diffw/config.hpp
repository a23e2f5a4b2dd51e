#pragma once

// JSON construction of catalog maps, time fields and sample domains.
//
//   map:        {"kind": "...", "params": {...}}
//   time field: {"terms": [{"coeff": <coefficient>, "field": <map>}, ...]}
//               {"kind": "linear", "params": {"A": [[...]]}}
//               {"kind": "linear_path", "params": {"A0": [[...]], "A1": [[...]]}}
//   coefficient: {"kind": "constant", "value": c}
//                {"kind": "polynomial", "coeffs": [c0, c1, ...]}
//                {"kind": "sine", "amplitude": a, "frequency": w, "phase": p}

#include "diffw/mapping_group.hpp"

namespace diffw {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.is_object() && j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace detail

inline Vec vec_from_json(const nlohmann::json& j) {
  if (j.is_number()) return Vec::Constant(1, j.get<double>());
  if (!j.is_array()) throw ConfigError("expected a number array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline Mat mat_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError("expected a matrix as an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ConfigError("matrix rows differ in length");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline nlohmann::json to_json_value(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline nlohmann::json to_json_value(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json_value(Vec(m.row(r).transpose())));
  return rows;
}

inline SmoothMap map_from_json(const nlohmann::json& j, int dim) {
  try {
    const auto kind = detail::require(j, "kind", "map").get<std::string>();
    const nlohmann::json params = j.contains("params") ? j.at("params") : nlohmann::json::object();
    const int rows = detail::get_or<int>(params, "rows", 0);
    if (kind == "zero") return zero_map(dim, detail::get_or<int>(params, "dim_out", dim));
    if (kind == "identity") return identity_map(dim);
    if (kind == "constant") return constant_map(dim, vec_from_json(detail::require(params, "value", "constant")));
    if (kind == "affine" || kind == "linear") {
      const Mat a = mat_from_json(detail::require(params, "A", kind));
      const Vec b = params.contains("b") ? vec_from_json(params.at("b")) : Vec::Zero(a.rows());
      return affine(a, b, rows);
    }
    if (kind == "gaussian_bump")
      return gaussian_bump(vec_from_json(detail::require(params, "center", kind)),
                           detail::require(params, "sigma", kind).get<double>(),
                           vec_from_json(detail::require(params, "amplitude", kind)), rows);
    if (kind == "sine_profile")
      return sine_profile(vec_from_json(detail::require(params, "amplitude", kind)),
                          vec_from_json(detail::require(params, "frequency", kind)),
                          detail::get_or<double>(params, "phase", 0.0), rows);
    if (kind == "poly_gauss")
      return poly_gauss(detail::require(params, "coeffs", kind).get<std::vector<double>>(),
                        vec_from_json(detail::require(params, "direction", kind)),
                        vec_from_json(detail::require(params, "center", kind)),
                        detail::require(params, "sigma", kind).get<double>(),
                        vec_from_json(detail::require(params, "amplitude", kind)), rows);
    if (kind == "sum") {
      std::vector<SmoothMap> terms;
      for (const auto& t : detail::require(params, "terms", kind)) terms.push_back(map_from_json(t, dim));
      return sum(std::move(terms));
    }
    if (kind == "scaled")
      return scaled(detail::require(params, "factor", kind).get<double>(),
                    map_from_json(detail::require(params, "map", kind), dim));
    throw ConfigError("map: unknown kind \"" + kind + "\"");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("map: ") + e.what());
  }
}

inline std::function<double(double)> coefficient_from_json(const nlohmann::json& j) {
  const auto kind = detail::require(j, "kind", "coefficient").get<std::string>();
  if (kind == "constant") {
    const double c = detail::require(j, "value", kind).get<double>();
    return [c](double) { return c; };
  }
  if (kind == "polynomial") {
    const auto cs = detail::require(j, "coeffs", kind).get<std::vector<double>>();
    return [cs](double t) {
      double s = 0.0;
      for (auto it = cs.rbegin(); it != cs.rend(); ++it) s = s * t + *it;
      return s;
    };
  }
  if (kind == "sine") {
    const double a = detail::get_or<double>(j, "amplitude", 1.0), w = detail::get_or<double>(j, "frequency", 1.0),
                 p = detail::get_or<double>(j, "phase", 0.0);
    return [a, w, p](double t) { return a * std::sin(w * t + p); };
  }
  throw ConfigError("coefficient: unknown kind \"" + kind + "\"");
}

inline TimeField time_field_from_json(const nlohmann::json& j, int dim) {
  try {
    if (j.contains("terms")) {
      std::vector<TimeField::Term> terms;
      for (const auto& t : j.at("terms")) {
        auto coeff = t.contains("coeff") ? coefficient_from_json(t.at("coeff")) : [](double) { return 1.0; };
        terms.push_back(TimeField::Term{std::move(coeff), map_from_json(detail::require(t, "field", "term"), dim)});
      }
      if (terms.empty()) throw ConfigError("time field: no terms");
      return TimeField(std::move(terms));
    }
    const auto kind = detail::require(j, "kind", "time field").get<std::string>();
    const nlohmann::json params = j.contains("params") ? j.at("params") : nlohmann::json::object();
    if (kind == "linear") return TimeField::linear(mat_from_json(detail::require(params, "A", kind)));
    if (kind == "linear_path")
      return TimeField::linear_path(mat_from_json(detail::require(params, "A0", kind)),
                                    mat_from_json(detail::require(params, "A1", kind)));
    if (kind == "constant") return TimeField::constant(map_from_json(detail::require(params, "map", kind), dim));
    throw ConfigError("time field: unknown kind \"" + kind + "\"");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("time field: ") + e.what());
  }
}

/// Defaults for `dim`, with optional overrides box_halfwidth,
/// points_per_axis and tail_radii.
inline SampleDomain domain_from_json(const nlohmann::json& j, int dim) {
  SampleDomain d = SampleDomain::defaults(dim);
  if (j.is_null()) return d;
  if (!j.is_object()) throw ConfigError("domain: expected an object");
  try {
    d.box_halfwidth = detail::get_or<double>(j, "box_halfwidth", d.box_halfwidth);
    d.points_per_axis = detail::get_or<int>(j, "points_per_axis", d.points_per_axis);
    d.tail_radii = detail::get_or<std::vector<double>>(j, "tail_radii", d.tail_radii);
    d.validate();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("domain: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return d;
}

inline MatrixGroup group_from_json(const nlohmann::json& j) {
  const auto name = detail::require(j, "group", "mapping").get<std::string>();
  const int n = detail::get_or<int>(j, "n", 3);
  if (name == "GL") return MatrixGroup::general_linear(n);
  if (name == "SO3") return MatrixGroup::so3();
  if (name == "unipotent") return MatrixGroup::unipotent(n);
  throw ConfigError("mapping: unknown group \"" + name + "\"");
}

}  // namespace diffw
