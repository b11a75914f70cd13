#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmdom/core.hpp"
#include "mmdom/errors.hpp"

namespace mmdom::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Rationals
// ---------------------------------------------------------------------------

// [num, den] with JSON integers, or decimal strings once a part leaves int64.
inline json to_pair(const Scalar& s) {
  json num = s.numerator_fits_int64() ? json(static_cast<std::int64_t>(s.numerator_int64())) : json(s.numerator_str());
  json den = s.denominator_fits_int64() ? json(static_cast<std::int64_t>(s.denominator_int64())) : json(s.denominator_str());
  return json::array({num, den});
}

inline std::string to_text(const Scalar& s) { return s.str(); }

inline json to_text_array(const std::vector<Scalar>& v) {
  json a = json::array();
  for (const auto& s : v) a.push_back(to_text(s));
  return a;
}

namespace detail {
inline std::string integer_text(const json& j, const std::string& where) {
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  if (j.is_number_unsigned()) return std::to_string(j.get<std::uint64_t>());
  if (j.is_string()) return j.get<std::string>();
  throw PreconditionError(where + ": expected an integer");
}
}  // namespace detail

// Accepts [num, den], "p/q", "p" or a JSON integer.
inline Scalar parse_scalar(const json& j, const std::string& where = "rational") {
  try {
    if (j.is_array()) {
      if (j.size() != 2) throw PreconditionError(where + ": rational pair must have two entries");
      return Scalar::from_parts(detail::integer_text(j[0], where), detail::integer_text(j[1], where));
    }
    if (j.is_string()) return Scalar::parse(j.get<std::string>());
    if (j.is_number_integer() || j.is_number_unsigned()) return Scalar::parse(detail::integer_text(j, where));
  } catch (const std::invalid_argument& e) {
    throw PreconditionError(where + ": " + e.what());
  }
  throw PreconditionError(where + ": expected a rational as [num, den] or \"p/q\"");
}

// ---------------------------------------------------------------------------
// Spaces
// ---------------------------------------------------------------------------

inline json to_json(const FiniteMetricSpace& x) {
  json dist = json::array();
  for (Index i = 0; i < x.size(); ++i)
    for (Index j = 0; j < x.size(); ++j) dist.push_back(to_pair(x.d(i, j)));
  return json{{"labels", x.labels()}, {"dist", dist}};
}

inline json to_json(const FiniteMMSpace& x) {
  json j = to_json(x.metric);
  json mass = json::array();
  for (const auto& m : x.mass) mass.push_back(to_pair(m));
  j["mass"] = mass;
  return j;
}

// "dist" is either the flat row-major list of n*n rationals or n rows of n.
inline FiniteMetricSpace metric_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dist")) throw PreconditionError("space: expected an object with \"dist\"");
  const auto& dist = j.at("dist");
  if (!dist.is_array()) throw PreconditionError("space: \"dist\" must be an array");
  std::vector<Scalar> flat;
  std::size_t n = 0;
  const bool rows = !dist.empty() && dist[0].is_array() && !dist[0].empty() && dist[0][0].is_array();
  if (rows) {
    n = dist.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!dist[i].is_array() || dist[i].size() != n) throw PreconditionError("space: distance matrix is not square");
      for (std::size_t k = 0; k < n; ++k) flat.push_back(parse_scalar(dist[i][k], "dist[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
    }
  } else {
    for (std::size_t i = 0; i < dist.size(); ++i) flat.push_back(parse_scalar(dist[i], "dist[" + std::to_string(i) + "]"));
    while (n * n < flat.size()) ++n;
    if (n * n != flat.size()) throw PreconditionError("space: flat distance list length is not a square");
  }
  std::vector<std::string> labels;
  if (j.contains("labels")) {
    for (const auto& l : j.at("labels")) {
      if (!l.is_string()) throw PreconditionError("space: labels must be strings");
      labels.push_back(l.get<std::string>());
    }
    if (labels.size() != n) throw PreconditionError("space: label count does not match the distance matrix");
  } else {
    for (std::size_t i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i));
  }
  if (n == 0) throw PreconditionError("space: no points");
  return FiniteMetricSpace(std::move(labels), std::move(flat));
}

inline FiniteMMSpace space_from_json(const json& j) {
  FiniteMMSpace x{metric_from_json(j), {}};
  if (!j.contains("mass")) throw PreconditionError("space: missing \"mass\"");
  const auto& mass = j.at("mass");
  if (!mass.is_array()) throw PreconditionError("space: \"mass\" must be an array");
  for (std::size_t i = 0; i < mass.size(); ++i) x.mass.push_back(parse_scalar(mass[i], "mass[" + std::to_string(i) + "]"));
  if (x.mass.size() != x.size()) throw PreconditionError("space: mass length does not match the point count");
  return x;
}

// A family is a JSON array of spaces or an object {"spaces": [...]}.
inline const json& family_array(const json& j) {
  if (j.is_array()) return j;
  if (j.is_object() && j.contains("spaces") && j.at("spaces").is_array()) return j.at("spaces");
  throw PreconditionError("family: expected an array of spaces or {\"spaces\": [...]}");
}

inline bool is_family(const json& j) {
  return j.is_array() || (j.is_object() && j.contains("spaces"));
}

inline std::vector<FiniteMMSpace> family_from_json(const json& j) {
  std::vector<FiniteMMSpace> out;
  for (const auto& s : family_array(j)) out.push_back(space_from_json(s));
  if (out.empty()) throw PreconditionError("family: no members");
  return out;
}

inline std::vector<FiniteMetricSpace> metric_family_from_json(const json& j) {
  std::vector<FiniteMetricSpace> out;
  for (const auto& s : family_array(j)) out.push_back(metric_from_json(s));
  if (out.empty()) throw PreconditionError("family: no members");
  return out;
}

// ---------------------------------------------------------------------------
// Index data
// ---------------------------------------------------------------------------

inline std::vector<Index> indices_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw PreconditionError(where + ": expected an array of indices");
  std::vector<Index> out;
  for (const auto& v : j) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw PreconditionError(where + ": indices must be non-negative integers");
    out.push_back(v.get<Index>());
  }
  return out;
}

inline IndexSet index_set_from_json(const json& j, const std::string& where) {
  auto v = indices_from_json(j, where);
  if (!std::is_sorted(v.begin(), v.end()) || std::adjacent_find(v.begin(), v.end()) != v.end())
    throw PreconditionError(where + ": index set must be sorted without repeats");
  return v;
}

// {"assignment": [...], "domain": [...]} or a bare assignment array.
inline MapWitness map_from_json(const json& j, const std::string& where) {
  MapWitness f;
  if (j.is_array()) {
    f.assignment = indices_from_json(j, where);
    return f;
  }
  if (!j.is_object() || !j.contains("assignment")) throw PreconditionError(where + ": expected a map");
  f.assignment = indices_from_json(j.at("assignment"), where + ".assignment");
  if (j.contains("domain") && !j.at("domain").is_null()) f.domain = index_set_from_json(j.at("domain"), where + ".domain");
  return f;
}

inline json to_json(const MapWitness& f) {
  json j{{"assignment", f.assignment}};
  j["domain"] = f.domain ? json(*f.domain) : json(nullptr);
  return j;
}

inline PartitionFamily partition_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw PreconditionError(where + ": expected an array of blocks");
  PartitionFamily p;
  for (std::size_t b = 0; b < j.size(); ++b) p.blocks.push_back(index_set_from_json(j[b], where + "[" + std::to_string(b) + "]"));
  return p;
}

inline json to_json(const PartitionFamily& p) { return json(p.blocks); }

// ---------------------------------------------------------------------------
// Files and digests
// ---------------------------------------------------------------------------

inline std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw PreconditionError(what + ": " + e.what());
  }
}

}  // namespace mmdom::io
