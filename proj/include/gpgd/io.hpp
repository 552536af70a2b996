#pragma once

#include "gpgd/core.hpp"
#include "gpgd/estimators.hpp"
#include "gpgd/generator.hpp"
#include "gpgd/objective.hpp"
#include "gpgd/projection.hpp"
#include "gpgd/solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

//! @file io.hpp
//! JSON and CSV serialization. Doubles are written at full precision so every
//! file reads back bit-exactly.

namespace gpgd::io {

using json = nlohmann::json;

//------------------------------------------------------------------------------
// Formatting

//! Scientific notation with 17 significant digits, enough to round-trip.
inline std::string format_double(double v)
{
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

inline double parse_double(const std::string& s)
{
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ConfigError("cannot parse number '" + s + "'");
  return v;
}

inline std::string read_file(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content)
{
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << content;
}

inline json read_json(const std::filesystem::path& p)
{
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + p.string() + "': " + e.what());
  }
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

//------------------------------------------------------------------------------
// Strict object access

//! Throws ConfigError when `j` has keys outside `allowed`.
inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <typename T>
T get(const json& j, const char* key, const std::string& where)
{
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where)
{
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return get<T>(j, key, where);
}

//! Seeds must be nonnegative JSON integers.
inline std::uint64_t get_seed(const json& j, const char* key, std::uint64_t fallback, const std::string& where)
{
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(where + ": seed '" + key + "' must be a nonnegative integer");
}

//------------------------------------------------------------------------------
// Vectors and matrices in JSON

inline json to_json(const Vector& v)
{
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json to_json(const Matrix& m)
{
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Vector vector_from_json(const json& j, const std::string& where)
{
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + ": non-numeric entry");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Matrix matrix_from_json(const json& j, const std::string& where)
{
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nonempty 2D array");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(where + ": ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

//------------------------------------------------------------------------------
// Generator

inline json to_json(const GeneratorNetwork& g)
{
  json layers = json::array();
  for (const Layer& l : g.layers()) {
    json lj{{"weights", to_json(l.weights)}, {"bias", to_json(l.bias)}, {"activation", l.activation.name()}};
    if (l.activation.kind() == ActivationKind::leaky_relu) lj["slope"] = l.activation.slope();
    layers.push_back(std::move(lj));
  }
  return json{{"k", g.latent_dim()}, {"n", g.output_dim()}, {"d", g.depth()}, {"layers", std::move(layers)}};
}

inline GeneratorNetwork generator_from_json(const json& j)
{
  const std::string where = "generator";
  reject_unknown_keys(j, {"k", "n", "d", "layers"}, where);
  const json& lj = j.at("layers");
  if (!lj.is_array()) throw ConfigError(where + ": layers must be an array");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < lj.size(); ++i) {
    const std::string lw = where + ".layers[" + std::to_string(i) + "]";
    reject_unknown_keys(lj[i], {"weights", "bias", "activation", "slope"}, lw);
    std::optional<double> slope;
    if (lj[i].contains("slope")) slope = get<double>(lj[i], "slope", lw);
    layers.push_back(Layer{matrix_from_json(lj[i].at("weights"), lw + ".weights"),
                           vector_from_json(lj[i].at("bias"), lw + ".bias"),
                           Activation::parse(get<std::string>(lj[i], "activation", lw), slope)});
  }
  GeneratorNetwork g(std::move(layers));
  if (get<Index>(j, "k", where) != g.latent_dim() || get<Index>(j, "n", where) != g.output_dim() ||
      get<Index>(j, "d", where) != g.depth())
    throw ConfigError(where + ": k, n, d do not match the layer shapes");
  return g;
}

//------------------------------------------------------------------------------
// Objective

inline json to_json(const Objective& f)
{
  json j{{"kind", f.kind() == ObjectiveKind::least_squares ? "least-squares" : "glm"},
         {"A", to_json(f.a())},
         {"y", to_json(f.y())}};
  if (f.kind() == ObjectiveKind::glm) j["link"] = to_string(f.link());
  return j;
}

inline Objective objective_from_json(const json& j)
{
  const std::string where = "objective";
  reject_unknown_keys(j, {"kind", "A", "y", "link"}, where);
  const auto kind = get<std::string>(j, "kind", where);
  Matrix a = matrix_from_json(j.at("A"), where + ".A");
  Vector y = vector_from_json(j.at("y"), where + ".y");
  if (kind == "least-squares") return Objective::least_squares(std::move(a), std::move(y));
  if (kind == "glm") return Objective::glm(std::move(a), std::move(y), parse_link(get<std::string>(j, "link", where)));
  throw ConfigError(where + ": unknown kind '" + kind + "'");
}

//------------------------------------------------------------------------------
// Results

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const RegularityEstimates& r)
{
  return json{{"alpha_hat", r.alpha_hat},   {"beta_hat", r.beta_hat},   {"mu_hat", opt_json(r.mu_hat)},
              {"gamma_hat", opt_json(r.gamma_hat)}, {"delta_hat", r.delta_hat}, {"num_samples", r.num_samples},
              {"seed", r.seed}};
}

inline RegularityEstimates regularity_from_json(const json& j)
{
  const std::string where = "regularity";
  reject_unknown_keys(j, {"alpha_hat", "beta_hat", "mu_hat", "gamma_hat", "delta_hat", "num_samples", "seed"}, where);
  RegularityEstimates r;
  r.alpha_hat = get<double>(j, "alpha_hat", where);
  r.beta_hat = get<double>(j, "beta_hat", where);
  if (j.contains("mu_hat") && !j["mu_hat"].is_null()) r.mu_hat = j["mu_hat"].get<double>();
  if (j.contains("gamma_hat") && !j["gamma_hat"].is_null()) r.gamma_hat = j["gamma_hat"].get<double>();
  r.delta_hat = get<double>(j, "delta_hat", where);
  r.num_samples = get<int>(j, "num_samples", where);
  r.seed = get_seed(j, "seed", 0, where);
  return r;
}

inline json to_json(const ProjectionResult& p)
{
  return json{{"point", to_json(p.point)},
              {"latent", to_json(p.latent)},
              {"residual_sq", p.residual_sq},
              {"certified", p.certified}};
}

//------------------------------------------------------------------------------
// CSV

inline std::vector<std::string> split(const std::string& line, char sep)
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<std::string> lines_of(const std::string& text)
{
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line != "\r") out.push_back(line);
  return out;
}

//! Row-major matrix, one row per line, comma separated, no header.
inline std::string matrix_to_csv(const Matrix& m)
{
  std::string out;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

inline Matrix matrix_from_csv(const std::string& text)
{
  const auto rows = lines_of(text);
  if (rows.empty()) throw ConfigError("matrix CSV is empty");
  const auto first = split(rows[0], ',');
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(first.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto cells = split(rows[r], ',');
    if (cells.size() != first.size()) throw ConfigError("matrix CSV row " + std::to_string(r) + " is ragged");
    for (std::size_t c = 0; c < cells.size(); ++c)
      m(static_cast<Index>(r), static_cast<Index>(c)) = parse_double(cells[c]);
  }
  return m;
}

inline void write_matrix_csv(const std::filesystem::path& p, const Matrix& m) { write_file(p, matrix_to_csv(m)); }
inline Matrix read_matrix_csv(const std::filesystem::path& p) { return matrix_from_csv(read_file(p)); }

inline constexpr const char* kTraceHeader = "t,f_value,gap,dist_to_truth,proj_residual_sq,wall_time_us";

//! Absent optional fields are written as empty cells.
inline std::string trace_to_csv(const IterationTrace& trace)
{
  std::string out = kTraceHeader;
  out += '\n';
  for (const auto& r : trace.records) {
    out += std::to_string(r.t);
    out += ',' + format_double(r.f_value);
    out += ',' + (r.gap ? format_double(*r.gap) : std::string());
    out += ',' + (r.dist_to_truth ? format_double(*r.dist_to_truth) : std::string());
    out += ',' + format_double(r.proj_residual_sq);
    out += ',' + format_double(r.wall_time_us);
    out += '\n';
  }
  return out;
}

inline std::vector<IterationRecord> trace_records_from_csv(const std::string& text)
{
  const auto rows = lines_of(text);
  if (rows.empty() || rows[0] != kTraceHeader) throw ConfigError("trace CSV: missing or wrong header");
  std::vector<IterationRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto c = split(rows[i], ',');
    if (c.size() != 6) throw ConfigError("trace CSV: row " + std::to_string(i) + " has wrong column count");
    IterationRecord r;
    r.t = std::stoi(c[0]);
    r.f_value = parse_double(c[1]);
    if (!c[2].empty()) r.gap = parse_double(c[2]);
    if (!c[3].empty()) r.dist_to_truth = parse_double(c[3]);
    r.proj_residual_sq = parse_double(c[4]);
    r.wall_time_us = parse_double(c[5]);
    out.push_back(r);
  }
  return out;
}

} // namespace gpgd::io
