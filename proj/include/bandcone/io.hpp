#pragma once

// File formats: dataset CSV, region and matrix JSON, band tables.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bandcone/bands.hpp"
#include "bandcone/critval.hpp"
#include "bandcone/error.hpp"
#include "bandcone/glm.hpp"
#include "bandcone/linalg.hpp"
#include "bandcone/mcsim.hpp"
#include "bandcone/regions.hpp"

namespace bandcone {

using json = nlohmann::json;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, std::size_t line, const std::string& source) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last) {
    std::ostringstream os;
    os << source << ":" << line << ": cannot parse number '" << s << "'";
    throw ValidationError(os.str());
  }
  return v;
}

inline int parse_count(const std::string& s, std::size_t line, const std::string& source) {
  const double v = parse_number(s, line, source);
  if (v != std::floor(v) || v < 0.0 || v > 2e9) {
    std::ostringstream os;
    os << source << ":" << line << ": expected a non-negative integer count, got '" << s
       << "'";
    throw ValidationError(os.str());
  }
  return static_cast<int>(v);
}

inline bool skippable(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// dataset CSV

struct DatasetFile {
  std::vector<std::string> predictors;
  Dataset data;
};

/// Header row; predictor columns first, then `successes` and an optional
/// `trials` column (absent means Bernoulli). Lines starting with '#' are
/// comments.
inline DatasetFile read_dataset(std::istream& in, const std::string& source = "<input>") {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    header = detail::split_csv(line);
    break;
  }
  if (header.empty()) throw ValidationError(source + ": missing header row");
  std::size_t succ_col = header.size();
  std::size_t trials_col = header.size();
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "successes") succ_col = j;
    if (header[j] == "trials") trials_col = j;
  }
  if (succ_col == header.size())
    throw ValidationError(source + ": header has no 'successes' column");
  if (trials_col != header.size() && trials_col != succ_col + 1)
    throw ValidationError(source + ": 'trials' must directly follow 'successes'");
  if (succ_col + 1 + (trials_col != header.size() ? 1 : 0) != header.size())
    throw ValidationError(source + ": unexpected columns after the response");

  const std::size_t k = succ_col;
  std::vector<std::vector<double>> rows;
  std::vector<int> succ, trials;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != header.size()) {
      std::ostringstream os;
      os << source << ":" << lineno << ": expected " << header.size() << " fields, got "
         << f.size();
      throw ValidationError(os.str());
    }
    std::vector<double> r(k);
    for (std::size_t j = 0; j < k; ++j) r[j] = detail::parse_number(f[j], lineno, source);
    rows.push_back(std::move(r));
    succ.push_back(detail::parse_count(f[succ_col], lineno, source));
    trials.push_back(trials_col == header.size()
                         ? 1
                         : detail::parse_count(f[trials_col], lineno, source));
    if (succ.back() > trials.back()) {
      std::ostringstream os;
      os << source << ":" << lineno << ": successes " << succ.back() << " exceed trials "
         << trials.back();
      throw ValidationError(os.str());
    }
  }
  Matrix design(rows.size(), k + 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    design(i, 0) = 1.0;
    for (std::size_t j = 0; j < k; ++j) design(i, j + 1) = rows[i][j];
  }
  std::vector<std::string> names(header.begin(), header.begin() + static_cast<long>(k));
  return DatasetFile{std::move(names),
                     Dataset(std::move(design), std::move(succ), std::move(trials))};
}

inline DatasetFile read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path);
  return read_dataset(in, path);
}

inline Dataset parse_dataset(const std::string& path) {
  return read_dataset_file(path).data;
}

// ---------------------------------------------------------------------------
// JSON helpers

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw ValidationError("matrix JSON must be a non-empty array of rows");
  Matrix m(j.size(), j.front().size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != m.cols())
      throw ValidationError("matrix JSON rows differ in length");
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (!j[i][c].is_number()) throw ValidationError("matrix JSON entries must be numbers");
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

inline Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("expected a JSON array of numbers");
  Vector v;
  for (const auto& e : j) {
    if (!e.is_number()) throw ValidationError("expected a JSON array of numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

inline Bounds bounds_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ValidationError("bounds must be a non-empty array");
  Bounds b;
  for (const auto& pair : j) {
    const Vector v = vector_from_json(pair);
    if (v.size() != 2) throw ValidationError("each bound must be [lo, hi]");
    b.emplace_back(v[0], v[1]);
  }
  return b;
}

/// Accepts a bare 2-D array or an object with a "fisher_inv" member.
inline SpdMatrix fisher_inv_from_json(const json& j) {
  if (j.is_object()) {
    if (!j.contains("fisher_inv")) throw ValidationError("JSON object lacks 'fisher_inv'");
    return SpdMatrix(matrix_from_json(j.at("fisher_inv")));
  }
  return SpdMatrix(matrix_from_json(j));
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open JSON file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

/// {"type":"unrestricted"} | {"type":"interval","lower":l,"upper":u} |
/// {"type":"rectangle","bounds":[[lo,hi],...]} | {"type":"subspace","Z":[[...]],"a":a}
inline Region region_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
    throw ValidationError("region JSON needs a string 'type'");
  const std::string type = j.at("type").get<std::string>();
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number())
      throw ValidationError(std::string("region JSON: missing numeric '") + key + "'");
    return j.at(key).get<double>();
  };
  if (type == "unrestricted") return Unrestricted{};
  if (type == "interval") return make_interval(number("lower"), number("upper"));
  if (type == "rectangle") {
    if (!j.contains("bounds")) throw ValidationError("region JSON: rectangle needs 'bounds'");
    return make_rectangle(bounds_from_json(j.at("bounds")));
  }
  if (type == "subspace") {
    if (!j.contains("Z")) throw ValidationError("region JSON: subspace needs 'Z'");
    return make_subspace_cone(matrix_from_json(j.at("Z")), number("a"));
  }
  throw ValidationError("region JSON: unknown type '" + type + "'");
}

inline json to_json(const Region& region) {
  return std::visit(
      [](const auto& reg) -> json {
        using T = std::decay_t<decltype(reg)>;
        if constexpr (std::is_same_v<T, Unrestricted>) {
          return {{"type", "unrestricted"}};
        } else if constexpr (std::is_same_v<T, SubspaceCone>) {
          return {{"type", "subspace"}, {"Z", to_json(reg.z)}, {"a", reg.a}};
        } else if constexpr (std::is_same_v<T, IntervalCone>) {
          return {{"type", "interval"}, {"lower", reg.lower}, {"upper", reg.upper}};
        } else {
          json b = json::array();
          for (const auto& [lo, hi] : reg.bounds) b.push_back({lo, hi});
          return {{"type", "rectangle"}, {"bounds", b}};
        }
      },
      region);
}

inline json to_json(const RegionSummary& s) {
  json j{{"p", s.p}, {"r", s.r}, {"a", s.a}, {"degenerate", s.degenerate}};
  j["x0"] = s.x0 ? json(*s.x0) : json(nullptr);
  j["phi"] = s.phi ? json(*s.phi) : json(nullptr);
  return j;
}

inline json to_json(const CriticalValue& c) {
  return {{"c", c.c},
          {"alpha", c.alpha},
          {"p", c.params.p},
          {"r", c.params.r},
          {"a", c.params.a},
          {"cdf_residual", c.cdf_residual},
          {"solver_tol", c.solver_tol}};
}

inline json to_json(const FittedModel& m) {
  return {{"beta_hat", m.beta_hat},
          {"fisher_inv", to_json(m.fisher_inv.matrix())},
          {"iterations", m.iterations},
          {"grad_norm", m.grad_norm},
          {"converged", m.converged},
          {"loglik", m.loglik_trace.empty() ? 0.0 : m.loglik_trace.back()}};
}

inline json to_json(const CoverageReport& r) {
  return {{"beta", {r.cell.beta_true[0], r.cell.beta_true[1]}},
          {"lower", r.cell.lower},
          {"upper", r.cell.upper},
          {"n", r.cell.n},
          {"alpha", r.cell.alpha},
          {"n_reps", r.cell.n_reps},
          {"seed", r.cell.seed},
          {"error", r.error_estimate},
          {"std_error", r.std_error},
          {"n_converged", r.n_converged},
          {"n_regenerated", r.n_regenerated}};
}

// ---------------------------------------------------------------------------
// band tables

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const std::vector<std::string>& band_value_columns() {
  static const std::vector<std::string> cols{"eta_hat", "se",   "lin_lo",
                                             "lin_hi",  "p_lo", "p_hi"};
  return cols;
}

/// Columns x1..x_{p-1}, eta_hat, se, lin_lo, lin_hi, p_lo, p_hi.
inline void write_band_csv(std::ostream& out, const std::vector<BandPoint>& pts) {
  if (pts.empty()) return;
  const std::size_t p = pts.front().x.size();
  for (std::size_t j = 1; j < p; ++j) out << "x" << j << ",";
  for (std::size_t k = 0; k < band_value_columns().size(); ++k)
    out << band_value_columns()[k] << (k + 1 < band_value_columns().size() ? "," : "\n");
  for (const auto& b : pts) {
    for (std::size_t j = 1; j < p; ++j) out << format_double(b.x[j]) << ",";
    out << format_double(b.eta_hat) << "," << format_double(b.se) << ","
        << format_double(b.lin_lo) << "," << format_double(b.lin_hi) << ","
        << format_double(b.p_lo) << "," << format_double(b.p_hi) << "\n";
  }
}

inline std::vector<BandPoint> read_band_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    header = detail::split_csv(line);
    break;
  }
  const std::size_t nv = band_value_columns().size();
  if (header.size() < nv) throw ValidationError("band CSV: short header");
  const std::size_t k = header.size() - nv;
  std::vector<BandPoint> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != header.size()) throw ValidationError("band CSV: ragged row");
    BandPoint b;
    b.x.push_back(1.0);
    for (std::size_t j = 0; j < k; ++j) b.x.push_back(detail::parse_number(f[j], lineno, "band CSV"));
    double* fields[] = {&b.eta_hat, &b.se, &b.lin_lo, &b.lin_hi, &b.p_lo, &b.p_hi};
    for (std::size_t v = 0; v < nv; ++v)
      *fields[v] = detail::parse_number(f[k + v], lineno, "band CSV");
    out.push_back(std::move(b));
  }
  return out;
}

inline json band_to_json(const std::vector<BandPoint>& pts) {
  json arr = json::array();
  for (const auto& b : pts)
    arr.push_back({{"x", b.x},
                   {"eta_hat", b.eta_hat},
                   {"se", b.se},
                   {"lin_lo", b.lin_lo},
                   {"lin_hi", b.lin_hi},
                   {"p_lo", b.p_lo},
                   {"p_hi", b.p_hi},
                   {"in_region", b.in_region}});
  return arr;
}

inline std::vector<BandPoint> band_from_json(const json& arr) {
  if (!arr.is_array()) throw ValidationError("band JSON must be an array");
  std::vector<BandPoint> out;
  for (const auto& e : arr) {
    BandPoint b;
    b.x = vector_from_json(e.at("x"));
    b.eta_hat = e.at("eta_hat").get<double>();
    b.se = e.at("se").get<double>();
    b.lin_lo = e.at("lin_lo").get<double>();
    b.lin_hi = e.at("lin_hi").get<double>();
    b.p_lo = e.at("p_lo").get<double>();
    b.p_hi = e.at("p_hi").get<double>();
    b.in_region = e.value("in_region", true);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace bandcone
