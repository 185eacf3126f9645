#pragma once

// Command driver behind the `bandcone` executable. Kept in the library so the
// commands can be exercised in-process.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bandcone/bands.hpp"
#include "bandcone/critval.hpp"
#include "bandcone/error.hpp"
#include "bandcone/glm.hpp"
#include "bandcone/io.hpp"
#include "bandcone/mcsim.hpp"
#include "bandcone/random.hpp"
#include "bandcone/regions.hpp"

#ifndef BANDCONE_DATA_DIR
#define BANDCONE_DATA_DIR "data"
#endif

namespace bandcone {

enum class Command { fit, critval, band, region, simulate, reproduce };
enum class Format { json, csv };

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitMismatch = 4;

inline constexpr std::uint64_t kDefaultSeed = 20160817;

struct RunConfig {
  Command command = Command::critval;
  Format format = Format::json;
  std::string output_path;  // empty: write to the output stream
  std::uint64_t seed = kDefaultSeed;
  double alpha = 0.05;

  // inputs
  std::string data_path;
  std::string fisher_inv_path;
  std::string region_json;  // inline JSON, or @path
  std::optional<std::pair<double, double>> interval;
  std::optional<Bounds> rectangle;

  // critval
  int p = 2;
  int r = 1;
  double a = 0.0;

  // band
  int grid_points = 101;

  // region search
  SearchConfig search;

  // simulate
  Beta2 beta{0.0, 1.0};
  std::string interval_class;  // narrow | wide | unrestricted, when no interval
  int n = 25;
  int reps = 2000;
  std::string check = "exact";
  int workers = 1;

  // reproduce
  std::string table;
  bool full = false;
  std::optional<int> reproduce_reps;
  bool printed_fisher_inv = false;
  std::vector<int> sample_sizes;  // empty: all
  std::vector<double> alphas;     // empty: all
  std::string data_dir = BANDCONE_DATA_DIR;
};

/// BANDCONE_SEED, when set, overrides the configured seed.
inline void apply_seed_override(RunConfig& cfg, const char* env_value) {
  if (env_value == nullptr || *env_value == '\0') return;
  const std::string s = env_value;
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("BANDCONE_SEED must be an unsigned 64-bit integer, got '" + s + "'");
  cfg.seed = v;
}

inline json error_json(const std::string& kind, const std::string& message, int code) {
  return {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
}

namespace detail {

inline std::pair<double, double> interval_from_text(const std::string& text) {
  const Vector v = vector_from_json(parse_json_text(text, "--interval"));
  if (v.size() != 2) throw ValidationError("--interval expects [lower, upper]");
  return {v[0], v[1]};
}

inline Region resolve_region(const RunConfig& cfg) {
  const int given = (cfg.region_json.empty() ? 0 : 1) + (cfg.interval ? 1 : 0) +
                    (cfg.rectangle ? 1 : 0);
  if (given > 1)
    throw ValidationError("give at most one of --region, --interval, --rectangle");
  if (cfg.interval) return make_interval(cfg.interval->first, cfg.interval->second);
  if (cfg.rectangle) return make_rectangle(*cfg.rectangle);
  if (!cfg.region_json.empty()) {
    const json j = cfg.region_json.front() == '@'
                       ? load_json_file(cfg.region_json.substr(1))
                       : parse_json_text(cfg.region_json, "--region");
    return region_from_json(j);
  }
  return Unrestricted{};
}

inline std::size_t region_dim(const Region& region) {
  return std::visit(
      [](const auto& reg) -> std::size_t {
        using T = std::decay_t<decltype(reg)>;
        if constexpr (std::is_same_v<T, Unrestricted>) return 0;
        else if constexpr (std::is_same_v<T, SubspaceCone>) return reg.z.rows();
        else if constexpr (std::is_same_v<T, IntervalCone>) return 2;
        else return reg.bounds.size() + 1;
      },
      region);
}

inline void check_region_dim(const Region& region, std::size_t p) {
  const std::size_t d = region_dim(region);
  if (d != 0 && d != p) {
    std::ostringstream os;
    os << "region has dimension " << d << " but the model has " << p << " coefficients";
    throw ValidationError(os.str());
  }
}

/// Box over which to draw the band: the region's own bounds, else the data range.
inline Bounds band_box(const Region& region, const Dataset& data) {
  if (const auto* iv = std::get_if<IntervalCone>(&region)) return {{iv->lower, iv->upper}};
  if (const auto* hull = std::get_if<ConvexHull>(&region); hull && !hull->bounds.empty())
    return hull->bounds;
  Bounds box;
  for (std::size_t j = 1; j < data.dim(); ++j) {
    double lo = data.design()(0, j), hi = lo;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      lo = std::min(lo, data.design()(i, j));
      hi = std::max(hi, data.design()(i, j));
    }
    box.emplace_back(lo, hi);
  }
  return box;
}

inline std::string fmt(double v) { return format_double(v); }

// Reproduction rows -----------------------------------------------------------

struct Comparison {
  std::string quantity;
  json key;
  double computed;
  double published;
  double tolerance;
  bool ok() const { return std::abs(computed - published) <= tolerance; }
};

inline json comparison_json(const Comparison& c) {
  return {{"quantity", c.quantity},
          {"key", c.key},
          {"computed", c.computed},
          {"published", c.published},
          {"abs_diff", std::abs(c.computed - c.published)},
          {"tolerance", c.tolerance},
          {"ok", c.ok()}};
}

}  // namespace detail

/// Tolerances used by `reproduce`.
struct ReproduceTolerance {
  static constexpr double a = 0.0015;
  static constexpr double c = 0.002;
  /// Table 4.2: |ours - published| within z combined binomial standard errors.
  static constexpr double coverage_z = 4.0;
};

struct TableArtifact {
  std::string table;
  std::vector<detail::Comparison> comparisons;
  json extra = json::object();

  bool ok() const {
    for (const auto& c : comparisons)
      if (!c.ok()) return false;
    return true;
  }

  json to_json() const {
    json rows = json::array();
    for (const auto& c : comparisons) rows.push_back(detail::comparison_json(c));
    json j{{"table", table}, {"all_ok", ok()}, {"comparisons", rows}};
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    return j;
  }

  void write_csv(std::ostream& out) const {
    out << "table,quantity,key,computed,published,abs_diff,tolerance,ok\n";
    for (const auto& c : comparisons) {
      std::string key = c.key.dump();
      for (auto& ch : key)
        if (ch == ',') ch = ';';
      out << table << "," << c.quantity << "," << key << "," << detail::fmt(c.computed) << ","
          << detail::fmt(c.published) << "," << detail::fmt(std::abs(c.computed - c.published))
          << "," << detail::fmt(c.tolerance) << "," << (c.ok() ? "true" : "false") << "\n";
    }
  }
};

inline json load_published(const std::string& data_dir) {
  return load_json_file(data_dir + "/published.json");
}

inline TableArtifact reproduce_table_3_2(const RunConfig& cfg) {
  const json pub = load_published(cfg.data_dir).at("table_3_2");
  const DatasetFile file = read_dataset_file(cfg.data_dir + "/lavelle_9aa.csv");
  const FittedModel model = fit_logistic(file.data);
  const double alpha = pub.at("alpha").get<double>();

  TableArtifact art;
  art.table = "3.2";
  art.extra["beta_hat"] = model.beta_hat;
  art.extra["fisher_inv"] = to_json(model.fisher_inv.matrix());
  for (const auto& row : pub.at("rows")) {
    RegionSummary s;
    json key;
    if (row.at("interval").is_null()) {
      s = summarize(Unrestricted{}, model.fisher_inv);
      key = "unrestricted";
    } else {
      const Vector iv = vector_from_json(row.at("interval"));
      s = cone_from_interval(iv[0], iv[1], model.fisher_inv);
      key = iv;
    }
    const CriticalValue cv = critical_value(alpha, s);
    art.comparisons.push_back({"a", key, s.a, row.at("a").get<double>(), ReproduceTolerance::a});
    art.comparisons.push_back({"c", key, cv.c, row.at("c").get<double>(), ReproduceTolerance::c});
  }
  return art;
}

/// Bundled full-precision F^{-1} (a refit of the ICU data) unless the printed,
/// heavily rounded matrix is requested.
inline SpdMatrix icu_fisher_inv(const RunConfig& cfg) {
  if (cfg.printed_fisher_inv)
    return SpdMatrix(matrix_from_json(
        load_published(cfg.data_dir).at("example_icu").at("fisher_inv_printed")));
  return fisher_inv_from_json(load_json_file(cfg.data_dir + "/icu_fisher_inv.json"));
}

/// Center search settings behind the published table: one 500 x 500 grid.
inline constexpr SearchConfig kPublishedSearch{500, 0};

inline TableArtifact reproduce_table_3_3(const RunConfig& cfg) {
  const json pub = load_published(cfg.data_dir).at("table_3_3");
  const SpdMatrix finv = icu_fisher_inv(cfg);
  const double alpha = pub.at("alpha").get<double>();

  TableArtifact art;
  art.table = "3.3";
  art.extra["fisher_inv_source"] = cfg.printed_fisher_inv ? "printed" : "bundled";
  art.extra["fisher_inv"] = to_json(finv.matrix());
  json centers = json::array();
  for (const auto& row : pub.at("rows")) {
    RegionSummary s;
    json key;
    if (row.at("bounds").is_null()) {
      s = summarize(Unrestricted{}, finv);
      key = "unrestricted";
    } else {
      const Bounds b = bounds_from_json(row.at("bounds"));
      s = summarize(make_rectangle(b), finv, kPublishedSearch);
      key = row.at("bounds");
      centers.push_back({{"bounds", key}, {"x0", s.x0 ? json(*s.x0) : json(nullptr)}});
    }
    const CriticalValue cv = critical_value(alpha, s);
    art.comparisons.push_back({"a", key, s.a, row.at("a").get<double>(), ReproduceTolerance::a});
    art.comparisons.push_back({"c", key, cv.c, row.at("c").get<double>(), ReproduceTolerance::c});
  }
  art.extra["centers"] = centers;
  return art;
}

inline int reproduce_reps(const RunConfig& cfg) {
  if (cfg.full) return 5000;
  return cfg.reproduce_reps.value_or(2000);
}

inline TableArtifact reproduce_table_4_2(const RunConfig& cfg) {
  const json all = load_published(cfg.data_dir);
  const json pub = all.at("table_4_2");
  const json probs = all.at("table_4_1").at("probabilities");
  const int n_reps = reproduce_reps(cfg);
  const int pub_reps = pub.at("replications").get<int>();
  const auto alphas = pub.at("alphas").get<std::vector<double>>();
  const auto columns = pub.at("columns").get<std::vector<std::string>>();
  const CoverageCheck check = cfg.check == "grid" ? CoverageCheck::grid : CoverageCheck::exact;

  auto wanted_n = [&](int n) {
    return cfg.sample_sizes.empty() ||
           std::find(cfg.sample_sizes.begin(), cfg.sample_sizes.end(), n) !=
               cfg.sample_sizes.end();
  };
  auto wanted_alpha = [&](double a) {
    if (cfg.alphas.empty()) return true;
    for (double x : cfg.alphas)
      if (std::abs(x - a) < 1e-12) return true;
    return false;
  };

  TableArtifact art;
  art.table = "4.2";
  art.extra["replications"] = n_reps;
  art.extra["check"] = cfg.check;
  std::uint64_t cell_id = 0;
  for (const auto& row : pub.at("rows")) {
    const auto bv = row.at("beta").get<std::vector<double>>();
    const Beta2 beta{bv[0], bv[1]};
    const int n = row.at("n").get<int>();
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const auto pr = probs.at(columns[k]).get<std::vector<double>>();
      double lo = invert_logit_endpoint(pr[0], beta);
      double hi = invert_logit_endpoint(pr[1], beta);
      if (lo > hi) std::swap(lo, hi);
      for (std::size_t ai = 0; ai < alphas.size(); ++ai, ++cell_id) {
        if (!wanted_n(n) || !wanted_alpha(alphas[ai])) continue;
        SimulationCell cell{beta, lo, hi, n, alphas[ai], n_reps, derive_key(cfg.seed, {cell_id})};
        const CoverageReport rep = simulate_cell(cell, cfg.workers, check);
        const double published = row.at("errors").at(k).at(ai).get<double>();
        const double se = std::sqrt(published * (1.0 - published) / pub_reps +
                                    rep.error_estimate * (1.0 - rep.error_estimate) / n_reps);
        // one count of slack so that cells with near-zero error are not judged on se alone
        const double tol = ReproduceTolerance::coverage_z * se + 1.0 / n_reps;
        art.comparisons.push_back({"error",
                                   {{"beta", bv}, {"n", n}, {"interval", columns[k]},
                                    {"alpha", alphas[ai]}, {"regenerated", rep.n_regenerated}},
                                   rep.error_estimate, published, tol});
      }
    }
  }
  return art;
}

namespace detail {

inline DatasetFile dataset_from_config(const RunConfig& cfg) {
  if (cfg.data_path.empty()) throw ValidationError("--data is required for this command");
  return read_dataset_file(cfg.data_path);
}

inline FittedModel fit_from_config(const RunConfig& cfg) {
  return fit_logistic(dataset_from_config(cfg).data);
}

inline SpdMatrix fisher_inv_from_config(const RunConfig& cfg) {
  if (!cfg.fisher_inv_path.empty()) return fisher_inv_from_json(load_json_file(cfg.fisher_inv_path));
  if (!cfg.data_path.empty()) return fit_from_config(cfg).fisher_inv;
  throw ValidationError("region needs --fisher-inv or --data");
}

inline std::pair<double, double> simulation_interval(const RunConfig& cfg) {
  if (cfg.interval) return *cfg.interval;
  double plo = 0.0, phi = 0.0;
  if (cfg.interval_class == "narrow") plo = 0.3, phi = 0.7;
  else if (cfg.interval_class == "wide") plo = 0.1, phi = 0.9;
  else if (cfg.interval_class == "unrestricted") plo = 1e-10, phi = 1.0 - 1e-10;
  else throw ValidationError("simulate needs --interval or --interval-class narrow|wide|unrestricted");
  double lo = invert_logit_endpoint(plo, cfg.beta), hi = invert_logit_endpoint(phi, cfg.beta);
  if (lo > hi) std::swap(lo, hi);
  return {lo, hi};
}

inline CoverageCheck parse_check(const std::string& s) {
  if (s == "exact") return CoverageCheck::exact;
  if (s == "grid") return CoverageCheck::grid;
  throw ValidationError("--check must be 'exact' or 'grid'");
}

inline int execute(const RunConfig& cfg, std::ostream& out) {
  const bool csv = cfg.format == Format::csv;
  switch (cfg.command) {
    case Command::fit: {
      const DatasetFile file = dataset_from_config(cfg);
      const FittedModel m = fit_logistic(file.data);
      if (csv) {
        out << "term,estimate,se\n";
        for (std::size_t j = 0; j < m.dim(); ++j)
          out << (j == 0 ? std::string("intercept") : file.predictors[j - 1]) << ","
              << fmt(m.beta_hat[j]) << "," << fmt(std::sqrt(m.fisher_inv(j, j))) << "\n";
      } else {
        json j = to_json(m);
        json names{"intercept"};
        for (const auto& s : file.predictors) names.push_back(s);
        j["terms"] = names;
        out << j.dump(2) << "\n";
      }
      return kExitOk;
    }
    case Command::critval: {
      const CriticalValue cv = critical_value(cfg.alpha, GParams{cfg.p, cfg.r, cfg.a});
      if (csv)
        out << "p,r,a,alpha,c\n"
            << cfg.p << "," << cfg.r << "," << fmt(cfg.a) << "," << fmt(cfg.alpha) << ","
            << fmt(cv.c) << "\n";
      else
        out << to_json(cv).dump(2) << "\n";
      return kExitOk;
    }
    case Command::region: {
      const Region region = resolve_region(cfg);
      const SpdMatrix finv = fisher_inv_from_config(cfg);
      check_region_dim(region, finv.dim());
      const RegionSummary s = summarize(region, finv, cfg.search);
      const CriticalValue cv = critical_value(cfg.alpha, s);
      if (csv) {
        out << "p,r,a,alpha,c";
        if (s.x0)
          for (std::size_t j = 0; j < s.x0->size(); ++j) out << ",x0_" << j;
        out << "\n" << s.p << "," << s.r << "," << fmt(s.a) << "," << fmt(cfg.alpha) << ","
            << fmt(cv.c);
        if (s.x0)
          for (double v : *s.x0) out << "," << fmt(v);
        out << "\n";
      } else {
        out << json{{"region", to_json(region)}, {"summary", to_json(s)},
                    {"critical", to_json(cv)}}.dump(2)
            << "\n";
      }
      return kExitOk;
    }
    case Command::band: {
      const DatasetFile file = dataset_from_config(cfg);
      FittedModel model = fit_logistic(file.data);
      const Region region = resolve_region(cfg);
      check_region_dim(region, model.dim());
      const RegionSummary s = summarize(region, model.fisher_inv, cfg.search);
      const CriticalValue cv = critical_value(cfg.alpha, s);
      const Bounds box = band_box(region, file.data);
      const auto grid = box.size() == 1 ? interval_grid(box[0].first, box[0].second,
                                                        cfg.grid_points)
                                        : box_grid(box, cfg.grid_points);
      const BandSpec spec(std::move(model), cv, region);
      const auto pts = band_curve(spec, grid);
      if (csv)
        write_band_csv(out, pts);
      else
        out << json{{"summary", to_json(s)}, {"critical", to_json(cv)},
                    {"band", band_to_json(pts)}}.dump(2)
            << "\n";
      return kExitOk;
    }
    case Command::simulate: {
      const auto [lo, hi] = simulation_interval(cfg);
      const SimulationCell cell{cfg.beta, lo, hi, cfg.n, cfg.alpha, cfg.reps, cfg.seed};
      const CoverageReport rep = simulate_cell(cell, cfg.workers, parse_check(cfg.check));
      if (csv)
        out << "beta0,beta1,lower,upper,n,alpha,n_reps,seed,error,std_error,n_regenerated\n"
            << fmt(cfg.beta[0]) << "," << fmt(cfg.beta[1]) << "," << fmt(lo) << "," << fmt(hi)
            << "," << cfg.n << "," << fmt(cfg.alpha) << "," << cfg.reps << "," << cfg.seed
            << "," << fmt(rep.error_estimate) << "," << fmt(rep.std_error) << ","
            << rep.n_regenerated << "\n";
      else
        out << to_json(rep).dump(2) << "\n";
      return kExitOk;
    }
    case Command::reproduce: {
      parse_check(cfg.check);
      TableArtifact art;
      if (cfg.table == "3.2") art = reproduce_table_3_2(cfg);
      else if (cfg.table == "3.3") art = reproduce_table_3_3(cfg);
      else if (cfg.table == "4.2") art = reproduce_table_4_2(cfg);
      else throw ValidationError("reproduce: table must be 3.2, 3.3 or 4.2");
      if (csv)
        art.write_csv(out);
      else
        out << art.to_json().dump(2) << "\n";
      return art.ok() ? kExitOk : kExitMismatch;
    }
  }
  return kExitOk;
}

}  // namespace detail

/// Runs one command. Results go to `out` (or cfg.output_path); failures are
/// reported on `err` as a JSON object and mapped to the exit code.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.output_path.empty()) return detail::execute(cfg, out);
    std::ostringstream buffer;
    const int code = detail::execute(cfg, buffer);
    std::ofstream file(cfg.output_path);
    if (!file) throw ValidationError("cannot open output file: " + cfg.output_path);
    file << buffer.str();
    return code;
  } catch (const Error& e) {
    const bool validation = e.kind() == ErrorKind::validation;
    const int code = validation ? kExitValidation : kExitNumerical;
    err << error_json(validation ? "validation" : "numerical", e.what(), code).dump() << "\n";
    return code;
  } catch (const json::exception& e) {
    err << error_json("validation", e.what(), kExitValidation).dump() << "\n";
    return kExitValidation;
  }
}

}  // namespace bandcone
