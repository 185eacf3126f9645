#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bandcone/cli.hpp"

namespace {

using namespace bandcone;

struct Raw {
  std::string interval;
  std::string rectangle;
  std::string beta;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
};

void add_common(CLI::App* cmd, RunConfig& cfg, Raw& raw) {
  cmd->add_option("--format", raw.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("-o,--output", cfg.output_path, "Write output to this file");
}

void add_region(CLI::App* cmd, RunConfig& cfg, Raw& raw) {
  cmd->add_option("--region", cfg.region_json, "Region JSON, inline or @file");
  cmd->add_option("--interval", raw.interval, "Predictor interval [lower, upper]");
  cmd->add_option("--rectangle", raw.rectangle, "Predictor box [[lo,hi],...]");
  cmd->add_option("--search-grid", cfg.search.grid_points_per_dim,
                  "Grid points per coordinate in the center search");
  cmd->add_option("--refine", cfg.search.refinement_rounds, "Refinement rounds");
}

void finish(RunConfig& cfg, const Raw& raw) {
  cfg.format = raw.format == "csv" ? Format::csv : Format::json;
  if (raw.seed) cfg.seed = *raw.seed;
  if (!raw.interval.empty()) cfg.interval = detail::interval_from_text(raw.interval);
  if (!raw.rectangle.empty())
    cfg.rectangle = bounds_from_json(parse_json_text(raw.rectangle, "--rectangle"));
  if (!raw.beta.empty()) {
    const Vector b = vector_from_json(parse_json_text(raw.beta, "--beta"));
    if (b.size() != 2) throw ValidationError("--beta expects [b0, b1]");
    cfg.beta = {b[0], b[1]};
  }
  if (raw.reps) cfg.reproduce_reps = raw.reps;
  apply_seed_override(cfg, std::getenv("BANDCONE_SEED"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous confidence bands for logistic regression over restricted regions"};
  app.require_subcommand(1);
  RunConfig cfg;
  Raw raw;

  auto* fit = app.add_subcommand("fit", "Fit a logistic model to a dataset CSV");
  fit->add_option("--data", cfg.data_path, "Dataset CSV")->required();
  add_common(fit, cfg, raw);

  auto* crit = app.add_subcommand("critval", "Critical value for given (p, r, a)");
  crit->add_option("--alpha", cfg.alpha, "Error rate");
  crit->add_option("--p", cfg.p, "Number of coefficients")->required();
  crit->add_option("--r", cfg.r, "Subspace dimension")->required();
  crit->add_option("--a", cfg.a, "Cone cosine")->required();
  add_common(crit, cfg, raw);

  auto* region = app.add_subcommand("region", "Canonical (p, r, a) and critical value of a region");
  region->add_option("--fisher-inv", cfg.fisher_inv_path, "JSON file with F^{-1}");
  region->add_option("--data", cfg.data_path, "Dataset CSV, fitted when --fisher-inv is absent");
  region->add_option("--alpha", cfg.alpha, "Error rate");
  add_region(region, cfg, raw);
  add_common(region, cfg, raw);

  auto* band = app.add_subcommand("band", "Fit and emit the simultaneous band on a grid");
  band->add_option("--data", cfg.data_path, "Dataset CSV")->required();
  band->add_option("--alpha", cfg.alpha, "Error rate");
  band->add_option("--grid-points", cfg.grid_points, "Grid points per coordinate");
  add_region(band, cfg, raw);
  add_common(band, cfg, raw);

  auto* sim = app.add_subcommand("simulate", "Monte Carlo coverage for one design cell");
  sim->add_option("--beta", raw.beta, "True coefficients [b0, b1]")->required();
  sim->add_option("--interval", raw.interval, "Predictor interval [lower, upper]");
  sim->add_option("--interval-class", cfg.interval_class, "narrow | wide | unrestricted")
      ->check(CLI::IsMember({"narrow", "wide", "unrestricted"}));
  sim->add_option("--n", cfg.n, "Sample size");
  sim->add_option("--alpha", cfg.alpha, "Error rate");
  sim->add_option("--reps", cfg.reps, "Replications");
  sim->add_option("--seed", raw.seed, "Seed");
  sim->add_option("--check", cfg.check, "exact | grid")->check(CLI::IsMember({"exact", "grid"}));
  sim->add_option("--workers", cfg.workers, "Worker threads");
  add_common(sim, cfg, raw);

  auto* rep = app.add_subcommand("reproduce", "Compare against published tables");
  rep->add_option("table", cfg.table, "3.2 | 3.3 | 4.2")
      ->required()
      ->check(CLI::IsMember({"3.2", "3.3", "4.2"}));
  rep->add_flag("--full", cfg.full, "Table 4.2 at 5000 replications per cell");
  rep->add_option("--reps", raw.reps, "Replications per cell for table 4.2");
  rep->add_option("--n", cfg.sample_sizes, "Restrict table 4.2 to these sample sizes");
  rep->add_option("--alpha", cfg.alphas, "Restrict table 4.2 to these error rates");
  rep->add_option("--seed", raw.seed, "Seed");
  rep->add_option("--check", cfg.check, "exact | grid")->check(CLI::IsMember({"exact", "grid"}));
  rep->add_option("--workers", cfg.workers, "Worker threads");
  rep->add_flag("--printed-finv", cfg.printed_fisher_inv,
                "Table 3.3 from the printed (rounded) F^{-1} instead of a refit");
  rep->add_option("--data-dir", cfg.data_dir, "Directory holding the bundled data");
  add_common(rep, cfg, raw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json("validation", e.what(), kExitValidation).dump() << "\n";
    return kExitValidation;
  }

  if (fit->parsed()) cfg.command = Command::fit;
  else if (crit->parsed()) cfg.command = Command::critval;
  else if (region->parsed()) cfg.command = Command::region;
  else if (band->parsed()) cfg.command = Command::band;
  else if (sim->parsed()) cfg.command = Command::simulate;
  else cfg.command = Command::reproduce;

  try {
    finish(cfg, raw);
  } catch (const Error& e) {
    std::cerr << error_json("validation", e.what(), kExitValidation).dump() << "\n";
    return kExitValidation;
  }
  return run(cfg, std::cout, std::cerr);
}
