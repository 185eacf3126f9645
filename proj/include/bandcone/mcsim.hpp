#pragma once

// Small-sample coverage study for the single-predictor interval band:
// simulate, refit, rebuild the band and check whether it covers the truth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "bandcone/bands.hpp"
#include "bandcone/critval.hpp"
#include "bandcone/error.hpp"
#include "bandcone/glm.hpp"
#include "bandcone/random.hpp"
#include "bandcone/regions.hpp"

namespace bandcone {

using Beta2 = std::array<double, 2>;

struct SimulationCell {
  Beta2 beta_true{};
  double lower = 0.0;
  double upper = 1.0;
  int n = 25;
  double alpha = 0.05;
  int n_reps = 1000;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(lower < upper)) throw ValidationError("SimulationCell: requires lower < upper");
    if (n < 10) throw ValidationError("SimulationCell: requires n >= 10");
    if (n_reps < 1) throw ValidationError("SimulationCell: requires n_reps >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ValidationError("SimulationCell: alpha must lie in (0, 1)");
  }
};

struct CoverageReport {
  SimulationCell cell;
  double error_estimate = 0.0;  // fraction of replications not covered
  double std_error = 0.0;
  int n_converged = 0;
  int n_regenerated = 0;  // datasets discarded because the fit failed
};

enum class CoverageCheck { exact, grid };

/// x with logistic(b0 + b1 x) = prob.
inline double invert_logit_endpoint(double prob, const Beta2& beta) {
  if (!(prob > 0.0 && prob < 1.0))
    throw DomainError("invert_logit_endpoint: prob must lie in (0, 1)");
  if (beta[1] == 0.0) throw DomainError("invert_logit_endpoint: slope is zero");
  return (std::log(prob / (1.0 - prob)) - beta[0]) / beta[1];
}

/// n equally spaced x over [lower, upper] (endpoints included) with
/// Bernoulli responses y = 1 iff U < logistic(b0 + b1 x), U ~ uniform(0, 1).
inline Dataset generate_dataset(const Beta2& beta, double lower, double upper, int n,
                                std::uint64_t seed) {
  if (n < 2) throw ValidationError("generate_dataset: need n >= 2");
  if (!(lower < upper)) throw ValidationError("generate_dataset: requires lower < upper");
  CounterRng rng(derive_key(seed, {}));
  Matrix design(n, 2);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    const double x = i == n - 1 ? upper : lower + (upper - lower) * i / (n - 1.0);
    design(i, 0) = 1.0;
    design(i, 1) = x;
    y[i] = rng.uniform() < logistic(beta[0] + beta[1] * x) ? 1 : 0;
  }
  return Dataset::bernoulli(std::move(design), y);
}

/// sup over x in [l, u] of |x'(b - b_hat)| / (x'F^{-1}x)^{1/2}, computed from
/// the angle of N = B^{-1}(b - b_hat) relative to the cone spanned by
/// B(1,l)' and B(1,u)', B = (F^{-1})^{1/2}.
inline double sup_statistic(const Beta2& beta_true, const FittedModel& fit, double lower,
                            double upper) {
  if (fit.dim() != 2) throw ValidationError("sup_statistic: model must be 2-dimensional");
  const SpdMatrix b = sym_sqrt(fit.fisher_inv);
  const Vector diff{beta_true[0] - fit.beta_hat[0], beta_true[1] - fit.beta_hat[1]};
  const Vector nvec = spd_invert(b).matrix() * diff;
  const double nn = norm(nvec);
  if (nn == 0.0) return 0.0;

  Vector el = b.matrix() * Vector{1.0, lower};
  Vector eu = b.matrix() * Vector{1.0, upper};
  const double ll = norm(el), lu = norm(eu);
  for (auto& v : el) v /= ll;
  for (auto& v : eu) v /= lu;
  const double cross_lu = el[0] * eu[1] - el[1] * eu[0];
  const double phi = std::acos(std::clamp(dot(el, eu), -1.0, 1.0));
  const double orient = cross_lu >= 0.0 ? 1.0 : -1.0;

  // Angle of N from the l-edge, measured toward the u-edge; +/-N are
  // equivalent so reduce modulo pi.
  const double delta =
      std::atan2(orient * (el[0] * nvec[1] - el[1] * nvec[0]), dot(el, nvec));
  const double reduced = std::fmod(delta + 2.0 * std::numbers::pi, std::numbers::pi);
  if (reduced <= phi) return nn;
  return nn * std::max(std::abs(std::cos(delta)), std::abs(std::cos(delta - phi)));
}

/// Same statistic evaluated on an equally spaced grid over [l, u].
inline double sup_statistic_grid(const Beta2& beta_true, const FittedModel& fit,
                                 double lower, double upper, int points = 2001) {
  if (fit.dim() != 2) throw ValidationError("sup_statistic_grid: model must be 2-dimensional");
  double best = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = i == points - 1 ? upper : lower + (upper - lower) * i / (points - 1.0);
    const Vector xv{1.0, x};
    const double num = std::abs((beta_true[0] - fit.beta_hat[0]) +
                                (beta_true[1] - fit.beta_hat[1]) * x);
    best = std::max(best, num / std::sqrt(fit.fisher_inv.quad(xv)));
  }
  return best;
}

/// True when the band with critical value c covers x'b for every x in [l, u].
inline bool covers(const Beta2& beta_true, const FittedModel& fit, double lower,
                   double upper, double c) {
  return sup_statistic(beta_true, fit, lower, upper) < c;
}

inline bool covers_grid(const Beta2& beta_true, const FittedModel& fit, double lower,
                        double upper, double c, int points = 2001) {
  return sup_statistic_grid(beta_true, fit, lower, upper, points) < c;
}

struct ReplicationOutcome {
  bool covered = false;
  int regenerated = 0;
  double a = 0.0;
  double c = 0.0;
};

/// One replication: datasets are drawn from substreams (seed, rep, attempt)
/// until the fit converges.
inline ReplicationOutcome run_replication(const SimulationCell& cell, int rep,
                                          CoverageCheck check = CoverageCheck::exact,
                                          int max_attempts = 1000) {
  ReplicationOutcome out;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const Dataset data =
        generate_dataset(cell.beta_true, cell.lower, cell.upper, cell.n,
                         derive_key(cell.seed, {static_cast<std::uint64_t>(rep),
                                                static_cast<std::uint64_t>(attempt)}));
    std::optional<FittedModel> fitted;
    try {
      fitted = fit_logistic(data);
    } catch (const NumericalError&) {
      ++out.regenerated;
      continue;
    }
    const FittedModel& fit = *fitted;
    const RegionSummary cone = cone_from_interval(cell.lower, cell.upper, fit.fisher_inv);
    const CriticalValue cv = critical_value(cell.alpha, params_for(cone));
    out.a = cone.a;
    out.c = cv.c;
    out.covered = check == CoverageCheck::exact
                      ? covers(cell.beta_true, fit, cell.lower, cell.upper, cv.c)
                      : covers_grid(cell.beta_true, fit, cell.lower, cell.upper, cv.c);
    return out;
  }
  std::ostringstream os;
  os << "simulate_cell: replication " << rep << " failed to produce a convergent fit in "
     << max_attempts << " attempts";
  throw NumericalError(os.str());
}

/// Estimated non-coverage over cell.n_reps replications. The result depends
/// only on the cell, not on the worker count.
inline CoverageReport simulate_cell(const SimulationCell& cell, int workers = 1,
                                    CoverageCheck check = CoverageCheck::exact) {
  cell.validate();
  std::vector<ReplicationOutcome> outcomes(cell.n_reps);
  workers = std::clamp(workers, 1, cell.n_reps);
  if (workers == 1) {
    for (int i = 0; i < cell.n_reps; ++i) outcomes[i] = run_replication(cell, i, check);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < cell.n_reps; i += workers)
            outcomes[i] = run_replication(cell, i, check);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  CoverageReport rep;
  rep.cell = cell;
  int failures = 0;
  for (const auto& o : outcomes) {
    failures += o.covered ? 0 : 1;
    rep.n_regenerated += o.regenerated;
  }
  rep.n_converged = cell.n_reps;
  rep.error_estimate = static_cast<double>(failures) / cell.n_reps;
  rep.std_error = std::sqrt(rep.error_estimate * (1.0 - rep.error_estimate) / cell.n_reps);
  return rep;
}

}  // namespace bandcone
