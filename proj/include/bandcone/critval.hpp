#pragma once

// Distribution of G = sup over the cone of the squared standardized
// deviation, and its inversion for the simultaneous critical value.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <thread>
#include <vector>

#include "bandcone/error.hpp"
#include "bandcone/quadrature.hpp"
#include "bandcone/random.hpp"
#include "bandcone/regions.hpp"
#include "bandcone/roots.hpp"
#include "bandcone/special.hpp"

namespace bandcone {

struct GParams {
  int p = 1;
  int r = 1;
  double a = 0.0;

  void validate() const {
    if (p < 1) throw DomainError("GParams: p must be >= 1");
    if (r < 1 || r > p) throw DomainError("GParams: requires 1 <= r <= p");
    if (!(a >= 0.0 && a <= 1.0)) throw DomainError("GParams: a must lie in [0, 1]");
  }
};

inline GParams params_for(const RegionSummary& s) {
  return GParams{s.p, s.r, clamp_cone_cosine(s.a)};
}

struct CriticalValue {
  double c = 0.0;
  double alpha = 0.05;
  GParams params;
  double cdf_residual = 0.0;  // cdf_G(c^2) - (1 - alpha)
  double solver_tol = 0.0;    // absolute tolerance on c^2
};

struct CritvalOptions {
  QuadratureSpec quadrature{1e-10, 1e-10, 60};
  double root_tol = 1e-9;
  /// Above this a, the integral is taken in the substituted variable t = g/w.
  double substitution_threshold = 0.99;
};

/// m(t) = {a t - [(1 - a^2)(1 - t^2)]^{1/2}}^2 on 0 <= t <= 1.
inline double m_func(double t, double a) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("m_func: requires 0 <= t <= 1");
  if (!(a >= 0.0 && a <= 1.0)) throw DomainError("m_func: requires 0 <= a <= 1");
  const double d = a * t - std::sqrt(std::max(0.0, (1.0 - a * a) * (1.0 - t * t)));
  return d * d;
}

/// P(G <= g) = F(g) + int_g^{g/(1-a^2)} H(m(sqrt(g/w))) f(w) dw, with F, f the
/// chi-square(p) distribution and density and H the beta(r/2, (p-r)/2)
/// distribution function.
inline double cdf_G(double g, const GParams& params, const CritvalOptions& opt = {}) {
  params.validate();
  if (!(g >= 0.0)) throw DomainError("cdf_G: requires g >= 0");
  if (g == 0.0) return 0.0;
  const int p = params.p, r = params.r;
  const double a = params.a;
  const double base = chi2_cdf(g, p);
  if (r == p || a == 0.0) return base;

  const double ha = 0.5 * r, hb = 0.5 * (p - r);
  const double one_minus_a2 = (1.0 - a) * (1.0 + a);
  double integral;
  if (a <= opt.substitution_threshold) {
    auto integrand = [&](double w) {
      const double t = std::min(1.0, std::sqrt(g / w));
      return beta_cdf(m_func(t, a), ha, hb) * chi2_pdf(w, p);
    };
    integral = adaptive_integrate(integrand, g, g / one_minus_a2, opt.quadrature).value;
  } else {
    // w = g / t maps [g, g/(1-a^2)] onto [1-a^2, 1] and stays finite at a = 1.
    auto integrand = [&](double t) {
      if (t <= 0.0) return 0.0;
      return beta_cdf(m_func(std::sqrt(t), a), ha, hb) * chi2_pdf(g / t, p) * g / (t * t);
    };
    integral = adaptive_integrate(integrand, one_minus_a2, 1.0, opt.quadrature).value;
  }
  return std::clamp(base + integral, 0.0, 1.0);
}

/// Solves P(G <= c^2) = 1 - alpha for c. The root in g lies between the
/// chi-square(r) and chi-square(p) quantiles.
inline CriticalValue critical_value(double alpha, const GParams& params,
                                    const CritvalOptions& opt = {}) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("critical_value: alpha must lie in (0, 1)");
  params.validate();
  const double level = 1.0 - alpha;
  const double hi = chi2_quantile(level, params.p);
  CriticalValue out;
  out.alpha = alpha;
  out.params = params;
  out.solver_tol = opt.root_tol;

  if (params.r == params.p || params.a == 0.0) {
    out.c = std::sqrt(hi);
    out.cdf_residual = chi2_cdf(hi, params.p) - level;
    return out;
  }
  const double lo = chi2_quantile(level, params.r);
  auto f = [&](double g) { return cdf_G(g, params, opt) - level; };
  double g;
  try {
    g = brent_root(f, RootBracket{lo * (1.0 - 1e-6), hi * (1.0 + 1e-6), opt.root_tol});
  } catch (const BracketError& e) {
    std::ostringstream os;
    os << "critical_value: root not bracketed for (p=" << params.p << ", r=" << params.r
       << ", a=" << params.a << "): " << e.what();
    throw BracketError(os.str(), e.f_lo(), e.f_hi());
  }
  g = std::clamp(g, lo, hi);
  out.c = std::sqrt(g);
  out.cdf_residual = f(g);
  return out;
}

inline CriticalValue critical_value(double alpha, const RegionSummary& summary,
                                    const CritvalOptions& opt = {}) {
  return critical_value(alpha, params_for(summary), opt);
}

// ---------------------------------------------------------------------------
// Monte Carlo oracle

struct OraclePoint {
  double g = 0.0;
  double probability = 0.0;
  double std_error = 0.0;
};

/// Number of independently keyed draw blocks; fixed so results do not depend
/// on the worker count.
inline constexpr int kOracleBlocks = 64;

/// One draw of G: u ~ N_r(0, I), v ~ N_{p-r}(0, I), w = |u|^2 + |v|^2,
/// phi = acos(|u| / sqrt(w)); G = w when phi <= acos(a), otherwise
/// w cos^2(phi - acos(a)).
inline double draw_G(CounterRng& rng, const GParams& params) {
  double u2 = 0.0, v2 = 0.0;
  for (int i = 0; i < params.r; ++i) {
    const double z = rng.normal();
    u2 += z * z;
  }
  for (int i = params.r; i < params.p; ++i) {
    const double z = rng.normal();
    v2 += z * z;
  }
  const double w = u2 + v2;
  if (w == 0.0) return 0.0;
  const double phi = std::acos(std::clamp(std::sqrt(u2 / w), 0.0, 1.0));
  const double psi = std::acos(params.a);
  if (phi <= psi) return w;
  const double c = std::cos(phi - psi);
  return w * c * c;
}

inline std::vector<OraclePoint> oracle_cdf_G(const GParams& params,
                                             const std::vector<double>& g_grid,
                                             std::int64_t n_draws, std::uint64_t seed,
                                             int workers = 1) {
  params.validate();
  if (n_draws < 10000) throw DomainError("oracle_cdf_G: n_draws must be >= 10^4");
  const std::size_t m = g_grid.size();
  std::vector<std::vector<std::int64_t>> counts(kOracleBlocks,
                                                std::vector<std::int64_t>(m, 0));

  auto run_block = [&](int b) {
    std::int64_t draws = n_draws / kOracleBlocks + (b < n_draws % kOracleBlocks ? 1 : 0);
    CounterRng rng(derive_key(seed, {static_cast<std::uint64_t>(b)}));
    auto& cnt = counts[b];
    for (std::int64_t i = 0; i < draws; ++i) {
      const double G = draw_G(rng, params);
      for (std::size_t k = 0; k < m; ++k)
        if (G <= g_grid[k]) ++cnt[k];
    }
  };

  workers = std::clamp(workers, 1, kOracleBlocks);
  if (workers == 1) {
    for (int b = 0; b < kOracleBlocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int b = w; b < kOracleBlocks; b += workers) run_block(b);
      });
    for (auto& t : pool) t.join();
  }

  std::vector<OraclePoint> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    std::int64_t total = 0;
    for (const auto& c : counts) total += c[k];
    const double prob = static_cast<double>(total) / static_cast<double>(n_draws);
    out[k] = {g_grid[k], prob, std::sqrt(prob * (1.0 - prob) / static_cast<double>(n_draws))};
  }
  return out;
}

}  // namespace bandcone
