#pragma once

// Restriction regions for the predictor vector x = (1, x_1, ..., x_{p-1})'
// and their reduction to the canonical cone {x : rho(x, E) >= a}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bandcone/error.hpp"
#include "bandcone/linalg.hpp"

namespace bandcone {

using Bounds = std::vector<std::pair<double, double>>;

struct Unrestricted {};

/// {x : rho(x, span Z) >= a} with Z a p x r matrix of full column rank.
struct SubspaceCone {
  Matrix z;
  double a = 0.0;
};

/// Simple logistic regression with l <= x_1 <= u.
struct IntervalCone {
  double lower = 0.0;
  double upper = 0.0;
};

/// Convex set generated by k >= p vectors. When no center is given the
/// best center is searched over `bounds` (or the generators' bounding box).
struct ConvexHull {
  std::vector<Vector> generators;
  std::optional<Vector> center;
  Bounds bounds;
};

using Region = std::variant<Unrestricted, SubspaceCone, IntervalCone, ConvexHull>;

/// Canonical parameters consumed by the critical-value solver.
struct RegionSummary {
  int p = 1;
  int r = 1;
  double a = 0.0;
  std::optional<Vector> x0;
  std::optional<double> phi;  // only for interval cones
  bool degenerate = false;    // center search found no positive correlation
};

struct SearchConfig {
  int grid_points_per_dim = 500;
  int refinement_rounds = 2;
};

/// Largest a passed on to the critical-value solver.
inline constexpr double kMaxConeCosine = 1.0 - 1e-12;

inline double clamp_cone_cosine(double a) {
  return std::clamp(a, 0.0, kMaxConeCosine);
}

// ---------------------------------------------------------------------------
// correlations

/// Signed correlation between x'b and y'b when b has covariance F^{-1}.
inline double correlation(std::span<const double> x, std::span<const double> y,
                          const SpdMatrix& fisher_inv) {
  const double xx = fisher_inv.quad(x);
  const double yy = fisher_inv.quad(y);
  if (!(xx > 0.0) || !(yy > 0.0)) throw DomainError("correlation: zero vector");
  return fisher_inv.form(x, y) / std::sqrt(xx * yy);
}

namespace detail {

inline void require_full_column_rank(const Matrix& z, const SpdMatrix& fisher_inv) {
  if (z.rows() != fisher_inv.dim())
    throw ValidationError("subspace matrix row count must equal model dimension");
  if (z.cols() < 1 || z.cols() > z.rows())
    throw ValidationError("subspace matrix must have 1 <= r <= p columns");
  Matrix gram = z.transpose() * fisher_inv.matrix() * z;
  Vector s(gram.rows());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(gram(i, i) > 0.0)) throw ValidationError("subspace matrix has a zero column");
    s[i] = std::sqrt(gram(i, i));
  }
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) gram(i, j) /= s[i] * s[j];
  const auto e = jacobi_eigen(gram);
  if (!(e.values.front() > 1e-12 * e.values.back()))
    throw ValidationError("subspace matrix columns are linearly dependent");
}

// Squared multiple correlation numerator and denominator.
inline std::pair<double, double> projection_terms(std::span<const double> x,
                                                  const Matrix& z,
                                                  const SpdMatrix& fisher_inv) {
  const Vector fx = fisher_inv.matrix() * x;
  const Matrix zt = z.transpose();
  const Vector zfx = zt * fx;
  const Matrix gram = zt * fisher_inv.matrix() * z;
  const Vector sol = cholesky_solve(cholesky(gram), zfx);
  return {dot(zfx, sol), dot(x, fx)};
}

}  // namespace detail

/// Multiple correlation between x'b and Z'b, in [0, 1].
inline double multiple_correlation(std::span<const double> x, const Matrix& z,
                                   const SpdMatrix& fisher_inv) {
  if (x.size() != fisher_inv.dim())
    throw ValidationError("multiple_correlation: dimension mismatch");
  if (norm(x) == 0.0) throw DomainError("multiple_correlation: x must be nonzero");
  detail::require_full_column_rank(z, fisher_inv);
  const auto [num, den] = detail::projection_terms(x, z, fisher_inv);
  return std::sqrt(std::clamp(num / den, 0.0, 1.0));
}

// ---------------------------------------------------------------------------
// region construction

inline SubspaceCone make_subspace_cone(Matrix z, double a) {
  if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("subspace cone: a must lie in [0, 1]");
  if (z.cols() < 1 || z.cols() > z.rows())
    throw ValidationError("subspace cone: Z must be p x r with 1 <= r <= p");
  return SubspaceCone{std::move(z), a};
}

inline IntervalCone make_interval(double lower, double upper) {
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper))
    throw ValidationError("interval: requires finite lower < upper");
  return IntervalCone{lower, upper};
}

/// Corners of the box, each with a leading 1; the last coordinate varies
/// fastest.
inline std::vector<Vector> rect_generators(const Bounds& bounds, int p) {
  if (bounds.empty()) throw ValidationError("rect_generators: empty bounds");
  if (static_cast<std::size_t>(p) != bounds.size() + 1)
    throw ValidationError("rect_generators: need p - 1 bound pairs");
  for (const auto& [lo, hi] : bounds)
    if (!(lo < hi)) throw ValidationError("rect_generators: each bound needs lo < hi");
  const std::size_t d = bounds.size();
  const std::size_t count = std::size_t{1} << d;
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    Vector v(d + 1, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
      const bool upper = (mask >> (d - 1 - j)) & 1U;
      v[j + 1] = upper ? bounds[j].second : bounds[j].first;
    }
    out.push_back(std::move(v));
  }
  return out;
}

/// Convex hull region. Requires k >= p nonzero generators of equal length.
inline ConvexHull make_convex_hull(std::vector<Vector> generators,
                                   std::optional<Vector> center = std::nullopt,
                                   Bounds bounds = {}) {
  if (generators.empty()) throw ValidationError("convex hull: no generators");
  const std::size_t p = generators.front().size();
  if (generators.size() < p) {
    std::ostringstream os;
    os << "convex hull: " << generators.size() << " generators cannot span a "
       << p << "-dimensional region (need k >= p)";
    throw ValidationError(os.str());
  }
  for (const auto& g : generators) {
    if (g.size() != p) throw ValidationError("convex hull: generators differ in length");
    if (norm(g) == 0.0) throw ValidationError("convex hull: zero generator");
  }
  if (center && center->size() != p)
    throw ValidationError("convex hull: center has wrong dimension");
  return ConvexHull{std::move(generators), std::move(center), std::move(bounds)};
}

inline ConvexHull make_rectangle(const Bounds& bounds) {
  const int p = static_cast<int>(bounds.size()) + 1;
  return make_convex_hull(rect_generators(bounds, p), std::nullopt, bounds);
}

// ---------------------------------------------------------------------------
// reductions

/// Interval (l, u) of the single predictor mapped to a cone: with
/// B = (F^{-1})^{1/2}, phi is the angle between B(1,l)' and B(1,u)', the axis
/// x_a is the preimage of the bisector (scaled to x_a[0] = 1) and
/// a = cos(phi / 2).
inline RegionSummary cone_from_interval(double lower, double upper,
                                        const SpdMatrix& fisher_inv) {
  if (fisher_inv.dim() != 2)
    throw ValidationError("cone_from_interval: requires a 2 x 2 covariance");
  if (!(lower < upper)) throw ValidationError("cone_from_interval: requires l < u");
  const SpdMatrix b = sym_sqrt(fisher_inv);
  Vector vl = b.matrix() * Vector{1.0, lower};
  Vector vu = b.matrix() * Vector{1.0, upper};
  const double nl = norm(vl), nu = norm(vu);
  for (auto& v : vl) v /= nl;
  for (auto& v : vu) v /= nu;
  const double phi = std::acos(std::clamp(dot(vl, vu), -1.0, 1.0));

  // Bisector of the two unit directions, pulled back through B.
  const Vector bis{vl[0] + vu[0], vl[1] + vu[1]};
  const Vector xa_raw = spd_invert(b).matrix() * bis;
  const Vector xa{1.0, xa_raw[1] / xa_raw[0]};

  RegionSummary s;
  s.p = 2;
  s.r = 1;
  s.a = std::cos(0.5 * phi);
  s.x0 = xa;
  s.phi = phi;
  return s;
}

namespace detail {

struct CenterObjective {
  std::vector<Vector> fx;  // F^{-1} x_i
  Vector norms;            // (x_i' F^{-1} x_i)^{1/2}
  const SpdMatrix* fisher_inv;

  CenterObjective(const std::vector<Vector>& gens, const SpdMatrix& f)
      : fisher_inv(&f) {
    for (const auto& g : gens) {
      fx.push_back(f.matrix() * g);
      norms.push_back(std::sqrt(f.quad(g)));
    }
  }

  // min_i rho(x_i, x0), floored at zero.
  double operator()(std::span<const double> x0) const {
    const double q = fisher_inv->quad(x0);
    if (!(q > 0.0)) return 0.0;
    const double s = std::sqrt(q);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fx.size(); ++i)
      m = std::min(m, dot(fx[i], x0) / (norms[i] * s));
    return m > 0.0 ? m : 0.0;
  }
};

inline double grid_point(double lo, double hi, int i, int n) {
  if (n <= 1 || lo == hi) return lo;
  if (i == n - 1) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

struct Incumbent {
  double score = -1.0;
  Vector x0;
};

// Exhaustive lexicographic grid; strict improvement keeps the lowest index
// among ties.
inline void full_grid(const CenterObjective& obj, const Bounds& box, int n,
                      Incumbent& best) {
  const std::size_t d = box.size();
  std::vector<int> idx(d, 0);
  Vector x(d + 1, 1.0);
  std::vector<Vector> axes(d);
  for (std::size_t j = 0; j < d; ++j)
    for (int i = 0; i < n; ++i)
      axes[j].push_back(grid_point(box[j].first, box[j].second, i, n));
  for (;;) {
    for (std::size_t j = 0; j < d; ++j) x[j + 1] = axes[j][idx[j]];
    const double s = obj(x);
    if (s > best.score) {
      best.score = s;
      best.x0 = x;
    }
    std::size_t j = d;
    while (j > 0) {
      --j;
      if (++idx[j] < n) break;
      idx[j] = 0;
      if (j == 0) return;
    }
    if (d == 0) return;
  }
}

// Cyclic coordinate sweeps over per-coordinate grids.
inline void coordinate_descent(const CenterObjective& obj, const Bounds& box, int n,
                               Incumbent& best) {
  const std::size_t d = box.size();
  if (best.x0.empty()) {
    best.x0.assign(d + 1, 1.0);
    for (std::size_t j = 0; j < d; ++j)
      best.x0[j + 1] = 0.5 * (box[j].first + box[j].second);
    best.score = obj(best.x0);
  }
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool improved = false;
    for (std::size_t j = 0; j < d; ++j) {
      Vector x = best.x0;
      for (int i = 0; i < n; ++i) {
        x[j + 1] = grid_point(box[j].first, box[j].second, i, n);
        const double s = obj(x);
        if (s > best.score) {
          best.score = s;
          best.x0 = x;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
}

}  // namespace detail

/// Searches the box for the center x0 = (1, t)' maximising
/// a(x0) = min_i rho(x_i, x0), scoring non-positive minima as 0. A full grid
/// is used for up to three free coordinates, coordinate sweeps beyond that;
/// each refinement round re-grids a box one tenth the size around the
/// incumbent.
inline RegionSummary best_center_search(const std::vector<Vector>& generators,
                                        const SpdMatrix& fisher_inv,
                                        const Bounds& bounds,
                                        const SearchConfig& config = {}) {
  if (generators.empty()) throw ValidationError("best_center_search: no generators");
  if (config.grid_points_per_dim < 2)
    throw ValidationError("best_center_search: grid_points_per_dim must be >= 2");
  if (config.refinement_rounds < 0)
    throw ValidationError("best_center_search: refinement_rounds must be >= 0");
  const std::size_t p = fisher_inv.dim();
  if (bounds.size() + 1 != p)
    throw ValidationError("best_center_search: need p - 1 bound pairs");
  for (const auto& g : generators)
    if (g.size() != p) throw ValidationError("best_center_search: generator dimension");
  for (const auto& [lo, hi] : bounds)
    if (!(lo <= hi)) throw ValidationError("best_center_search: bound with lo > hi");

  const detail::CenterObjective objective(generators, fisher_inv);
  const int n = config.grid_points_per_dim;
  const bool exhaustive = bounds.size() <= 3;

  detail::Incumbent best;
  Bounds box = bounds;
  for (int round = 0; round <= config.refinement_rounds; ++round) {
    if (round > 0) {
      for (std::size_t j = 0; j < box.size(); ++j) {
        const double width = (box[j].second - box[j].first) / 10.0;
        const double lo_lim = bounds[j].first, hi_lim = bounds[j].second;
        double lo = best.x0[j + 1] - 0.5 * width;
        double hi = best.x0[j + 1] + 0.5 * width;
        if (lo < lo_lim) {
          hi = std::min(hi_lim, hi + (lo_lim - lo));
          lo = lo_lim;
        }
        if (hi > hi_lim) {
          lo = std::max(lo_lim, lo - (hi - hi_lim));
          hi = hi_lim;
        }
        box[j] = {lo, hi};
      }
    }
    if (exhaustive)
      detail::full_grid(objective, box, n, best);
    else
      detail::coordinate_descent(objective, box, n, best);
  }

  RegionSummary s;
  s.p = static_cast<int>(p);
  s.r = 1;
  double a = std::numeric_limits<double>::infinity();
  for (const auto& g : generators) a = std::min(a, correlation(g, best.x0, fisher_inv));
  s.a = a > 0.0 ? a : 0.0;
  s.degenerate = !(s.a > 0.0);
  s.x0 = best.x0;
  return s;
}

/// Canonical (p, r, a) for any region.
inline RegionSummary summarize(const Region& region, const SpdMatrix& fisher_inv,
                               const SearchConfig& config = {}) {
  const int p = static_cast<int>(fisher_inv.dim());
  return std::visit(
      [&](const auto& reg) -> RegionSummary {
        using T = std::decay_t<decltype(reg)>;
        if constexpr (std::is_same_v<T, Unrestricted>) {
          RegionSummary s;
          s.p = p;
          s.r = 1;
          s.a = 0.0;
          return s;
        } else if constexpr (std::is_same_v<T, SubspaceCone>) {
          detail::require_full_column_rank(reg.z, fisher_inv);
          RegionSummary s;
          s.p = p;
          s.r = static_cast<int>(reg.z.cols());
          s.a = reg.a;
          return s;
        } else if constexpr (std::is_same_v<T, IntervalCone>) {
          return cone_from_interval(reg.lower, reg.upper, fisher_inv);
        } else {
          if (reg.center) {
            RegionSummary s;
            s.p = p;
            s.r = 1;
            double a = std::numeric_limits<double>::infinity();
            for (const auto& g : reg.generators)
              a = std::min(a, correlation(g, *reg.center, fisher_inv));
            s.a = a > 0.0 ? a : 0.0;
            s.degenerate = !(s.a > 0.0);
            s.x0 = reg.center;
            return s;
          }
          Bounds box = reg.bounds;
          if (box.empty()) {
            for (std::size_t j = 1; j < static_cast<std::size_t>(p); ++j) {
              double lo = std::numeric_limits<double>::infinity(), hi = -lo;
              for (const auto& g : reg.generators) {
                if (g[0] <= 0.0)
                  throw ValidationError(
                      "convex hull: center search needs generators with a positive "
                      "leading coordinate or explicit bounds");
                lo = std::min(lo, g[j] / g[0]);
                hi = std::max(hi, g[j] / g[0]);
              }
              box.emplace_back(lo, hi);
            }
          }
          return best_center_search(reg.generators, fisher_inv, box, config);
        }
      },
      region);
}

/// Region membership.
inline bool contains(const Region& region, std::span<const double> x,
                     const SpdMatrix& fisher_inv) {
  if (x.size() != fisher_inv.dim()) throw ValidationError("contains: dimension mismatch");
  return std::visit(
      [&](const auto& reg) -> bool {
        using T = std::decay_t<decltype(reg)>;
        if constexpr (std::is_same_v<T, Unrestricted>) {
          return true;
        } else if constexpr (std::is_same_v<T, SubspaceCone>) {
          detail::require_full_column_rank(reg.z, fisher_inv);
          const auto [num, den] = detail::projection_terms(x, reg.z, fisher_inv);
          return num >= reg.a * reg.a * den * (1.0 - 1e-12);
        } else if constexpr (std::is_same_v<T, IntervalCone>) {
          if (x.size() != 2) throw ValidationError("contains: interval needs p = 2");
          return std::abs(x[0] - 1.0) <= 1e-12 && x[1] >= reg.lower && x[1] <= reg.upper;
        } else {
          // Feasibility of x = sum_i lambda_i g_i, lambda >= 0, sum lambda = 1,
          // via NNLS on the system augmented with a weighted sum-to-one row.
          const std::size_t p = x.size(), k = reg.generators.size();
          double scale = norm(x);
          for (const auto& g : reg.generators) scale = std::max(scale, norm(g));
          const double w = scale;
          Matrix a(p + 1, k);
          Vector rhs(p + 1);
          for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < p; ++j) a(j, i) = reg.generators[i][j];
            a(p, i) = w;
          }
          for (std::size_t j = 0; j < p; ++j) rhs[j] = x[j];
          rhs[p] = w;
          const Vector lambda = nnls(a, rhs);
          const Vector fit = a * lambda;
          double resid = 0.0;
          for (std::size_t j = 0; j <= p; ++j) resid += (fit[j] - rhs[j]) * (fit[j] - rhs[j]);
          return std::sqrt(resid) <= 1e-9 * scale;
        }
      },
      region);
}

}  // namespace bandcone
