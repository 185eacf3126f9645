#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "bandcone/critval.hpp"
#include "bandcone/error.hpp"
#include "bandcone/glm.hpp"
#include "bandcone/regions.hpp"

namespace bandcone {

/// Fitted model, critical value and the region the band is simultaneous over.
struct BandSpec {
  FittedModel model;
  CriticalValue critical;
  Region region;

  BandSpec(FittedModel m, CriticalValue c, Region r)
      : model(std::move(m)), critical(std::move(c)), region(std::move(r)) {
    if (critical.params.p != static_cast<int>(model.dim()))
      throw ValidationError("BandSpec: critical value dimension does not match model");
  }
};

struct BandPoint {
  Vector x;
  double eta_hat = 0.0;
  double se = 0.0;
  double lin_lo = 0.0;
  double lin_hi = 0.0;
  double p_lo = 0.0;
  double p_hi = 0.0;
  /// False when x lies outside the region; the band is still evaluated but
  /// carries no simultaneous guarantee there.
  bool in_region = true;
};

/// x'b_hat -/+ c (x'F^{-1}x)^{1/2}, and its image under the logistic link.
inline BandPoint band_at(std::span<const double> x, const BandSpec& spec) {
  if (x.size() != spec.model.dim()) throw ValidationError("band_at: dimension mismatch");
  BandPoint b;
  b.x.assign(x.begin(), x.end());
  b.eta_hat = dot(x, spec.model.beta_hat);
  b.se = linear_predictor_se(x, spec.model);
  const double half = spec.critical.c * b.se;
  b.lin_lo = b.eta_hat - half;
  b.lin_hi = b.eta_hat + half;
  b.p_lo = logistic(b.lin_lo);
  b.p_hi = logistic(b.lin_hi);
  b.in_region = contains(spec.region, x, spec.model.fisher_inv);
  return b;
}

inline std::vector<BandPoint> band_curve(const BandSpec& spec,
                                         const std::vector<Vector>& grid) {
  if (grid.empty()) throw ValidationError("band_curve: empty grid");
  std::vector<BandPoint> out;
  out.reserve(grid.size());
  for (const auto& x : grid) out.push_back(band_at(x, spec));
  return out;
}

/// Equally spaced points (1, x)' over [lower, upper], endpoints included.
inline std::vector<Vector> interval_grid(double lower, double upper, int points) {
  if (points < 1) throw ValidationError("interval_grid: need at least one point");
  std::vector<Vector> grid;
  for (int i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    grid.push_back({1.0, i == points - 1 && points > 1 ? upper : lower + (upper - lower) * t});
  }
  return grid;
}

/// Tensor grid with `points` per coordinate over a box, leading 1 prepended.
inline std::vector<Vector> box_grid(const Bounds& bounds, int points) {
  if (points < 1) throw ValidationError("box_grid: need at least one point");
  std::vector<Vector> grid{Vector{1.0}};
  for (const auto& [lo, hi] : bounds) {
    std::vector<Vector> next;
    for (const auto& head : grid)
      for (int i = 0; i < points; ++i) {
        Vector v = head;
        const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        v.push_back(i == points - 1 && points > 1 ? hi : lo + (hi - lo) * t);
        next.push_back(std::move(v));
      }
    grid = std::move(next);
  }
  return grid;
}

}  // namespace bandcone
