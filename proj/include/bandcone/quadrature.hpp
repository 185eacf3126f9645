#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "bandcone/error.hpp"

namespace bandcone {

struct QuadratureSpec {
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  int max_subdivisions = 60;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int subdivisions = 0;
};

namespace detail {

struct GkSegment {
  double lo, hi, value, error;
  bool operator<(const GkSegment& o) const { return error < o.error; }
};

// 15-point Kronrod rule with the embedded 7-point Gauss rule. Error
// estimate follows QUADPACK's qk15.
template <class F>
GkSegment gauss_kronrod15(F& f, double lo, double hi) {
  static constexpr double xgk[8] = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr double wgk[8] = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double wg[4] = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double resg = fc * wg[3];
  double resk = fc * wgk[7];
  double resabs = std::abs(resk);
  double fv1[7], fv2[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * xgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv1[j] = f1;
    fv2[j] = f2;
    resk += wgk[j] * (f1 + f2);
    resabs += wgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) resg += wg[j / 2] * (f1 + f2);
  }
  const double reskh = 0.5 * resk;
  double resasc = wgk[7] * std::abs(fc - reskh);
  for (int j = 0; j < 7; ++j)
    resasc += wgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));

  const double ah = std::abs(half);
  const double value = resk * half;
  resabs *= ah;
  resasc *= ah;
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
    err = std::max(err, 50.0 * eps * resabs);
  return {lo, hi, value, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration: the segment with the largest
/// error estimate is bisected until the total error meets the tolerance.
/// Throws QuadratureError (with the best estimate) when max_subdivisions
/// bisections do not suffice.
template <class F>
QuadratureResult adaptive_integrate(F&& f, double lo, double hi,
                                    const QuadratureSpec& spec = {}) {
  if (!(spec.abs_tol > 0.0) || !(spec.rel_tol > 0.0) || spec.max_subdivisions < 1)
    throw DomainError("adaptive_integrate: invalid QuadratureSpec");
  if (!(lo <= hi)) throw DomainError("adaptive_integrate: requires lo <= hi");
  if (lo == hi) return {};

  std::priority_queue<detail::GkSegment> heap;
  const auto first = detail::gauss_kronrod15(f, lo, hi);
  heap.push(first);
  double total = first.value;
  double error = first.error;
  int splits = 0;

  auto done = [&] {
    return error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(total));
  };
  while (!done()) {
    if (splits >= spec.max_subdivisions) {
      std::ostringstream os;
      os << "adaptive_integrate: no convergence on [" << lo << ", " << hi
         << "] after " << splits << " subdivisions (error estimate " << error
         << ")";
      throw QuadratureError(os.str(), total, error);
    }
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    const auto left = detail::gauss_kronrod15(f, worst.lo, mid);
    const auto right = detail::gauss_kronrod15(f, mid, worst.hi);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++splits;
    if (splits % 16 == 0) {
      // Re-sum to shed accumulated cancellation in the running totals.
      auto copy = heap;
      total = error = 0.0;
      while (!copy.empty()) {
        total += copy.top().value;
        error += copy.top().error;
        copy.pop();
      }
    }
  }
  return {total, error, splits};
}

}  // namespace bandcone
