#pragma once

#include <cmath>
#include <limits>
#include <sstream>

#include "bandcone/error.hpp"

namespace bandcone {

struct RootBracket {
  double lo;
  double hi;
  double tol;  // absolute width of the final bracket
};

/// Brent's method (inverse quadratic interpolation with bisection fallback).
///
/// Requires f(lo) and f(hi) of opposite sign (or one of them zero).
template <class F>
double brent_root(F&& f, RootBracket bracket, int max_iter = 300) {
  if (!(bracket.lo < bracket.hi))
    throw DomainError("brent_root: bracket requires lo < hi");
  if (!(bracket.tol > 0.0)) throw DomainError("brent_root: tol must be > 0");

  double a = bracket.lo, b = bracket.hi;
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) {
    std::ostringstream os;
    os << "brent_root: no sign change on [" << a << ", " << b << "] (f = " << fa
       << ", " << fb << ")";
    throw BracketError(os.str(), fa, fb);
  }

  constexpr double eps = std::numeric_limits<double>::epsilon();
  double c = b, fc = fb, d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * eps * std::abs(b) + 0.5 * bracket.tol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
      const double min2 = std::abs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : std::copysign(tol1, xm);
    fb = f(b);
  }
  throw NumericalError("brent_root: iteration limit reached");
}

}  // namespace bandcone
