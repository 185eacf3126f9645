#pragma once

// Small dense linear algebra: row-major matrices, cyclic Jacobi
// eigendecomposition, Cholesky, and the symmetric positive-definite
// wrapper that carries covariance matrices around the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "bandcone/error.hpp"

namespace bandcone {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ValidationError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  /// Builds a matrix whose columns are the given vectors.
  static Matrix from_columns(const std::vector<Vector>& cols) {
    if (cols.empty()) return {};
    Matrix m(cols.front().size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j].size() != m.rows_) throw ValidationError("ragged columns");
      for (std::size_t i = 0; i < m.rows_; ++i) m(i, j) = cols[j][i];
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  Vector column(std::size_t j) const {
    Vector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline Vector operator*(const Matrix& m, std::span<const double> x) {
  if (m.cols() != x.size()) throw ValidationError("matvec: dimension mismatch");
  Vector y(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) y[i] = dot(m.row(i), x);
  return y;
}
inline Vector operator*(const Matrix& m, const Vector& x) {
  return m * std::span<const double>(x);
}

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ValidationError("matmul: dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

/// x' M y
inline double bilinear(std::span<const double> x, const Matrix& m,
                       std::span<const double> y) {
  if (m.rows() != x.size() || m.cols() != y.size())
    throw ValidationError("bilinear form: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * dot(m.row(i), y);
  return s;
}

/// Largest absolute entrywise difference.
inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      d = std::max(d, std::abs(a(i, j) - b(i, j)));
  return d;
}

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // column j pairs with values[j]
};

/// Cyclic Jacobi rotations on a symmetric matrix.
inline SymmetricEigen jacobi_eigen(const Matrix& input, int max_sweeps = 100) {
  if (!input.square()) throw ValidationError("jacobi_eigen: matrix not square");
  const std::size_t n = input.rows();
  Matrix a = input;
  Matrix v = Matrix::identity(n);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) total += a(i, j) * a(i, j);
  total = std::sqrt(total);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_norm() <= 1e-300 + 1e-17 * total) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

/// Lower-triangular Cholesky factor; throws DecompositionError if the
/// matrix is not numerically positive definite.
inline Matrix cholesky(const Matrix& m) {
  if (!m.square()) throw ValidationError("cholesky: matrix not square");
  const std::size_t n = m.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0))
      throw DecompositionError("cholesky: matrix not positive definite",
                               std::numeric_limits<double>::infinity());
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

/// Solves (L L') x = b given the Cholesky factor L.
inline Vector cholesky_solve(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw ValidationError("cholesky_solve: dimension mismatch");
  Vector y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
    y[i] /= l(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) y[i] -= l(k, i) * y[k];
    y[i] /= l(i, i);
  }
  return y;
}

/// Symmetric positive-definite matrix, validated on construction.
///
/// Symmetry is required to 1e-12 relative to the largest entry (the stored
/// matrix is then exactly symmetrised), and the smallest eigenvalue must
/// exceed 1e-12 times the largest.
class SpdMatrix {
 public:
  static constexpr double kSymmetryTol = 1e-12;
  static constexpr double kEigenRatioTol = 1e-12;

  explicit SpdMatrix(Matrix m) : m_(std::move(m)) {
    if (!m_.square() || m_.rows() == 0)
      throw ValidationError("SpdMatrix: matrix must be square and non-empty");
    const std::size_t n = m_.rows();
    const double scale = m_.max_abs();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        if (std::abs(m_(i, j) - m_(j, i)) > kSymmetryTol * scale) {
          std::ostringstream os;
          os << "SpdMatrix: not symmetric at (" << i << "," << j << ")";
          throw ValidationError(os.str());
        }
        m_(i, j) = m_(j, i) = 0.5 * (m_(i, j) + m_(j, i));
      }
    eigen_ = jacobi_eigen(m_);
    const double lo = eigen_.values.front();
    const double hi = eigen_.values.back();
    if (!(hi > 0.0) || !(lo > kEigenRatioTol * hi)) {
      const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
      std::ostringstream os;
      os << "SpdMatrix: not positive definite (eigenvalue range [" << lo << ", "
         << hi << "])";
      throw DecompositionError(os.str(), cond);
    }
  }
  SpdMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : SpdMatrix(Matrix(rows)) {}

  std::size_t dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const SymmetricEigen& eigen() const noexcept { return eigen_; }
  double condition() const { return eigen_.values.back() / eigen_.values.front(); }

  /// x' M x
  double quad(std::span<const double> x) const { return bilinear(x, m_, x); }
  /// x' M y
  double form(std::span<const double> x, std::span<const double> y) const {
    return bilinear(x, m_, y);
  }

 private:
  Matrix m_;
  SymmetricEigen eigen_;
};

/// Symmetric square root P D^{1/2} P'.
inline SpdMatrix sym_sqrt(const SpdMatrix& m) {
  const auto& e = m.eigen();
  const std::size_t n = m.dim();
  Matrix r(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = std::sqrt(e.values[k]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        r(i, j) += s * e.vectors(i, k) * e.vectors(j, k);
  }
  return SpdMatrix(std::move(r));
}

/// Inverse via Cholesky. Throws DecompositionError (carrying the condition
/// estimate) for numerically singular input.
inline SpdMatrix spd_invert(const SpdMatrix& m) {
  const std::size_t n = m.dim();
  Matrix l;
  try {
    l = cholesky(m.matrix());
  } catch (const DecompositionError&) {
    throw DecompositionError("spd_invert: matrix is singular", m.condition());
  }
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    const Vector col = cholesky_solve(l, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      inv(i, j) = inv(j, i) = 0.5 * (inv(i, j) + inv(j, i));
  return SpdMatrix(std::move(inv));
}

/// Lawson-Hanson non-negative least squares: argmin ||A x - b|| s.t. x >= 0.
inline Vector nnls(const Matrix& a, std::span<const double> b,
                   int max_iter = 500) {
  const std::size_t m = a.rows(), n = a.cols();
  if (b.size() != m) throw ValidationError("nnls: dimension mismatch");
  Vector x(n, 0.0);
  std::vector<bool> passive(n, false);
  const double tol = 1e-12 * std::max(1.0, a.max_abs());

  auto gradient = [&] {
    Vector r(b.begin(), b.end());
    const Vector ax = a * x;
    for (std::size_t i = 0; i < m; ++i) r[i] -= ax[i];
    return a.transpose() * r;
  };
  // Unconstrained least squares on the passive columns (normal equations).
  auto solve_passive = [&] {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < n; ++j)
      if (passive[j]) idx.push_back(j);
    Matrix g(idx.size(), idx.size());
    Vector rhs(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t c = 0; c < idx.size(); ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += a(i, idx[r]) * a(i, idx[c]);
        g(r, c) = s;
      }
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += a(i, idx[r]) * b[i];
      rhs[r] = s;
      g(r, r) += 1e-14 * std::max(1.0, g(r, r));
    }
    Vector z(n, 0.0);
    const Vector sol = cholesky_solve(cholesky(g), rhs);
    for (std::size_t r = 0; r < idx.size(); ++r) z[idx[r]] = sol[r];
    return z;
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    const Vector w = gradient();
    std::size_t best = n;
    double wmax = tol;
    for (std::size_t j = 0; j < n; ++j)
      if (!passive[j] && w[j] > wmax) {
        wmax = w[j];
        best = j;
      }
    if (best == n) break;
    passive[best] = true;
    for (int inner = 0; inner < max_iter; ++inner) {
      Vector z = solve_passive();
      bool feasible = true;
      for (std::size_t j = 0; j < n; ++j)
        if (passive[j] && z[j] <= 0.0) feasible = false;
      if (feasible) {
        x = std::move(z);
        break;
      }
      double step = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        if (passive[j] && z[j] <= 0.0) step = std::min(step, x[j] / (x[j] - z[j]));
      for (std::size_t j = 0; j < n; ++j) {
        x[j] += step * (z[j] - x[j]);
        if (passive[j] && x[j] <= 1e-15) {
          passive[j] = false;
          x[j] = 0.0;
        }
      }
    }
  }
  return x;
}

}  // namespace bandcone
