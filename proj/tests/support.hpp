#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "bandcone/linalg.hpp"

namespace testkit {

using bandcone::Matrix;
using bandcone::SpdMatrix;
using bandcone::Vector;

/// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }

  Vector vector(std::size_t n, double lo = -1.0, double hi = 1.0) {
    Vector v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

  Matrix matrix(std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  /// A A' + shift I with eigenvalue spread controlled by `shift`.
  SpdMatrix spd(std::size_t n, double shift = 0.5) {
    const Matrix a = matrix(n, n);
    Matrix m = a * a.transpose();
    for (std::size_t i = 0; i < n; ++i) m(i, i) += shift;
    return SpdMatrix(m);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline nlohmann::json published() {
  std::ifstream in(std::string(BANDCONE_DATA_DIR) + "/published.json");
  return nlohmann::json::parse(in);
}

inline std::string data_path(const std::string& name) {
  return std::string(BANDCONE_DATA_DIR) + "/" + name;
}

inline Matrix matrix_of(const nlohmann::json& j) {
  Matrix m(j.size(), j.front().size());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t c = 0; c < m.cols(); ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

/// Composite Simpson rule with n (even) panels; independent of the library
/// integrator.
template <class F>
double simpson(F&& f, double lo, double hi, int n = 2000) {
  if (n % 2) ++n;
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

}  // namespace testkit
