#pragma once

// Maximum-likelihood logistic regression, P(Y = 1) = 1 / (1 + exp(-x'b)),
// for grouped-binomial or Bernoulli responses.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "bandcone/error.hpp"
#include "bandcone/linalg.hpp"

namespace bandcone {

/// Logistic function, exact in [0, 1] for any finite argument.
inline double logistic(double eta) noexcept {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

/// log(1 + exp(eta)) without overflow.
inline double log1p_exp(double eta) noexcept {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

/// Design matrix (leading column of ones) with binomial responses.
class Dataset {
 public:
  /// Validates: first column all ones, 0 <= successes <= trials, trials >= 1,
  /// n >= p and full column rank.
  Dataset(Matrix design, std::vector<int> successes, std::vector<int> trials)
      : design_(std::move(design)),
        successes_(std::move(successes)),
        trials_(std::move(trials)) {
    const std::size_t n = design_.rows(), p = design_.cols();
    if (p == 0) throw ValidationError("dataset: design has no columns");
    if (successes_.size() != n || trials_.size() != n)
      throw ValidationError("dataset: response length does not match design rows");
    if (n < p) {
      std::ostringstream os;
      os << "dataset: " << n << " rows cannot identify " << p << " coefficients";
      throw ValidationError(os.str());
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (design_(i, 0) != 1.0)
        throw ValidationError("dataset: first design column must be all ones");
      if (trials_[i] < 1) throw ValidationError("dataset: trials must be >= 1");
      if (successes_[i] < 0 || successes_[i] > trials_[i]) {
        std::ostringstream os;
        os << "dataset: row " << i + 1 << " has successes " << successes_[i]
           << " outside [0, " << trials_[i] << "]";
        throw ValidationError(os.str());
      }
      for (std::size_t j = 0; j < p; ++j)
        if (!std::isfinite(design_(i, j)))
          throw ValidationError("dataset: non-finite predictor value");
    }
    check_rank();
  }

  /// Bernoulli responses (trials = 1).
  static Dataset bernoulli(Matrix design, const std::vector<int>& y) {
    return Dataset(std::move(design), y, std::vector<int>(y.size(), 1));
  }

  std::size_t rows() const noexcept { return design_.rows(); }
  std::size_t dim() const noexcept { return design_.cols(); }
  const Matrix& design() const noexcept { return design_; }
  const std::vector<int>& successes() const noexcept { return successes_; }
  const std::vector<int>& trials() const noexcept { return trials_; }

 private:
  void check_rank() const {
    const std::size_t n = design_.rows(), p = design_.cols();
    Vector scale(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t i = 0; i < n; ++i) scale[j] += design_(i, j) * design_(i, j);
      scale[j] = std::sqrt(scale[j]);
      if (scale[j] == 0.0) throw ValidationError("dataset: design has a zero column");
    }
    Matrix gram(p, p);
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += design_(i, a) * design_(i, b);
        gram(a, b) = s / (scale[a] * scale[b]);
      }
    const auto e = jacobi_eigen(gram);
    if (!(e.values.front() > 1e-12 * e.values.back()))
      throw ValidationError("dataset: design matrix is rank deficient");
  }

  Matrix design_;
  std::vector<int> successes_;
  std::vector<int> trials_;
};

struct FittedModel {
  Vector beta_hat;
  SpdMatrix fisher_inv;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  std::vector<double> loglik_trace;  // log-likelihood after each accepted step

  std::size_t dim() const noexcept { return beta_hat.size(); }
};

struct FitOptions {
  int max_iter = 50;
  double tol = 1e-10;        // on the Euclidean norm of the score
  double step_tol = 1e-8;    // on the Newton step, relative to 1 + max|beta_j|
  double beta_bound = 30.0;  // |beta_j| beyond this is treated as divergence
  /// |x_i'b| beyond this at a support point for `saturation_patience`
  /// consecutive iterations, with the score still above tol, is treated as
  /// separation. A single saturated iterate is not enough: with widely spread
  /// predictors Newton passes through such points on the way to a finite MLE.
  double eta_bound = 30.0;
  int saturation_patience = 8;
};

namespace detail {

struct LogisticState {
  double loglik;
  Vector score;
  Matrix information;
};

inline LogisticState logistic_state(const Dataset& d, std::span<const double> beta,
                                    bool need_information) {
  const std::size_t n = d.rows(), p = d.dim();
  const Matrix& x = d.design();
  LogisticState s{0.0, Vector(p, 0.0), need_information ? Matrix(p, p) : Matrix()};
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    const double eta = dot(xi, beta);
    const double m = d.trials()[i];
    const double y = d.successes()[i];
    const double prob = logistic(eta);
    s.loglik += y * eta - m * log1p_exp(eta);
    const double resid = y - m * prob;
    for (std::size_t j = 0; j < p; ++j) s.score[j] += xi[j] * resid;
    if (need_information) {
      const double w = m * prob * (1.0 - prob);
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b <= a; ++b) s.information(a, b) += w * xi[a] * xi[b];
    }
  }
  if (need_information)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a + 1; b < p; ++b) s.information(a, b) = s.information(b, a);
  return s;
}

}  // namespace detail

/// Fisher information X'WX at beta, W = diag(trials * p * (1 - p)).
inline Matrix fisher_information(const Dataset& d, std::span<const double> beta) {
  return detail::logistic_state(d, beta, true).information;
}

/// Newton-Raphson from beta = 0 with step halving whenever the
/// log-likelihood would decrease. Throws NonConvergenceError on divergence
/// (separation) or when max_iter is reached.
inline FittedModel fit_logistic(const Dataset& data, const FitOptions& opt = {}) {
  const std::size_t p = data.dim();
  Vector beta(p, 0.0);
  auto state = detail::logistic_state(data, beta, true);
  std::vector<double> trace{state.loglik};
  int iter = 0;
  int saturated_run = 0;

  for (;; ++iter) {
    const double gnorm = norm(state.score);
    Vector step;
    try {
      step = cholesky_solve(cholesky(state.information), state.score);
    } catch (const DecompositionError&) {
      throw NonConvergenceError("fit_logistic: information matrix became singular",
                                iter);
    }
    // Under separation the score vanishes while the Newton step does not, so
    // a small score alone is not convergence.
    if (gnorm <= opt.tol && max_abs(step) <= opt.step_tol * (1.0 + max_abs(beta))) break;
    std::size_t saturated_row = data.rows();
    for (std::size_t i = 0; i < data.rows() && saturated_row == data.rows(); ++i)
      if (std::abs(dot(data.design().row(i), beta)) > opt.eta_bound) saturated_row = i;
    saturated_run = saturated_row == data.rows() ? 0 : saturated_run + 1;
    if (saturated_run >= opt.saturation_patience) {
      std::ostringstream os;
      os << "fit_logistic: fitted probabilities saturated at row " << saturated_row + 1
         << " (data appear separated)";
      throw NonConvergenceError(os.str(), iter);
    }
    if (iter >= opt.max_iter) {
      std::ostringstream os;
      os << "fit_logistic: no convergence after " << iter
         << " iterations (score norm " << gnorm << ")";
      throw NonConvergenceError(os.str(), iter);
    }
    double t = 1.0;
    bool accepted = false;
    const double slack = 1e-13 * std::max(1.0, std::abs(state.loglik));
    for (int half = 0; half < 60; ++half, t *= 0.5) {
      Vector trial = beta;
      for (std::size_t j = 0; j < p; ++j) trial[j] += t * step[j];
      const double ll = detail::logistic_state(data, trial, false).loglik;
      if (std::isfinite(ll) && ll >= state.loglik - slack) {
        beta = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw NonConvergenceError("fit_logistic: step halving failed to increase the likelihood",
                                iter);

    for (double b : beta)
      if (std::abs(b) > opt.beta_bound) {
        std::ostringstream os;
        os << "fit_logistic: coefficient magnitude exceeded " << opt.beta_bound
           << " (data appear separated)";
        throw NonConvergenceError(os.str(), iter + 1);
      }
    state = detail::logistic_state(data, beta, true);
    trace.push_back(state.loglik);
  }

  SpdMatrix info(state.information);
  return FittedModel{beta, spd_invert(info), iter, norm(state.score), true,
                     std::move(trace)};
}

/// Standard error of the linear predictor, (x' F^{-1} x)^{1/2}.
inline double linear_predictor_se(std::span<const double> x, const FittedModel& model) {
  if (x.size() != model.dim())
    throw ValidationError("linear_predictor_se: dimension mismatch");
  return std::sqrt(std::max(0.0, model.fisher_inv.quad(x)));
}

}  // namespace bandcone
