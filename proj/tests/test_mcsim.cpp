#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "bandcone/error.hpp"
#include "bandcone/mcsim.hpp"
#include "support.hpp"

using namespace bandcone;

namespace {

// Independent dense-grid supremum of |x'(b - b_hat)| / se(x) over [l, u].
double sup_oracle(const Beta2& b, const FittedModel& fit, double l, double u, int points) {
  double best = 0.0;
  for (int i = 0; i <= points; ++i) {
    const double x = l + (u - l) * i / points;
    const double d = (b[0] - fit.beta_hat[0]) + (b[1] - fit.beta_hat[1]) * x;
    const double v = fit.fisher_inv(0, 0) + 2 * x * fit.fisher_inv(0, 1) + x * x * fit.fisher_inv(1, 1);
    best = std::max(best, std::abs(d) / std::sqrt(v));
  }
  return best;
}

}  // namespace

TEST(InvertLogitEndpoint, PublishedIntervals) {
  const auto t41 = testkit::published().at("table_4_1");
  const auto probs = t41.at("probabilities");
  for (const auto& row : t41.at("rows")) {
    const auto bv = row.at("beta").get<std::vector<double>>();
    const Beta2 beta{bv[0], bv[1]};
    for (const char* cls : {"narrow", "wide", "unrestricted"}) {
      const auto pr = probs.at(cls).get<std::vector<double>>();
      double lo = invert_logit_endpoint(pr[0], beta), hi = invert_logit_endpoint(pr[1], beta);
      if (lo > hi) std::swap(lo, hi);
      auto expected = row.at(cls).get<std::vector<double>>();
      // Printed as -.039; (logit(.9) - 2) / 5 = +.0394, and the printed
      // lower endpoint -.839 only fits the positive sign.
      if (bv == std::vector<double>{2, 5} && std::string(cls) == "wide") {
        EXPECT_NEAR(expected[1], -0.039, 1e-12);
        expected[1] = -expected[1];
      }
      EXPECT_NEAR(lo, expected[0], 1e-3) << cls << " " << bv[0] << "," << bv[1];
      EXPECT_NEAR(hi, expected[1], 1e-3) << cls << " " << bv[0] << "," << bv[1];
    }
  }
}

TEST(InvertLogitEndpoint, Examples) {
  EXPECT_NEAR(invert_logit_endpoint(0.5, {0.0, 1.5}), 0.0, 1e-15);
  EXPECT_NEAR(invert_logit_endpoint(0.1, {0.0, 1.5}), -1.465, 1e-3);
  EXPECT_NEAR(logistic(-2.0 + 0.3 * invert_logit_endpoint(0.3, {-2.0, 0.3})), 0.3, 1e-14);
  EXPECT_THROW(invert_logit_endpoint(0.5, {1.0, 0.0}), DomainError);
  EXPECT_THROW(invert_logit_endpoint(1.0, {1.0, 1.0}), DomainError);
}

TEST(GenerateDataset, Endpoints) {
  const Dataset d = generate_dataset({0.0, 1.0}, -2.0, 3.0, 2, 5);
  EXPECT_EQ(d.design()(0, 1), -2.0);
  EXPECT_EQ(d.design()(1, 1), 3.0);
  const Dataset e = generate_dataset({0.0, 1.0}, -1.0, 1.0, 11, 5);
  for (std::size_t i = 0; i < e.rows(); ++i)
    EXPECT_NEAR(e.design()(i, 1), -1.0 + 0.2 * static_cast<double>(i), 1e-15);
}

TEST(GenerateDataset, SaturatedProbability) {
  const Dataset d = generate_dataset({50.0, 0.0}, 0.0, 1.0, 30, 6);
  for (int s : d.successes()) EXPECT_EQ(s, 1);
}

TEST(GenerateDataset, LawOfLargeNumbers) {
  const double p = logistic(0.4);
  const Dataset d = generate_dataset({0.4, 0.0}, 0.0, 1.0, 100000, 7);
  double mean = 0.0;
  for (int s : d.successes()) mean += s;
  mean /= 100000.0;
  EXPECT_LE(std::abs(mean - p), 3.0 * std::sqrt(p * (1 - p) / 100000.0));
}

TEST(GenerateDataset, SignConventionMatchesModel) {
  // Increasing response for positive slope.
  const Dataset d = generate_dataset({0.0, 3.0}, -3.0, 3.0, 2000, 8);
  int low = 0, high = 0;
  for (std::size_t i = 0; i < 1000; ++i) low += d.successes()[i];
  for (std::size_t i = 1000; i < 2000; ++i) high += d.successes()[i];
  EXPECT_GT(high, 3 * low);
}

TEST(Covers, Trivial) {
  const FittedModel fit = fit_logistic(generate_dataset({0.0, 1.5}, -1.465, 1.465, 100, 9));
  const Beta2 at_hat{fit.beta_hat[0], fit.beta_hat[1]};
  EXPECT_TRUE(covers(at_hat, fit, -1.0, 1.0, 1e-9));
  EXPECT_EQ(sup_statistic(at_hat, fit, -1.0, 1.0), 0.0);
  EXPECT_FALSE(covers({0.0, 1.5}, fit, -1.0, 1.0, 0.0));
}

TEST(Covers, ExactSupMatchesDenseGrid) {
  testkit::Gen gen(81);
  int compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Beta2 beta{gen.uniform(-2, 2), gen.uniform(-3, 3)};
    if (std::abs(beta[1]) < 0.2) continue;
    double l = invert_logit_endpoint(gen.uniform(0.05, 0.4), beta);
    double u = invert_logit_endpoint(gen.uniform(0.6, 0.95), beta);
    if (l > u) std::swap(l, u);
    std::optional<FittedModel> fit;
    try {
      fit = fit_logistic(generate_dataset(beta, l, u, gen.integer(25, 150),
                                          static_cast<std::uint64_t>(trial)));
    } catch (const NonConvergenceError&) {
      continue;
    }
    ++compared;
    const double exact = sup_statistic(beta, *fit, l, u);
    const double dense = sup_oracle(beta, *fit, l, u, 20000);
    EXPECT_GE(exact, dense - 1e-12);
    EXPECT_LE(exact, dense * (1 + 1e-6) + 1e-12);

    const double c = critical_value(0.05, cone_from_interval(l, u, fit->fisher_inv)).c;
    EXPECT_EQ(covers(beta, *fit, l, u, c), covers_grid(beta, *fit, l, u, c))
        << "exact " << exact << " grid " << sup_statistic_grid(beta, *fit, l, u) << " c " << c;
  }
  EXPECT_GT(compared, 900);
}

TEST(SimulateCell, SingleReplicationReproducible) {
  const SimulationCell cell{{-2.0, 0.3}, 3.842, 9.491, 25, 0.05, 1, 12345};
  const CoverageReport a = simulate_cell(cell), b = simulate_cell(cell);
  EXPECT_TRUE(a.error_estimate == 0.0 || a.error_estimate == 1.0);
  EXPECT_EQ(a.error_estimate, b.error_estimate);
  EXPECT_EQ(a.n_regenerated, b.n_regenerated);
}

TEST(SimulateCell, DeterministicAcrossWorkers) {
  const SimulationCell cell{{0.0, 1.5}, -1.465, 1.465, 25, 0.05, 200, 777};
  const CoverageReport one = simulate_cell(cell, 1);
  for (int w : {2, 3, 7}) {
    const CoverageReport many = simulate_cell(cell, w);
    EXPECT_EQ(one.error_estimate, many.error_estimate);
    EXPECT_EQ(one.n_regenerated, many.n_regenerated);
  }
  const CoverageReport grid = simulate_cell(cell, 2, CoverageCheck::grid);
  EXPECT_EQ(grid.error_estimate, one.error_estimate);
}

TEST(SimulateCell, ReportFields) {
  const SimulationCell cell{{2.0, 5.0}, -0.569, -0.231, 50, 0.10, 300, 99};
  const CoverageReport r = simulate_cell(cell);
  EXPECT_GE(r.error_estimate, 0.0);
  EXPECT_LE(r.error_estimate, 1.0);
  EXPECT_DOUBLE_EQ(r.std_error, std::sqrt(r.error_estimate * (1 - r.error_estimate) / 300));
  EXPECT_EQ(r.n_converged, 300);
  EXPECT_EQ(r.cell.seed, 99u);
}

TEST(SimulateCell, SeparationIsRegenerated) {
  // Steep response over a wide interval: most small samples separate.
  const SimulationCell cell{{0.0, 8.0}, -1.5, 1.5, 10, 0.05, 20, 5};
  const CoverageReport r = simulate_cell(cell);
  EXPECT_GT(r.n_regenerated, 0);
  EXPECT_EQ(r.n_converged, 20);
}

TEST(SimulateCell, SmallSampleConservative) {
  const SimulationCell cell{{-2.0, 0.3}, 3.842, 9.491, 25, 0.01, 1000, 2024};
  const CoverageReport r = simulate_cell(cell);
  EXPECT_LE(r.error_estimate, 0.01 + 3 * std::sqrt(0.01 * 0.99 / 1000));
}

TEST(SimulationCell, Validation) {
  EXPECT_THROW((SimulationCell{{0, 1}, 1.0, 0.0, 25, 0.05, 10, 1}.validate()), ValidationError);
  EXPECT_THROW((SimulationCell{{0, 1}, 0.0, 1.0, 9, 0.05, 10, 1}.validate()), ValidationError);
  EXPECT_THROW((SimulationCell{{0, 1}, 0.0, 1.0, 25, 0.05, 0, 1}.validate()), ValidationError);
  EXPECT_THROW((SimulationCell{{0, 1}, 0.0, 1.0, 25, 1.5, 10, 1}.validate()), ValidationError);
}
