#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "amortss/core/csv.hpp"
#include "amortss/core/errors.hpp"
#include "amortss/core/rng.hpp"
#include "amortss/core/transforms.hpp"
#include "amortss/core/types.hpp"

using namespace amortss;

TEST(Softplus, KnownValues) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(100.0) / 100.0, 1.0, 1e-12);
  // log1p(exp(-100)) = e^-100 to double precision
  const double tiny = softplus(-100.0);
  EXPECT_GT(tiny, 0.0);
  EXPECT_NEAR(tiny / std::exp(-100.0), 1.0, 1e-14);
}

TEST(Sigmoid, KnownValuesAndSymmetry) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(10.0), 1.0 / (1.0 + std::exp(-10.0)), 1e-16);
  EXPECT_NEAR(sigmoid(10.0), 0.9999546, 1e-7);
  EXPECT_NEAR(sigmoid(-10.0), 1.0 - sigmoid(10.0), 1e-16);
}

TEST(Transforms, FiniteOnWideRange) {
  for (double x = -1e6; x <= 1e6; x += 1237.5) {
    EXPECT_TRUE(std::isfinite(softplus(x)));
    EXPECT_TRUE(std::isfinite(sigmoid(x)));
    EXPECT_GE(softplus(x), 0.0);
    EXPECT_GE(sigmoid(x), 0.0);
    EXPECT_LE(sigmoid(x), 1.0);
  }
  EXPECT_TRUE(std::isfinite(softplus(1e6)));
  EXPECT_TRUE(std::isfinite(sigmoid(-1e6)));
}

TEST(LogAbsTransform, Examples) {
  const double c = 1e-30;
  Eigen::VectorXd y(3);
  y << 1.0 - c, 0.0, -(std::exp(1.0) - c);
  const Eigen::VectorXd out = log_abs_transform(y, c);
  EXPECT_NEAR(out(0), 0.0, 1e-15);
  EXPECT_NEAR(out(1), -30.0 * std::log(10.0), 1e-10);
  EXPECT_NEAR(out(2), 1.0, 1e-15);
}

TEST(Standardize, SimpleVector) {
  Eigen::VectorXd x(3);
  x << 1, 2, 3;
  const auto s = standardize(x);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_NEAR(s.std, std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(s.values.mean(), 0.0, 1e-12);
  EXPECT_NEAR(population_std(s.values), 1.0, 1e-12);
  EXPECT_NEAR(s.values(0), -std::sqrt(1.5), 1e-12);
}

TEST(Standardize, ConstantThrows) {
  EXPECT_THROW(standardize(Eigen::VectorXd::Constant(5, 3.0)), ZeroVarianceError);
  EXPECT_THROW(standardize(Eigen::VectorXd::Constant(1, 3.0)), DimensionMismatchError);
}

TEST(Standardize, Idempotent) {
  RngStream rng(7, 0);
  Eigen::VectorXd x(50);
  for (auto& v : x) v = rng.normal(3.0, 5.0);
  const auto once = standardize(x);
  const auto twice = standardize(once.values);
  EXPECT_LT((once.values - twice.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rng, ReproducibleAndStreamsDiffer) {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  int same_c = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a(), y = b(), z = c();
    EXPECT_EQ(x, y);
    same_c += (x == z);
  }
  EXPECT_EQ(same_c, 0);
}

TEST(Rng, DeriveIgnoresConsumption) {
  RngStream a(1, 0);
  const auto child1 = a.derive("batch", 5);
  for (int i = 0; i < 10; ++i) a();
  auto child2 = a.derive("batch", 5);
  auto c1 = child1;
  for (int i = 0; i < 20; ++i) EXPECT_EQ(c1(), child2());
}

TEST(Rng, UniformOpenInterval) {
  RngStream r(3, 1);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(TimeSeries, RejectsNonFinite) {
  Eigen::MatrixXd m(2, 1);
  m << 1.0, std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(TimeSeries{m}, std::invalid_argument);
  EXPECT_THROW(TimeSeries{Eigen::MatrixXd(0, 1)}, std::invalid_argument);
}

TEST(Csv, RoundTripIsExact) {
  RngStream rng(11, 0);
  Eigen::MatrixXd m(20, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal() * std::pow(10.0, rng.uniform(-20, 20));
  const TimeSeries ts(m, {"a", "b", "c"});
  const auto path = std::filesystem::temp_directory_path() / "amortss_csv_roundtrip.csv";
  write_csv(path, ts);
  const TimeSeries back = read_csv(path);
  EXPECT_EQ(back.names(), ts.names());
  EXPECT_TRUE(back.values() == ts.values());
  std::filesystem::remove(path);
}

TEST(Csv, FormatIsLocaleFree) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(parse_double("-1.25e-3"), -1.25e-3);
  EXPECT_THROW(parse_double("1,5"), std::invalid_argument);
}
