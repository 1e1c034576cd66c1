#include <cmath>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "doctest.h"
#include "multirecv/errors.hpp"
#include "multirecv/numerics.hpp"
#include "support.hpp"

using namespace multirecv;
using testing::phi_cdf;
using testing::phi_pdf;

namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

// 50-digit log Phi(x).
double log_phi_reference(double x) {
  const Big v = boost::math::erfc(-Big(x) / boost::multiprecision::sqrt(Big(2))) / 2;
  return static_cast<double>(boost::multiprecision::log(v));
}

double phi_reference(double x) {
  return static_cast<double>(boost::math::erfc(-Big(x) / boost::multiprecision::sqrt(Big(2))) / 2);
}

double truncated_mean(double mu, double sigma, double lo, double hi) {
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  const double mass = phi_cdf(b) - phi_cdf(a);
  return mu + sigma * (phi_pdf(a) - phi_pdf(b)) / mass;
}

// cdf of N(0,1) truncated to (a, b), evaluated on whichever tail keeps precision.
double truncated_cdf(double x, double a, double b) {
  boost::math::normal_distribution<double> nd;
  if (a >= 0.0) {
    const double qa = boost::math::cdf(boost::math::complement(nd, a));
    const double qb = std::isinf(b) ? 0.0 : boost::math::cdf(boost::math::complement(nd, b));
    const double qx = boost::math::cdf(boost::math::complement(nd, x));
    return (qa - qx) / (qa - qb);
  }
  const double pa = std::isinf(a) ? 0.0 : phi_cdf(a);
  return (phi_cdf(x) - pa) / (phi_cdf(b) - pa);
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("normal cdf reference values") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.25) == doctest::Approx(0.8943502263331446).epsilon(1e-14));
  CHECK(normal_cdf(-0.75) == doctest::Approx(0.2266273523768682).epsilon(1e-14));
}

TEST_CASE("normal cdf holds 12 significant digits on |x| <= 8") {
  for (double x = -8.0; x <= 8.0; x += 0.0625) {
    const double ref = phi_reference(x);
    CHECK(std::abs(normal_cdf(x) - ref) <= 1e-12 * ref);
  }
}

TEST_CASE("log cdf is accurate deep into the lower tail") {
  for (double x = -45.0; x <= 10.0; x += 0.25) {
    const double ref = log_phi_reference(x);
    INFO("x = " << x);
    CHECK(std::abs(log_normal_cdf(x) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)) + 1e-300);
  }
  CHECK(std::isfinite(log_normal_cdf(-1e4)));
  CHECK(log_normal_cdf(40.0) == 0.0);
}

TEST_CASE("log cdf differences reproduce cdf ratios") {
  for (double x = -6.0; x <= 6.0; x += 0.5) {
    for (double y = -6.0; y <= 6.0; y += 0.75) {
      const double direct = std::log(phi_reference(x) / phi_reference(y));
      CHECK(log_normal_cdf(x) - log_normal_cdf(y) == doctest::Approx(direct).epsilon(1e-10));
    }
  }
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.8, 0.999}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("untruncated draws match the normal mean") {
  Rng rng(11);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_truncated_normal(1.5, 2.0, Interval{}, rng);
  CHECK(std::abs(sum / n - 1.5) < 4.0 * 2.0 / std::sqrt(n));
}

TEST_CASE("half-normal mean") {
  Rng rng(12);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_truncated_normal(0.0, 1.0, Interval{0.0, kInf}, rng);
  CHECK(std::abs(sum / n - std::sqrt(2.0 / M_PI)) < 0.01);
}

TEST_CASE("two-sided truncation mean") {
  Rng rng(13);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_truncated_normal(0.0, 1.0, Interval{-0.5, 0.2}, rng);
  CHECK(std::abs(sum / n - truncated_mean(0.0, 1.0, -0.5, 0.2)) < 0.01);
}

TEST_CASE("truncated normal passes KS tests and respects bounds") {
  struct Case {
    double lo, hi;
  };
  const std::vector<Case> cases{{-0.5, 0.2}, {0.0, kInf}, {-kInf, 1.0}, {5.0, kInf},  {-kInf, -5.0},
                                {8.0, 8.01}, {12.0, 30.0}, {-1e-3, 1e-3}, {2.0, 2.5}, {-kInf, -30.0}};
  Rng rng(14);
  for (const auto& c : cases) {
    std::vector<double> draws(100000);
    bool inside = true;
    for (auto& d : draws) {
      d = sample_truncated_normal(0.0, 1.0, Interval{c.lo, c.hi}, rng);
      inside = inside && d > c.lo && d < c.hi;
    }
    INFO("bounds (" << c.lo << ", " << c.hi << ")");
    CHECK(inside);
    if (c.lo == -kInf && c.hi == -30.0) continue;  // reference cdf underflows
    const double p = testing::ks_pvalue(draws, [&](double x) { return truncated_cdf(x, c.lo, c.hi); });
    CHECK(p > 0.001);
  }
}

TEST_CASE("truncated normal scales with mu and sigma") {
  Rng rng(15);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_truncated_normal(2.0, 0.4, Interval{2.5, 3.0}, rng);
  CHECK(std::abs(sum / n - truncated_mean(2.0, 0.4, 2.5, 3.0)) < 0.005);
}

TEST_CASE("invalid truncation bounds") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_truncated_normal(0.0, 1.0, Interval{1.0, 1.0}, rng), InvalidArgument);
  CHECK_THROWS_AS(sample_truncated_normal(0.0, 1.0, Interval{2.0, -1.0}, rng), InvalidArgument);
}

TEST_CASE("multivariate normal covariance") {
  Rng rng(16);
  Eigen::MatrixXd S(2, 2);
  S << 2, -1, -1, 2;
  const Eigen::VectorXd mu = Eigen::Vector2d(1.0, -2.0);
  const int n = 1000000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  Eigen::Matrix2d sq = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d x = sample_mvn(mu, S, rng);
    sum += x;
    sq += (x - mu) * (x - mu).transpose();
  }
  CHECK((sum / n - mu).cwiseAbs().maxCoeff() < 0.01);
  CHECK((sq / n - S).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("multivariate normal errors and determinism") {
  Rng rng(1);
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(sample_mvn(Eigen::VectorXd::Zero(2), bad, rng), NumericalError);
  Rng a(5), b(5);
  const Eigen::VectorXd x = sample_mvn(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3), a);
  const Eigen::VectorXd y = sample_mvn(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3), b);
  CHECK(x == y);
}

TEST_CASE("canonical multivariate normal moments") {
  Rng rng(17);
  Eigen::MatrixXd P(2, 2);
  P << 3, 1, 1, 2;
  const Eigen::VectorXd h = Eigen::Vector2d(1.0, -1.0);
  const Eigen::VectorXd mean = P.inverse() * h;
  const Eigen::MatrixXd cov = P.inverse();
  const int n = 400000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  Eigen::Matrix2d sq = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d x = sample_mvn_canonical(h, P, rng);
    sum += x;
    sq += (x - mean) * (x - mean).transpose();
  }
  CHECK((sum / n - mean).cwiseAbs().maxCoeff() < 0.005);
  CHECK((sq / n - cov).cwiseAbs().maxCoeff() < 0.005);
}

TEST_CASE("inverse gamma means") {
  Rng rng(18);
  const int n = 1000000;
  double s1 = 0.0, s2 = 0.0;
  bool positive = true;
  for (int i = 0; i < n; ++i) {
    const double a = sample_inverse_gamma(20.0, 3.0, rng);
    const double b = sample_inverse_gamma(2.0, 2.0, rng);
    positive = positive && a > 0.0 && b > 0.0;
    s1 += a;
    s2 += b;
  }
  CHECK(positive);
  CHECK(std::abs(s1 / n - 3.0 / 19.0) < 0.005);
  CHECK(std::abs(s2 / n - 2.0) < 0.05);
}

TEST_CASE("inverse gamma KS test") {
  Rng rng(19);
  for (auto [alpha, gamma] : {std::pair{3.0, 2.0}, std::pair{20.0, 3.0}, std::pair{0.5, 1.0}}) {
    std::vector<double> draws(100000);
    for (auto& d : draws) d = sample_inverse_gamma(alpha, gamma, rng);
    const double a = alpha, g = gamma;
    CHECK(testing::ks_pvalue(draws, [&](double x) { return boost::math::gamma_q(a, g / x); }) > 0.001);
  }
}

TEST_CASE("inverse gamma rejects bad parameters") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_inverse_gamma(0.0, 1.0, rng), InvalidArgument);
  CHECK_THROWS_AS(sample_inverse_gamma(1.0, -1.0, rng), InvalidArgument);
}

TEST_CASE("inverse gamma log density integrates against the reference") {
  const double x = 0.7, a = 3.0, g = 2.0;
  const double ref = a * std::log(g) - std::lgamma(a) - (a + 1.0) * std::log(x) - g / x;
  CHECK(log_inverse_gamma_pdf(x, a, g) == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a(42), b(42);
  CHECK(a.uniform() == b.uniform());
  Rng s1 = a.split(1), s2 = a.split(2), s1b = b.split(1);
  const double x = s1.normal();
  CHECK(x == s1b.normal());
  CHECK(x != s2.normal());
}

}
