#include "multirecv/numerics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "multirecv/errors.hpp"

namespace multirecv {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Asymptotic expansion of log Phi(x) for x << 0.
double log_normal_cdf_lower_tail(double x) {
  const double x2inv = 1.0 / (x * x);
  double term = 1.0;
  double series = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -(2.0 * k - 1.0) * x2inv;
    series += term;
  }
  return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

// Standard normal restricted to (a, b) with b > 0.
double sample_standard_truncated(double a, double b, Rng& rng) {
  const double mass = normal_interval_mass(a, b);
  if (mass >= kTruncNormalInverseCdfMass) {
    double x;
    if (a >= 0.0) {
      // Work with upper-tail probabilities so that a deep positive a keeps
      // full relative precision.
      const double pa = normal_cdf(-a);
      const double pb = normal_cdf(-b);
      x = -normal_quantile(pb + rng.uniform() * (pa - pb));
    } else {
      const double pa = normal_cdf(a);
      const double pb = normal_cdf(b);
      x = normal_quantile(pa + rng.uniform() * (pb - pa));
    }
    if (x <= a) x = std::nextafter(a, kInf);
    if (x >= b) x = std::nextafter(b, -kInf);
    return x;
  }

  if (a < 0.0) {
    // Straddles zero with negligible mass, so the interval is tiny and the
    // density is nearly flat on it.
    for (;;) {
      const double x = a + rng.uniform() * (b - a);
      if (rng.uniform() <= std::exp(-0.5 * x * x)) return x;
    }
  }

  const double width = b - a;
  if (width * (2.0 * a + width) < 2.0) {
    for (;;) {
      const double x = a + rng.uniform() * width;
      if (rng.uniform() <= std::exp(-0.5 * (x - a) * (x + a))) return x;
    }
  }

  // Translated exponential proposal with the optimal rate, truncated to the
  // interval width.
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  const double tail_keep = std::isinf(b) ? 1.0 : -std::expm1(-rate * width);
  for (;;) {
    const double x = a - std::log1p(-rng.uniform() * tail_keep) / rate;
    if (!(x > a && x < b)) continue;
    const double d = x - rate;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return x;
  }
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double log_normal_cdf(double x) {
  if (std::isnan(x)) return x;
  if (x > 5.0) return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
  if (x > -35.0) return std::log(0.5 * std::erfc(-x * kInvSqrt2));
  if (std::isinf(x)) return -kInf;
  return log_normal_cdf_lower_tail(x);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw InvalidArgument("normal_quantile: probability outside [0, 1]");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_interval_mass(double lower, double upper) {
  if (upper <= lower) return 0.0;
  if (lower >= 0.0) return normal_cdf(-lower) - normal_cdf(-upper);
  return normal_cdf(upper) - normal_cdf(lower);
}

double sample_truncated_normal(double mu, double sigma, const Interval& bounds, Rng& rng) {
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mu)) {
    throw InvalidArgument("sample_truncated_normal: need finite mu and sigma > 0");
  }
  if (!(bounds.lower < bounds.upper)) {
    std::ostringstream msg;
    msg << "sample_truncated_normal: empty interval (" << bounds.lower << ", " << bounds.upper << ")";
    throw InvalidArgument(msg.str());
  }
  const double a = (bounds.lower - mu) / sigma;
  const double b = (bounds.upper - mu) / sigma;
  double x = (b <= 0.0) ? -sample_standard_truncated(-b, -a, rng) : sample_standard_truncated(a, b, rng);
  double out = mu + sigma * x;
  // Rescaling can round onto a bound.
  if (out <= bounds.lower) out = std::nextafter(bounds.lower, kInf);
  if (out >= bounds.upper) out = std::nextafter(bounds.upper, -kInf);
  return out;
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, Rng& rng) {
  const auto d = mean.size();
  if (covariance.rows() != d || covariance.cols() != d) {
    throw InvalidArgument("sample_mvn: covariance shape does not match mean");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "sample_mvn: covariance of dimension " << d << " is not positive definite (min diagonal "
        << (d > 0 ? covariance.diagonal().minCoeff() : 0.0) << ")";
    throw NumericalError(msg.str());
  }
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
  return mean + llt.matrixL() * z;
}

Eigen::VectorXd sample_mvn_canonical(const Eigen::VectorXd& linear, const Eigen::MatrixXd& precision,
                                     Rng& rng) {
  const auto d = linear.size();
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "sample_mvn_canonical: precision of dimension " << d << " is not positive definite";
    throw NumericalError(msg.str());
  }
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
  Eigen::VectorXd out = llt.solve(linear);
  out += llt.matrixU().solve(z);
  return out;
}

double sample_inverse_gamma(double alpha, double gamma, Rng& rng) {
  if (!(alpha > 0.0) || !(gamma > 0.0)) {
    throw InvalidArgument("sample_inverse_gamma: alpha and gamma must be positive");
  }
  for (;;) {
    const double g = rng.gamma(alpha, gamma);
    if (g > 0.0 && std::isfinite(1.0 / g)) return 1.0 / g;
  }
}

double log_inverse_gamma_pdf(double x, double alpha, double gamma) {
  if (!(x > 0.0)) return -kInf;
  return alpha * std::log(gamma) - std::lgamma(alpha) - (alpha + 1.0) * std::log(x) - gamma / x;
}

}  // namespace multirecv
