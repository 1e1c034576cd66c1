#pragma once

#include <limits>

#include <Eigen/Dense>

#include "multirecv/rng.hpp"

namespace multirecv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Open interval (lower, upper); either end may be infinite.
struct Interval {
  double lower = -kInf;
  double upper = kInf;

  [[nodiscard]] bool contains(double x) const { return x > lower && x < upper; }
};

double normal_cdf(double x);

// log Phi(x); stays finite and accurate far into the lower tail.
double log_normal_cdf(double x);

double normal_pdf(double x);

// Inverse of the standard normal cdf for p in (0, 1).
double normal_quantile(double p);

// Probability mass of N(0, 1) inside (lower, upper).
double normal_interval_mass(double lower, double upper);

// Draw from N(mu, sigma^2) restricted to bounds. Inverse-cdf when the
// standardized mass is at least kTruncNormalInverseCdfMass, otherwise an
// exact rejection sampler that is stable arbitrarily deep in the tails.
double sample_truncated_normal(double mu, double sigma, const Interval& bounds, Rng& rng);

inline constexpr double kTruncNormalInverseCdfMass = 1e-6;

// Exact draw through the Cholesky factor. Throws NumericalError when the
// covariance is not positive definite.
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, Rng& rng);

// Draw from N(P^{-1} h, P^{-1}) given the precision P and the linear term h,
// without forming the inverse.
Eigen::VectorXd sample_mvn_canonical(const Eigen::VectorXd& linear, const Eigen::MatrixXd& precision,
                                     Rng& rng);

// Density proportional to x^{-alpha-1} exp(-gamma / x).
double sample_inverse_gamma(double alpha, double gamma, Rng& rng);

double log_inverse_gamma_pdf(double x, double alpha, double gamma);

}  // namespace multirecv
