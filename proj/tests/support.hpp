#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "multirecv/model.hpp"

namespace testing {

// Independent reference cdf.
inline double phi_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<double>(), x); }
inline double phi_pdf(double x) { return boost::math::pdf(boost::math::normal_distribution<double>(), x); }

// Two-sided one-sample Kolmogorov-Smirnov p-value, asymptotic distribution
// with the Stephens small-sample correction.
inline double ks_pvalue(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

inline Moments moments(const std::vector<double>& x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(x.size() - 1);
  return m;
}

// Hand-built message with explicit covariates.
inline multirecv::Message message(int sender, std::vector<int> receivers, Eigen::MatrixXd covariates,
                                  std::optional<double> timestamp = std::nullopt) {
  multirecv::Message m;
  m.sender = sender;
  m.receivers = std::move(receivers);
  m.covariates = std::move(covariates);
  m.timestamp = timestamp;
  return m;
}

}  // namespace testing
