#include "multirecv/summary.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "multirecv/errors.hpp"
#include "multirecv/ppc.hpp"

namespace multirecv {

namespace {

double variance(std::span<const double> x, double mean) {
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

std::string indexed(const char* stem, Eigen::Index i) { return std::string(stem) + "[" + std::to_string(i) + "]"; }

std::string indexed(const char* stem, Eigen::Index i, Eigen::Index j) {
  return std::string(stem) + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
}

}  // namespace

double split_rhat(std::span<const double> draws) {
  const std::size_t half = draws.size() / 2;
  if (half < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto first = draws.first(half);
  const auto second = draws.last(half);
  const double m1 = mean_of(first);
  const double m2 = mean_of(second);
  const double w = 0.5 * (variance(first, m1) + variance(second, m2));
  if (!(w > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(half);
  const double grand = 0.5 * (m1 + m2);
  const double b_over_n = (m1 - grand) * (m1 - grand) + (m2 - grand) * (m2 - grand);
  const double pooled = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(pooled / w);
}

ParameterSummary summarize_parameter(std::string name, std::span<const double> draws) {
  if (draws.empty()) throw InvalidArgument("summarize_parameter: no draws for " + name);
  ParameterSummary s;
  s.name = std::move(name);
  s.mean = mean_of(draws);
  s.sd = draws.size() > 1 ? std::sqrt(variance(draws, s.mean)) : std::numeric_limits<double>::quiet_NaN();
  const Quantiles q = summarize_quantiles(std::vector<double>(draws.begin(), draws.end()));
  s.lower = q.q025;
  s.upper = q.q975;
  s.rhat = split_rhat(draws);
  return s;
}

PosteriorSummary summarize_draws(const PosteriorDraws& draws, const SummaryOptions& options) {
  const std::size_t D = draws.size();
  if (D == 0) throw InvalidArgument("summarize: no retained draws");
  const bool wants_factors = draws.latent_dim > 0 && (options.invariant_factors || options.raw_factors);
  if (wants_factors && draws.U.size() != D) {
    throw InvalidArgument("summarize: latent factors were not stored with these draws");
  }
  if (!options.coefficient_names.empty() &&
      options.coefficient_names.size() != static_cast<std::size_t>(draws.num_coefficients)) {
    throw InvalidArgument("summarize: coefficient_names has the wrong length");
  }

  PosteriorSummary out;
  out.draws = D;
  std::vector<double> col(D);
  auto column = [&](const Eigen::MatrixXd& M, Eigen::Index k) -> std::span<const double> {
    for (std::size_t d = 0; d < D; ++d) col[d] = M(static_cast<Eigen::Index>(d), k);
    return col;
  };

  for (Eigen::Index k = 0; k < draws.beta.cols(); ++k) {
    std::string name = options.coefficient_names.empty() ? indexed("beta", k)
                                                         : options.coefficient_names[static_cast<std::size_t>(k)];
    out.beta.push_back(summarize_parameter(std::move(name), column(draws.beta, k)));
  }
  for (Eigen::Index r = 0; r < draws.b.cols(); ++r) {
    out.b.push_back(summarize_parameter(indexed("b", r), column(draws.b, r)));
  }
  out.sigma_b2 = summarize_parameter("sigma_b2", {draws.sigma_b2.data(), D});
  out.sigma_c2 = summarize_parameter("sigma_c2", {draws.sigma_c2.data(), D});

  double max_rhat = 0.0;
  auto track = [&](const ParameterSummary& s) {
    if (std::isfinite(s.rhat)) max_rhat = std::max(max_rhat, s.rhat);
  };
  for (const auto& s : out.beta) track(s);
  for (const auto& s : out.b) track(s);
  track(out.sigma_b2);
  track(out.sigma_c2);
  out.max_rhat = max_rhat;

  if (draws.latent_dim == 0) return out;
  const Eigen::Index A = draws.num_actors;
  const Eigen::Index Q = draws.latent_dim;

  if (options.invariant_factors) {
    std::vector<Eigen::MatrixXd> uut(D), uv(D);
    for (std::size_t d = 0; d < D; ++d) {
      uut[d] = draws.U[d] * draws.U[d].transpose();
      uv[d] = draws.U[d] * draws.V[d].transpose();
    }
    for (Eigen::Index r = 0; r < A; ++r) {
      for (Eigen::Index q = r; q < A; ++q) {
        for (std::size_t d = 0; d < D; ++d) col[d] = uut[d](r, q);
        out.uut.push_back(summarize_parameter(indexed("UUt", r, q), col));
      }
    }
    for (Eigen::Index r = 0; r < A; ++r) {
      for (Eigen::Index s = 0; s < A; ++s) {
        if (r == s) continue;
        for (std::size_t d = 0; d < D; ++d) col[d] = uv[d](r, s);
        out.uv.push_back(summarize_parameter(indexed("uv", r, s), col));
      }
    }
  }
  if (options.raw_factors) {
    for (Eigen::Index r = 0; r < A; ++r) {
      for (Eigen::Index q = 0; q < Q; ++q) {
        for (std::size_t d = 0; d < D; ++d) col[d] = draws.U[d](r, q);
        out.raw_u.push_back(summarize_parameter(indexed("U", r, q), col));
        for (std::size_t d = 0; d < D; ++d) col[d] = draws.V[d](r, q);
        out.raw_v.push_back(summarize_parameter(indexed("V", r, q), col));
      }
    }
  }
  return out;
}

}  // namespace multirecv
