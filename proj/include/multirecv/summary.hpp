#pragma once

#include <span>
#include <string>
#include <vector>

#include "multirecv/mcmc.hpp"

namespace multirecv {

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;  // 2.5% quantile
  double upper = 0.0;  // 97.5% quantile
  double rhat = 0.0;   // split R-hat, NaN when undefined
};

ParameterSummary summarize_parameter(std::string name, std::span<const double> draws);

// Potential scale reduction from the two halves of a single chain. NaN for
// fewer than four draws or zero within-half variance.
double split_rhat(std::span<const double> draws);

struct SummaryOptions {
  bool invariant_factors = true;  // UU' entries and u_r'v_s
  bool raw_factors = false;       // per-coordinate U and V; rotation dependent
  std::vector<std::string> coefficient_names;  // defaults to beta[k]
};

struct PosteriorSummary {
  std::size_t draws = 0;
  std::vector<ParameterSummary> beta;  // empty for a model without coefficients
  std::vector<ParameterSummary> b;
  ParameterSummary sigma_b2;
  ParameterSummary sigma_c2;
  std::vector<ParameterSummary> uut;  // UUt[r,q] for r <= q
  std::vector<ParameterSummary> uv;   // uv[r,s] = u_r'v_s for r != s
  std::vector<ParameterSummary> raw_u;
  std::vector<ParameterSummary> raw_v;
  double max_rhat = 0.0;  // over beta, b and the variances
};

// Throws InvalidArgument with no retained draws, or when factor summaries are
// requested from draws stored without factors.
PosteriorSummary summarize_draws(const PosteriorDraws& draws, const SummaryOptions& options = {});

}  // namespace multirecv
