#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "multirecv/mcmc.hpp"
#include "multirecv/model.hpp"
#include "multirecv/rng.hpp"

namespace multirecv {

// Relative frequency of each observed receiver-set size.
std::map<int, double> stat_t1(const EventDataset& data);

// Fraction of the sender's messages that reach each potential receiver
// (indexed by receiver_row). Throws InvalidArgument when the sender has no
// messages.
Eigen::VectorXd stat_t2(const EventDataset& data, int sender);

// A x A matrix of s -> r message counts.
Eigen::MatrixXi send_counts(const EventDataset& data);

// Transitivity statistics over row-centered send counts. Evaluated exactly
// in integer arithmetic and rounded once. Throw InvalidArgument when A < 3.
double stat_t3(const EventDataset& data);
double stat_t4(const EventDataset& data);

// New receiver sets for the observed senders and covariates, drawn from the
// generative model at one posterior draw. w is redrawn from its prior unless
// reuse_w is set (then draw.W must hold n rows).
EventDataset replicate(const EventDataset& data, const LatentState& draw, bool intercept, double mu_c, Rng& rng,
                       bool reuse_w = false);

struct Quantiles {
  double q025 = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double q975 = 0.0;
};

// Linear-interpolation quantiles of a sample.
Quantiles summarize_quantiles(std::vector<double> sample);

// Two-sided posterior predictive p-value from the mid-rank of the observed
// value among the replicates: 2 min(rank, 1 - rank).
double posterior_predictive_pvalue(double observed, const std::vector<double>& replicates);

struct ScalarCheck {
  double observed = 0.0;
  std::vector<double> replicates;
  Quantiles quantiles;
  double ppp = 1.0;

  [[nodiscard]] bool inside_central_95() const {
    return observed >= quantiles.q025 && observed <= quantiles.q975;
  }
};

struct SizeDistributionCheck {
  std::vector<int> sizes;          // 1..max size seen in data or replicates
  Eigen::VectorXd observed;        // per size
  Eigen::MatrixXd replicates;      // replicate x size
  std::vector<Quantiles> quantiles;
};

struct PopularityCheck {
  int sender = 0;
  Eigen::VectorXd observed;    // per receiver_row
  Eigen::MatrixXd replicates;  // replicate x receiver_row
  std::vector<Quantiles> quantiles;
  std::vector<int> observed_order;  // receiver rows by decreasing observed value
};

struct PpcOptions {
  bool t1 = true;
  bool t2 = true;
  bool t3 = true;
  bool t4 = true;
  std::vector<int> t2_senders;  // empty means every sender with messages
  std::size_t max_replicates = 0;  // 0 uses every retained draw
  bool reuse_w = false;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct PpcReport {
  std::size_t num_replicates = 0;
  std::vector<std::size_t> draw_indices;
  std::optional<SizeDistributionCheck> t1;
  std::vector<PopularityCheck> t2;
  std::optional<ScalarCheck> t3;
  std::optional<ScalarCheck> t4;
};

// One replicate per retained draw (or an evenly spaced subsample), each with
// its own random stream so results do not depend on the thread count.
PpcReport run_ppc(const EventDataset& data, const PosteriorDraws& draws, const PpcOptions& options);

}  // namespace multirecv
