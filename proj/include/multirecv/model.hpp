#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "multirecv/rng.hpp"

namespace multirecv {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Potential receivers of a message from `sender` are indexed by row
// 0..A-2: ascending actor index with the sender removed.
inline int receiver_actor(int sender, int row) { return row < sender ? row : row + 1; }
inline int receiver_row(int sender, int actor) { return actor < sender ? actor : actor - 1; }

struct Message {
  int sender = 0;
  std::vector<int> receivers;    // actor indices, ascending, unique
  Eigen::MatrixXd covariates;    // (A-1) x K, rows per receiver_row()
  std::optional<double> timestamp;

  friend bool operator==(const Message& a, const Message& b) {
    return a.sender == b.sender && a.receivers == b.receivers && a.timestamp == b.timestamp &&
           a.covariates.rows() == b.covariates.rows() && a.covariates.cols() == b.covariates.cols() &&
           a.covariates == b.covariates;
  }
};

// Validated collection of messages over actors 0..A-1. Immutable after
// construction.
class EventDataset {
 public:
  EventDataset() = default;

  // Throws InvalidArgument when any message breaks the dataset invariants.
  EventDataset(int num_actors, int num_covariates, std::vector<Message> messages);

  [[nodiscard]] int num_actors() const { return num_actors_; }
  [[nodiscard]] int num_covariates() const { return num_covariates_; }
  [[nodiscard]] std::size_t size() const { return messages_.size(); }
  [[nodiscard]] bool empty() const { return messages_.empty(); }
  [[nodiscard]] const std::vector<Message>& messages() const { return messages_; }
  [[nodiscard]] const Message& operator[](std::size_t i) const { return messages_[i]; }

  // 0/1 receiver indicators of message i over the A-1 potential receivers.
  [[nodiscard]] std::vector<unsigned char> indicators(std::size_t i) const;

  // Number of messages sent by each actor.
  [[nodiscard]] std::vector<int> sender_counts() const;

  [[nodiscard]] double mean_receiver_count() const;

  bool operator==(const EventDataset&) const = default;

 private:
  int num_actors_ = 0;
  int num_covariates_ = 0;
  std::vector<Message> messages_;
};

// One full sampler state. Rows of z, W and entries of c follow message order.
struct LatentState {
  Eigen::VectorXd beta;
  Eigen::VectorXd b;
  Eigen::MatrixXd U;  // A x Q receiver factors
  Eigen::MatrixXd V;  // A x Q sender factors
  Eigen::MatrixXd W;  // n x Q message factors
  RowMatrix z;        // n x (A-1) suitability scores
  Eigen::VectorXd c;  // n thresholds
  double sigma_b2 = 1.0;
  double sigma_c2 = 1.0;
};

struct InverseGammaPrior {
  double alpha = 1.0;
  double gamma = 1.0;

  // Mean when it exists, otherwise the mode.
  [[nodiscard]] double center() const { return alpha > 1.0 ? gamma / (alpha - 1.0) : gamma / (alpha + 1.0); }
};

struct BetaPrior {
  enum class Kind { Normal, UnitInformation };
  Kind kind = Kind::Normal;
  // Used by Kind::Normal. An empty mean means zero; an empty covariance
  // means `variance` times the identity.
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double variance = 100.0;
};

struct ModelConfig {
  int latent_dim = 0;
  double mu_c = 0.0;
  // Prepend an all-ones covariate column so the baseline suitability level
  // is a coefficient; popularity effects stay zero-mean.
  bool intercept = true;
  BetaPrior beta_prior;
  InverseGammaPrior sigma_b2_prior{2.0, 1.0};
  InverseGammaPrior sigma_c2_prior{20.0, 3.0};

  void validate() const;
};

// Coefficient count seen by the sampler (covariates plus optional intercept).
inline int fitted_covariates(const EventDataset& data, const ModelConfig& config) {
  return data.num_covariates() + (config.intercept ? 1 : 0);
}

double mean_suitability(const Eigen::VectorXd& beta, const Eigen::VectorXd& x, double b_r,
                        const Eigen::VectorXd& u_r, const Eigen::VectorXd& v_s, const Eigen::VectorXd& w);

// X beta for one message, with the intercept column implied when requested.
Eigen::VectorXd linear_predictor(const Message& message, const Eigen::VectorXd& beta, bool intercept);

// theta over the A-1 potential receivers of one message.
Eigen::VectorXd message_mean(const Message& message, const Eigen::VectorXd& beta, bool intercept,
                             const Eigen::VectorXd& b, const Eigen::MatrixXd& U, const Eigen::VectorXd& v_s,
                             const Eigen::VectorXd& w);

struct SimulatedEvent {
  Eigen::VectorXd z;
  double c = 0.0;
  std::vector<int> receivers;  // actor indices, ascending
};

SimulatedEvent simulate_event(int sender, const Eigen::VectorXd& theta, double mu_c, double sigma_c, Rng& rng);

// Pr(r in R | z) = Phi((z_r - mu_c)/sigma_c) / Phi((z_max - mu_c)/sigma_c).
double inclusion_probability(double z_r, double z_max, double mu_c, double sigma_c);

// I + U U^T for the stacked receiver factors of the potential receivers.
Eigen::MatrixXd marginal_covariance(const Eigen::MatrixXd& U_minus_s);

// Rows of U for every actor except `sender`.
Eigen::MatrixXd drop_row(const Eigen::MatrixXd& M, int row);

struct SimulationDesign {
  int num_actors = 50;
  std::vector<double> beta{0.25, 0.0, 0.25};
  double covariate_correlation = 0.3;
  double mu_b = -4.5;
  double sigma_b2 = 0.25;
  int latent_dim = 1;
  double uv_correlation = 0.7;
  double mu_c = 0.0;
  double sigma_c2 = 0.16;
  double message_rate = 40.0;

  void validate() const;
};

// Generates a dataset and the state that produced it. The returned state's
// beta is the design beta (no intercept); b carries the mean mu_b.
std::pair<EventDataset, LatentState> simulate_dataset(const SimulationDesign& design, Rng& rng);

}  // namespace multirecv
