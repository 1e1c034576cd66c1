#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "multirecv/model.hpp"
#include "multirecv/numerics.hpp"
#include "multirecv/rng.hpp"

namespace multirecv {

// Block order of one sweep.
inline constexpr std::array<std::string_view, 10> kSweepOrder{"z", "c", "sigma_c2", "location", "beta",
                                                              "b", "sigma_b2", "U", "V", "W"};

struct McmcSettings {
  int iterations = 5000;
  int burn_in = 1000;
  int thin = 1;
  std::uint64_t seed = 1;
  // Initial standard deviation of the log-scale random walk on sigma_c^2.
  double rw_step = 0.3;
  // Robbins-Monro tuning of rw_step, burn-in only.
  bool adapt = true;
  double target_acceptance = 0.44;
  // Joint translation move on (z, c, intercept); needs an intercept.
  bool location_move = true;
  double location_step = 0.1;
  bool store_latent = true;  // U and V per retained draw
  bool store_w = false;      // W per retained draw (n x Q each)
  int threads = 1;
  // Verify y == 1(z > c) after every block (slow).
  bool check_consistency = false;

  void validate() const;
  [[nodiscard]] int retained() const { return (iterations - burn_in) / thin; }
};

struct PosteriorDraws {
  int num_actors = 0;
  int num_coefficients = 0;  // includes the intercept when present
  int latent_dim = 0;
  std::size_t num_messages = 0;
  bool intercept = true;
  double mu_c = 0.0;

  Eigen::MatrixXd beta;  // draws x num_coefficients
  Eigen::MatrixXd b;     // draws x A
  Eigen::VectorXd sigma_b2;
  Eigen::VectorXd sigma_c2;
  // Raw factors; identified only up to a joint rotation and sign.
  std::vector<Eigen::MatrixXd> U;
  std::vector<Eigen::MatrixXd> V;
  std::vector<Eigen::MatrixXd> W;

  double z_acceptance = 0.0;         // post burn-in
  double sigma_c2_acceptance = 0.0;  // post burn-in
  double sigma_c2_step = 0.0;        // random-walk step after adaptation
  double location_acceptance = 0.0;  // post burn-in
  double location_step = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  int burn_in = 0;
  int thin = 1;
  std::string config_echo;  // JSON text of the run configuration
  double wall_seconds = 0.0;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(beta.rows()); }
  [[nodiscard]] bool has_factors() const { return latent_dim == 0 || U.size() == size(); }
  [[nodiscard]] bool has_message_factors() const { return latent_dim == 0 || W.size() == size(); }

  // Parameters of retained draw d. z and c are left empty; W only when stored.
  [[nodiscard]] LatentState snapshot(std::size_t d) const;
};

// N(P^{-1} linear, P^{-1}).
struct GaussianConditional {
  Eigen::VectorXd linear;
  Eigen::MatrixXd precision;

  [[nodiscard]] Eigen::VectorXd mean() const;
  [[nodiscard]] Eigen::MatrixXd covariance() const;
  Eigen::VectorXd sample(Rng& rng) const { return sample_mvn_canonical(linear, precision, rng); }
};

double update_sigma_b2(const Eigen::VectorXd& b, const InverseGammaPrior& prior, Rng& rng);

// (max z over non-receivers, min z over receivers). Throws
// InvariantViolation when the interval is empty.
Interval threshold_interval(std::span<const double> z, std::span<const unsigned char> y);

double update_c(std::span<const double> z, std::span<const unsigned char> y, double mu_c, double sigma_c, Rng& rng);

// min(Phi((old_max - mu_c)/sigma_c) / Phi((new_max - mu_c)/sigma_c), 1).
double z_acceptance_probability(double old_max, double new_max, double mu_c, double sigma_c);

struct ZUpdate {
  bool accepted = false;
  double acceptance = 0.0;
};

// Independence MH step for one message's scores. z is overwritten only when
// the proposal is accepted.
ZUpdate update_z(std::span<const double> theta, std::span<const unsigned char> y, double c, double mu_c,
                 double sigma_c, std::span<double> z, Rng& rng);

// Log of the sigma_c^2 conditional up to a constant: truncated-normal
// threshold densities with their normalizers, times the inverse-gamma prior.
double log_sigma_c2_target(double sigma_c2, std::span<const double> c, std::span<const double> z_max, double mu_c,
                           const InverseGammaPrior& prior);

struct SigmaC2Update {
  double value = 0.0;
  bool accepted = false;
  double log_ratio = 0.0;  // includes the log-scale Jacobian
};

SigmaC2Update update_sigma_c2(std::span<const double> c, std::span<const double> z_max, double current,
                              const InverseGammaPrior& prior, double mu_c, double rw_step, Rng& rng);

// Data augmentation Gibbs sampler over one dataset. Holds the observed
// indicators, the stacked design matrix and the current LatentState.
class GibbsSampler {
 public:
  GibbsSampler(const EventDataset& data, const ModelConfig& config, int threads = 1);

  [[nodiscard]] const LatentState& state() const { return state_; }
  // Replace the state; dimensions are checked, consistency is not.
  void set_state(LatentState state);

  [[nodiscard]] int num_actors() const { return A_; }
  [[nodiscard]] std::size_t num_messages() const { return n_; }
  [[nodiscard]] int num_coefficients() const { return K_; }
  [[nodiscard]] int latent_dim() const { return Q_; }
  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] const Eigen::VectorXd& prior_beta_mean() const { return beta0_; }
  [[nodiscard]] const Eigen::MatrixXd& prior_beta_precision() const { return beta_prior_precision_; }
  // Stacked design, row m*(A-1)+j for potential receiver j of message m.
  [[nodiscard]] const RowMatrix& design() const { return X_; }
  [[nodiscard]] std::span<const unsigned char> indicators(std::size_t m) const;
  [[nodiscard]] int sender(std::size_t m) const { return senders_[m]; }

  // Starting state: beta at its prior mean, b = 0, variances at their prior
  // centers, factors from the prior, c = mu_c and z = c +/- 0.5.
  void initialize(Rng& rng);

  // Parameters drawn from the prior (z, c untouched).
  void draw_parameters_from_prior(Rng& rng);
  // Fresh w, z, c and receiver sets from the generative model given the
  // current parameters; replaces the observed indicators.
  void resimulate_observations(Rng& rng);

  [[nodiscard]] GaussianConditional beta_conditional() const;
  [[nodiscard]] GaussianConditional b_conditional(int r) const;
  [[nodiscard]] GaussianConditional u_conditional(int r) const;
  [[nodiscard]] GaussianConditional v_conditional(int s) const;
  [[nodiscard]] GaussianConditional w_conditional(std::size_t m) const;

  // theta over the potential receivers of message m.
  [[nodiscard]] Eigen::VectorXd theta(std::size_t m) const;

  std::size_t update_z(Rng& rng);  // returns number of accepted messages
  void update_c(Rng& rng);
  bool update_sigma_c2(double rw_step, Rng& rng);
  // Joint translation of z, c and the intercept by a random-walk step;
  // receiver sets are unchanged by the move. No-op without an intercept.
  bool update_location(double rw_step, Rng& rng);
  [[nodiscard]] double log_location_target(double shift) const;
  void update_beta(Rng& rng);
  void update_b(Rng& rng);
  void update_sigma_b2(Rng& rng);
  void update_U(Rng& rng);
  void update_V(Rng& rng);
  void update_W(Rng& rng);

  struct StepSizes {
    double sigma_c2 = 0.3;
    double location = 0.1;  // <= 0 disables the location move
  };
  struct SweepResult {
    std::size_t z_accepted = 0;
    bool sigma_c2_accepted = false;
    bool location_accepted = false;
  };
  // One full sweep in kSweepOrder. Throws NumericalError naming the block
  // when a non-finite value appears; with `check` set, InvariantViolation
  // when y != 1(z > c) after any block.
  SweepResult sweep(const StepSizes& steps, Rng& rng, long iteration = -1, bool check = false);

  [[nodiscard]] bool consistent() const;

 private:
  void refresh_linear_predictor();
  void check_block(std::string_view block, long iteration, bool check) const;
  [[nodiscard]] Eigen::VectorXd latent_offset(std::size_t m) const;  // h_m = v_s + w_m
  [[nodiscard]] Eigen::MatrixXd gram_without(int s) const;            // U^T U - u_s u_s^T
  template <class Fn>
  void for_messages(Rng& rng, Fn&& fn);

  ModelConfig config_;
  int A_ = 0;
  int K_ = 0;
  int Q_ = 0;
  std::size_t n_ = 0;
  int threads_ = 1;
  std::uint64_t parallel_round_ = 0;
  std::vector<int> senders_;
  std::vector<int> sender_counts_;
  std::vector<unsigned char> y_;  // n x (A-1)
  RowMatrix X_;
  Eigen::MatrixXd XtX_;
  Eigen::LLT<Eigen::MatrixXd> beta_posterior_llt_;
  Eigen::VectorXd beta0_;
  Eigen::MatrixXd beta_prior_precision_;
  Eigen::MatrixXd beta_prior_covariance_;
  Eigen::VectorXd xb_;  // X beta, length n*(A-1)
  LatentState state_;
};

// Resolve the beta prior against the stacked design: explicit normal prior
// or the unit-information g prior with g = n. Returns (mean, covariance).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> resolve_beta_prior(const BetaPrior& prior, const Eigen::MatrixXd& XtX,
                                                                std::size_t num_messages, int num_coefficients);

// Runs the chain and keeps every thin-th post burn-in sweep.
PosteriorDraws run_chain(const EventDataset& data, const ModelConfig& config, const McmcSettings& settings);

}  // namespace multirecv
