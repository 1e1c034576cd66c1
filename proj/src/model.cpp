#include "multirecv/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "multirecv/errors.hpp"
#include "multirecv/numerics.hpp"

namespace multirecv {

namespace {

[[noreturn]] void bad_message(std::size_t index, const std::string& what) {
  std::ostringstream msg;
  msg << "message " << index << ": " << what;
  throw InvalidArgument(msg.str());
}

}  // namespace

EventDataset::EventDataset(int num_actors, int num_covariates, std::vector<Message> messages)
    : num_actors_(num_actors), num_covariates_(num_covariates), messages_(std::move(messages)) {
  if (num_actors_ < 2) throw InvalidArgument("EventDataset: need at least two actors");
  if (num_covariates_ < 0) throw InvalidArgument("EventDataset: negative covariate dimension");
  for (std::size_t i = 0; i < messages_.size(); ++i) {
    Message& m = messages_[i];
    if (m.sender < 0 || m.sender >= num_actors_) bad_message(i, "sender out of range");
    if (m.receivers.empty()) bad_message(i, "empty receiver set");
    std::sort(m.receivers.begin(), m.receivers.end());
    if (std::adjacent_find(m.receivers.begin(), m.receivers.end()) != m.receivers.end()) {
      bad_message(i, "duplicate receiver");
    }
    for (int r : m.receivers) {
      if (r < 0 || r >= num_actors_) bad_message(i, "receiver out of range");
      if (r == m.sender) bad_message(i, "sender listed among its own receivers");
    }
    if (m.covariates.rows() != num_actors_ - 1 || m.covariates.cols() != num_covariates_) {
      std::ostringstream what;
      what << "covariate block is " << m.covariates.rows() << "x" << m.covariates.cols() << ", expected "
           << num_actors_ - 1 << "x" << num_covariates_;
      bad_message(i, what.str());
    }
  }
}

std::vector<unsigned char> EventDataset::indicators(std::size_t i) const {
  const Message& m = messages_.at(i);
  std::vector<unsigned char> y(static_cast<std::size_t>(num_actors_ - 1), 0);
  for (int r : m.receivers) y[static_cast<std::size_t>(receiver_row(m.sender, r))] = 1;
  return y;
}

std::vector<int> EventDataset::sender_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(num_actors_), 0);
  for (const auto& m : messages_) ++counts[static_cast<std::size_t>(m.sender)];
  return counts;
}

double EventDataset::mean_receiver_count() const {
  if (messages_.empty()) return 0.0;
  double total = 0.0;
  for (const auto& m : messages_) total += static_cast<double>(m.receivers.size());
  return total / static_cast<double>(messages_.size());
}

void ModelConfig::validate() const {
  if (latent_dim < 0) throw ConfigError("latent dimension must be non-negative");
  if (!std::isfinite(mu_c)) throw ConfigError("mu_c must be finite");
  for (const auto* p : {&sigma_b2_prior, &sigma_c2_prior}) {
    if (!(p->alpha > 0.0) || !(p->gamma > 0.0)) throw ConfigError("inverse-gamma hyperparameters must be positive");
  }
  if (beta_prior.kind == BetaPrior::Kind::Normal) {
    if (!(beta_prior.variance > 0.0)) throw ConfigError("beta prior variance must be positive");
    const auto& cov = beta_prior.covariance;
    if (cov.size() > 0) {
      if (cov.rows() != cov.cols()) throw ConfigError("beta prior covariance must be square");
      if (!cov.isApprox(cov.transpose(), 1e-12)) throw ConfigError("beta prior covariance must be symmetric");
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success) throw ConfigError("beta prior covariance must be positive definite");
      if (beta_prior.mean.size() > 0 && beta_prior.mean.size() != cov.rows()) {
        throw ConfigError("beta prior mean and covariance disagree in dimension");
      }
    }
  }
}

double mean_suitability(const Eigen::VectorXd& beta, const Eigen::VectorXd& x, double b_r,
                        const Eigen::VectorXd& u_r, const Eigen::VectorXd& v_s, const Eigen::VectorXd& w) {
  if (beta.size() != x.size()) throw InvalidArgument("mean_suitability: beta and x differ in length");
  if (u_r.size() != v_s.size() || u_r.size() != w.size()) {
    throw InvalidArgument("mean_suitability: latent factor lengths differ");
  }
  return x.dot(beta) + b_r + u_r.dot(v_s + w);
}

Eigen::VectorXd linear_predictor(const Message& message, const Eigen::VectorXd& beta, bool intercept) {
  const Eigen::Index k = message.covariates.cols();
  if (beta.size() != k + (intercept ? 1 : 0)) throw InvalidArgument("linear_predictor: beta has wrong length");
  if (!intercept) return message.covariates * beta;
  Eigen::VectorXd out = message.covariates * beta.tail(k);
  out.array() += beta[0];
  return out;
}

Eigen::VectorXd message_mean(const Message& message, const Eigen::VectorXd& beta, bool intercept,
                             const Eigen::VectorXd& b, const Eigen::MatrixXd& U, const Eigen::VectorXd& v_s,
                             const Eigen::VectorXd& w) {
  Eigen::VectorXd theta = linear_predictor(message, beta, intercept);
  const Eigen::VectorXd h = v_s + w;
  const int s = message.sender;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const int r = receiver_actor(s, static_cast<int>(j));
    theta[j] += b[r];
    if (U.cols() > 0) theta[j] += U.row(r).dot(h);
  }
  return theta;
}

SimulatedEvent simulate_event(int sender, const Eigen::VectorXd& theta, double mu_c, double sigma_c, Rng& rng) {
  if (!(sigma_c > 0.0)) throw InvalidArgument("simulate_event: sigma_c must be positive");
  if (theta.size() < 1) throw InvalidArgument("simulate_event: no potential receivers");
  SimulatedEvent ev;
  ev.z.resize(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) ev.z[j] = theta[j] + rng.normal();
  const double zmax = ev.z.maxCoeff();
  ev.c = sample_truncated_normal(mu_c, sigma_c, Interval{-kInf, zmax}, rng);
  for (Eigen::Index j = 0; j < ev.z.size(); ++j) {
    if (ev.z[j] > ev.c) ev.receivers.push_back(receiver_actor(sender, static_cast<int>(j)));
  }
  return ev;
}

double inclusion_probability(double z_r, double z_max, double mu_c, double sigma_c) {
  if (!(sigma_c > 0.0)) throw InvalidArgument("inclusion_probability: sigma_c must be positive");
  if (z_r > z_max) throw InvalidArgument("inclusion_probability: score exceeds the maximum score");
  if (z_r == z_max) return 1.0;
  return std::exp(log_normal_cdf((z_r - mu_c) / sigma_c) - log_normal_cdf((z_max - mu_c) / sigma_c));
}

Eigen::MatrixXd marginal_covariance(const Eigen::MatrixXd& U_minus_s) {
  const auto d = U_minus_s.rows();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(d, d);
  if (U_minus_s.cols() > 0) cov.noalias() += U_minus_s * U_minus_s.transpose();
  return cov;
}

Eigen::MatrixXd drop_row(const Eigen::MatrixXd& M, int row) {
  Eigen::MatrixXd out(M.rows() - 1, M.cols());
  out.topRows(row) = M.topRows(row);
  out.bottomRows(M.rows() - row - 1) = M.bottomRows(M.rows() - row - 1);
  return out;
}

void SimulationDesign::validate() const {
  if (num_actors < 2) throw InvalidArgument("simulation design: need at least two actors");
  if (latent_dim < 0) throw InvalidArgument("simulation design: negative latent dimension");
  if (!(message_rate > 0.0) || !std::isfinite(message_rate)) {
    throw InvalidArgument("simulation design: message rate must be positive");
  }
  if (!(sigma_b2 >= 0.0)) throw InvalidArgument("simulation design: sigma_b2 must be non-negative");
  if (!(sigma_c2 > 0.0)) throw InvalidArgument("simulation design: sigma_c2 must be positive");
  if (!(std::abs(uv_correlation) <= 1.0)) throw InvalidArgument("simulation design: |uv correlation| > 1");
  const double k = static_cast<double>(beta.size());
  if (k > 1 && !(covariate_correlation > -1.0 / (k - 1.0) && covariate_correlation < 1.0)) {
    throw InvalidArgument("simulation design: covariate correlation gives a singular covariance");
  }
}

std::pair<EventDataset, LatentState> simulate_dataset(const SimulationDesign& design, Rng& rng) {
  design.validate();
  const int A = design.num_actors;
  const int K = static_cast<int>(design.beta.size());
  const int Q = design.latent_dim;
  const double sigma_c = std::sqrt(design.sigma_c2);

  LatentState truth;
  truth.beta = Eigen::Map<const Eigen::VectorXd>(design.beta.data(), K);
  truth.sigma_b2 = design.sigma_b2;
  truth.sigma_c2 = design.sigma_c2;
  truth.b.resize(A);
  for (int r = 0; r < A; ++r) truth.b[r] = design.mu_b + std::sqrt(design.sigma_b2) * rng.normal();

  // (u_r, v_r) per dimension: unit variances, correlation rho.
  truth.U.resize(A, Q);
  truth.V.resize(A, Q);
  const double rho = design.uv_correlation;
  for (int r = 0; r < A; ++r) {
    for (int q = 0; q < Q; ++q) {
      const double e1 = rng.normal();
      const double e2 = rng.normal();
      truth.U(r, q) = e1;
      truth.V(r, q) = rho * e1 + std::sqrt(1.0 - rho * rho) * e2;
    }
  }

  Eigen::MatrixXd cov_chol;
  if (K > 0) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(K, K, design.covariate_correlation);
    cov.diagonal().setOnes();
    cov_chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  }

  std::vector<Message> messages;
  std::vector<Eigen::VectorXd> w_rows;
  std::vector<Eigen::VectorXd> z_rows;
  std::vector<double> c_values;
  for (int s = 0; s < A; ++s) {
    const auto count = rng.poisson(design.message_rate);
    for (std::uint64_t i = 0; i < count; ++i) {
      Message m;
      m.sender = s;
      m.covariates.resize(A - 1, K);
      for (int j = 0; j < A - 1; ++j) {
        Eigen::VectorXd e(K);
        for (int k = 0; k < K; ++k) e[k] = rng.normal();
        if (K > 0) m.covariates.row(j) = (cov_chol * e).transpose();
      }
      Eigen::VectorXd w(Q);
      for (int q = 0; q < Q; ++q) w[q] = rng.normal();
      const Eigen::VectorXd theta =
          message_mean(m, truth.beta, false, truth.b, truth.U, truth.V.row(s).transpose(), w);
      SimulatedEvent ev = simulate_event(s, theta, design.mu_c, sigma_c, rng);
      m.receivers = std::move(ev.receivers);
      messages.push_back(std::move(m));
      w_rows.push_back(std::move(w));
      z_rows.push_back(std::move(ev.z));
      c_values.push_back(ev.c);
    }
  }

  const auto n = static_cast<Eigen::Index>(messages.size());
  truth.W.resize(n, Q);
  truth.z.resize(n, A - 1);
  truth.c.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (Q > 0) truth.W.row(i) = w_rows[static_cast<std::size_t>(i)].transpose();
    truth.z.row(i) = z_rows[static_cast<std::size_t>(i)].transpose();
    truth.c[i] = c_values[static_cast<std::size_t>(i)];
  }
  return {EventDataset(A, K, std::move(messages)), std::move(truth)};
}

}  // namespace multirecv
