#include "multirecv/mcmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "multirecv/errors.hpp"

namespace multirecv {

void McmcSettings::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw ConfigError("burn_in must lie in [0, iterations)");
  if (thin < 1) throw ConfigError("thin must be at least 1");
  if (!(rw_step > 0.0)) throw ConfigError("rw_step must be positive");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) throw ConfigError("target_acceptance must lie in (0, 1)");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (location_move && !(location_step > 0.0)) throw ConfigError("location_step must be positive");
}

LatentState PosteriorDraws::snapshot(std::size_t d) const {
  if (d >= size()) throw InvalidArgument("snapshot: draw index out of range");
  const auto i = static_cast<Eigen::Index>(d);
  LatentState s;
  s.beta = beta.row(i).transpose();
  s.b = b.row(i).transpose();
  s.sigma_b2 = sigma_b2[i];
  s.sigma_c2 = sigma_c2[i];
  if (latent_dim == 0) {
    s.U.resize(num_actors, 0);
    s.V.resize(num_actors, 0);
    s.W.resize(static_cast<Eigen::Index>(num_messages), 0);
  } else {
    if (d < U.size()) s.U = U[d];
    if (d < V.size()) s.V = V[d];
    if (d < W.size()) s.W = W[d];
  }
  return s;
}

Eigen::VectorXd GaussianConditional::mean() const { return precision.llt().solve(linear); }

Eigen::MatrixXd GaussianConditional::covariance() const {
  return precision.llt().solve(Eigen::MatrixXd::Identity(precision.rows(), precision.cols()));
}

double update_sigma_b2(const Eigen::VectorXd& b, const InverseGammaPrior& prior, Rng& rng) {
  return sample_inverse_gamma(prior.alpha + 0.5 * static_cast<double>(b.size()), prior.gamma + 0.5 * b.squaredNorm(),
                              rng);
}

Interval threshold_interval(std::span<const double> z, std::span<const unsigned char> y) {
  Interval iv;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (y[j]) {
      iv.upper = std::min(iv.upper, z[j]);
    } else {
      iv.lower = std::max(iv.lower, z[j]);
    }
  }
  if (!(iv.lower < iv.upper)) {
    std::ostringstream msg;
    msg << "threshold interval is empty: (" << iv.lower << ", " << iv.upper << ")";
    throw InvariantViolation(msg.str());
  }
  return iv;
}

double update_c(std::span<const double> z, std::span<const unsigned char> y, double mu_c, double sigma_c, Rng& rng) {
  return sample_truncated_normal(mu_c, sigma_c, threshold_interval(z, y), rng);
}

double z_acceptance_probability(double old_max, double new_max, double mu_c, double sigma_c) {
  if (new_max <= old_max) return 1.0;
  return std::min(1.0, std::exp(log_normal_cdf((old_max - mu_c) / sigma_c) - log_normal_cdf((new_max - mu_c) / sigma_c)));
}

ZUpdate update_z(std::span<const double> theta, std::span<const unsigned char> y, double c, double mu_c,
                 double sigma_c, std::span<double> z, Rng& rng) {
  const std::size_t d = theta.size();
  double old_max = -kInf;
  for (double v : z) old_max = std::max(old_max, v);
  thread_local std::vector<double> proposal;
  proposal.resize(d);
  double new_max = -kInf;
  for (std::size_t j = 0; j < d; ++j) {
    const Interval bounds = y[j] ? Interval{c, kInf} : Interval{-kInf, c};
    proposal[j] = sample_truncated_normal(theta[j], 1.0, bounds, rng);
    new_max = std::max(new_max, proposal[j]);
  }
  ZUpdate out;
  out.acceptance = z_acceptance_probability(old_max, new_max, mu_c, sigma_c);
  out.accepted = out.acceptance >= 1.0 || rng.uniform() < out.acceptance;
  if (out.accepted) std::copy(proposal.begin(), proposal.end(), z.begin());
  return out;
}

double log_sigma_c2_target(double sigma_c2, std::span<const double> c, std::span<const double> z_max, double mu_c,
                           const InverseGammaPrior& prior) {
  if (!(sigma_c2 > 0.0)) return -kInf;
  const double sigma = std::sqrt(sigma_c2);
  double total = log_inverse_gamma_pdf(sigma_c2, prior.alpha, prior.gamma);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double e = (c[i] - mu_c) / sigma;
    total += -0.5 * e * e - std::log(sigma) - log_normal_cdf((z_max[i] - mu_c) / sigma);
  }
  return total;
}

SigmaC2Update update_sigma_c2(std::span<const double> c, std::span<const double> z_max, double current,
                              const InverseGammaPrior& prior, double mu_c, double rw_step, Rng& rng) {
  const double proposed = current * std::exp(rw_step * rng.normal());
  SigmaC2Update out;
  // q(x'|x) on the log scale contributes the Jacobian x'/x.
  out.log_ratio = log_sigma_c2_target(proposed, c, z_max, mu_c, prior) -
                  log_sigma_c2_target(current, c, z_max, mu_c, prior) + std::log(proposed) - std::log(current);
  out.accepted = out.log_ratio >= 0.0 || std::log(rng.uniform()) < out.log_ratio;
  out.value = out.accepted ? proposed : current;
  return out;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> resolve_beta_prior(const BetaPrior& prior, const Eigen::MatrixXd& XtX,
                                                                std::size_t num_messages, int num_coefficients) {
  const int K = num_coefficients;
  if (prior.kind == BetaPrior::Kind::UnitInformation) {
    if (num_messages == 0) throw ConfigError("unit-information prior needs at least one message");
    Eigen::LLT<Eigen::MatrixXd> llt(XtX);
    if (K > 0 && llt.info() != Eigen::Success) {
      throw NumericalError("unit-information prior: X'X is singular");
    }
    Eigen::MatrixXd cov = static_cast<double>(num_messages) * llt.solve(Eigen::MatrixXd::Identity(K, K));
    return {Eigen::VectorXd::Zero(K), cov};
  }
  Eigen::VectorXd mean = prior.mean.size() > 0 ? prior.mean : Eigen::VectorXd::Zero(K);
  Eigen::MatrixXd cov = prior.covariance.size() > 0 ? prior.covariance
                                                     : Eigen::MatrixXd(prior.variance * Eigen::MatrixXd::Identity(K, K));
  if (mean.size() != K || cov.rows() != K) {
    std::ostringstream msg;
    msg << "beta prior has dimension " << mean.size() << " but the model has " << K << " coefficients";
    throw ConfigError(msg.str());
  }
  return {mean, cov};
}

// --- GibbsSampler ----------------------------------------------------------

GibbsSampler::GibbsSampler(const EventDataset& data, const ModelConfig& config, int threads)
    : config_(config),
      A_(data.num_actors()),
      K_(fitted_covariates(data, config)),
      Q_(config.latent_dim),
      n_(data.size()),
      threads_(std::max(1, threads)) {
  config_.validate();
  const auto d = static_cast<std::size_t>(A_ - 1);
  senders_.resize(n_);
  sender_counts_.assign(static_cast<std::size_t>(A_), 0);
  y_.assign(n_ * d, 0);
  X_.resize(static_cast<Eigen::Index>(n_ * d), K_);
  const int offset = config_.intercept ? 1 : 0;
  for (std::size_t m = 0; m < n_; ++m) {
    const Message& msg = data[m];
    senders_[m] = msg.sender;
    ++sender_counts_[static_cast<std::size_t>(msg.sender)];
    for (int r : msg.receivers) y_[m * d + static_cast<std::size_t>(receiver_row(msg.sender, r))] = 1;
    auto rows = X_.middleRows(static_cast<Eigen::Index>(m * d), static_cast<Eigen::Index>(d));
    if (offset) rows.col(0).setOnes();
    rows.rightCols(data.num_covariates()) = msg.covariates;
  }
  XtX_ = X_.transpose() * X_;
  auto [mean, cov] = resolve_beta_prior(config_.beta_prior, XtX_, n_, K_);
  beta0_ = std::move(mean);
  beta_prior_covariance_ = std::move(cov);
  Eigen::LLT<Eigen::MatrixXd> prior_llt(beta_prior_covariance_);
  if (K_ > 0 && prior_llt.info() != Eigen::Success) throw ConfigError("beta prior covariance is not positive definite");
  beta_prior_precision_ = prior_llt.solve(Eigen::MatrixXd::Identity(K_, K_));
  beta_posterior_llt_.compute(beta_prior_precision_ + XtX_);
  if (K_ > 0 && beta_posterior_llt_.info() != Eigen::Success) {
    throw NumericalError("beta posterior precision is singular");
  }

  state_.beta = beta0_;
  state_.b = Eigen::VectorXd::Zero(A_);
  state_.U = Eigen::MatrixXd::Zero(A_, Q_);
  state_.V = Eigen::MatrixXd::Zero(A_, Q_);
  state_.W = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), Q_);
  state_.z = RowMatrix::Zero(static_cast<Eigen::Index>(n_), A_ - 1);
  state_.c = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_), config_.mu_c);
  state_.sigma_b2 = config_.sigma_b2_prior.center();
  state_.sigma_c2 = config_.sigma_c2_prior.center();
  refresh_linear_predictor();
}

std::span<const unsigned char> GibbsSampler::indicators(std::size_t m) const {
  const auto d = static_cast<std::size_t>(A_ - 1);
  return {y_.data() + m * d, d};
}

void GibbsSampler::set_state(LatentState state) {
  const auto n = static_cast<Eigen::Index>(n_);
  if (state.beta.size() != K_ || state.b.size() != A_ || state.U.rows() != A_ || state.U.cols() != Q_ ||
      state.V.rows() != A_ || state.V.cols() != Q_ || state.W.rows() != n || state.W.cols() != Q_ ||
      state.z.rows() != n || state.z.cols() != A_ - 1 || state.c.size() != n) {
    throw InvalidArgument("set_state: state dimensions do not match the sampler");
  }
  if (!(state.sigma_b2 > 0.0) || !(state.sigma_c2 > 0.0)) throw InvalidArgument("set_state: variances must be positive");
  state_ = std::move(state);
  refresh_linear_predictor();
}

void GibbsSampler::refresh_linear_predictor() {
  if (K_ > 0) {
    xb_ = X_ * state_.beta;
  } else {
    xb_ = Eigen::VectorXd::Zero(X_.rows());
  }
}

Eigen::VectorXd GibbsSampler::latent_offset(std::size_t m) const {
  return state_.V.row(senders_[m]).transpose() + state_.W.row(static_cast<Eigen::Index>(m)).transpose();
}

Eigen::MatrixXd GibbsSampler::gram_without(int s) const {
  Eigen::MatrixXd G = state_.U.transpose() * state_.U;
  G.noalias() -= state_.U.row(s).transpose() * state_.U.row(s);
  return G;
}

Eigen::VectorXd GibbsSampler::theta(std::size_t m) const {
  const int d = A_ - 1;
  const int s = senders_[m];
  Eigen::VectorXd out = xb_.segment(static_cast<Eigen::Index>(m) * d, d);
  Eigen::VectorXd uh;
  if (Q_ > 0) uh = state_.U * latent_offset(m);
  for (int j = 0; j < d; ++j) {
    const int r = receiver_actor(s, j);
    out[j] += state_.b[r];
    if (Q_ > 0) out[j] += uh[r];
  }
  return out;
}

template <class Fn>
void GibbsSampler::for_messages(Rng& rng, Fn&& fn) {
  if (threads_ <= 1 || n_ < 2 * static_cast<std::size_t>(threads_)) {
    for (std::size_t m = 0; m < n_; ++m) fn(m, rng);
    return;
  }
  const auto T = static_cast<std::size_t>(threads_);
  const std::uint64_t round = parallel_round_++;
  std::vector<std::exception_ptr> errors(T);
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < T; ++t) {
      workers.emplace_back([&, t] {
        try {
          Rng local = rng.split(round * T + t);
          const std::size_t begin = n_ * t / T;
          const std::size_t end = n_ * (t + 1) / T;
          for (std::size_t m = begin; m < end; ++m) fn(m, local);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void GibbsSampler::initialize(Rng& rng) {
  state_.beta = beta0_;
  state_.b.setZero();
  state_.sigma_b2 = config_.sigma_b2_prior.center();
  state_.sigma_c2 = config_.sigma_c2_prior.center();
  for (auto* M : {&state_.U, &state_.V, &state_.W}) {
    for (Eigen::Index i = 0; i < M->size(); ++i) M->data()[i] = rng.normal();
  }
  const int d = A_ - 1;
  for (std::size_t m = 0; m < n_; ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    state_.c[mi] = config_.mu_c;
    const auto y = indicators(m);
    for (int j = 0; j < d; ++j) state_.z(mi, j) = state_.c[mi] + (y[static_cast<std::size_t>(j)] ? 0.5 : -0.5);
  }
  refresh_linear_predictor();
}

void GibbsSampler::draw_parameters_from_prior(Rng& rng) {
  state_.beta = sample_mvn(beta0_, beta_prior_covariance_, rng);
  state_.sigma_b2 = sample_inverse_gamma(config_.sigma_b2_prior.alpha, config_.sigma_b2_prior.gamma, rng);
  state_.sigma_c2 = sample_inverse_gamma(config_.sigma_c2_prior.alpha, config_.sigma_c2_prior.gamma, rng);
  const double sb = std::sqrt(state_.sigma_b2);
  for (int r = 0; r < A_; ++r) state_.b[r] = sb * rng.normal();
  for (auto* M : {&state_.U, &state_.V, &state_.W}) {
    for (Eigen::Index i = 0; i < M->size(); ++i) M->data()[i] = rng.normal();
  }
  refresh_linear_predictor();
}

void GibbsSampler::resimulate_observations(Rng& rng) {
  const int d = A_ - 1;
  const double sigma_c = std::sqrt(state_.sigma_c2);
  for (std::size_t m = 0; m < n_; ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    for (int q = 0; q < Q_; ++q) state_.W(mi, q) = rng.normal();
    const Eigen::VectorXd th = theta(m);
    for (int j = 0; j < d; ++j) state_.z(mi, j) = th[j] + rng.normal();
    const double zmax = state_.z.row(mi).maxCoeff();
    state_.c[mi] = sample_truncated_normal(config_.mu_c, sigma_c, Interval{-kInf, zmax}, rng);
    for (int j = 0; j < d; ++j) y_[m * static_cast<std::size_t>(d) + j] = state_.z(mi, j) > state_.c[mi] ? 1 : 0;
  }
}

GaussianConditional GibbsSampler::beta_conditional() const {
  const int d = A_ - 1;
  Eigen::VectorXd resid(X_.rows());
  for (std::size_t m = 0; m < n_; ++m) {
    const int s = senders_[m];
    const auto mi = static_cast<Eigen::Index>(m);
    Eigen::VectorXd uh;
    if (Q_ > 0) uh = state_.U * latent_offset(m);
    for (int j = 0; j < d; ++j) {
      const int r = receiver_actor(s, j);
      resid[mi * d + j] = state_.z(mi, j) - state_.b[r] - (Q_ > 0 ? uh[r] : 0.0);
    }
  }
  GaussianConditional g;
  g.precision = beta_prior_precision_ + XtX_;
  g.linear = beta_prior_precision_ * beta0_ + X_.transpose() * resid;
  return g;
}

GaussianConditional GibbsSampler::b_conditional(int r) const {
  const int d = A_ - 1;
  double sum = 0.0;
  double count = 0.0;
  for (std::size_t m = 0; m < n_; ++m) {
    const int s = senders_[m];
    if (s == r) continue;
    const int j = receiver_row(s, r);
    const auto mi = static_cast<Eigen::Index>(m);
    double e = state_.z(mi, j) - xb_[mi * d + j];
    if (Q_ > 0) e -= state_.U.row(r).dot(latent_offset(m));
    sum += e;
    count += 1.0;
  }
  GaussianConditional g;
  g.precision = Eigen::MatrixXd::Constant(1, 1, count + 1.0 / state_.sigma_b2);
  g.linear = Eigen::VectorXd::Constant(1, sum);
  return g;
}

GaussianConditional GibbsSampler::u_conditional(int r) const {
  const int d = A_ - 1;
  GaussianConditional g;
  g.precision = Eigen::MatrixXd::Identity(Q_, Q_);
  g.linear = Eigen::VectorXd::Zero(Q_);
  for (std::size_t m = 0; m < n_; ++m) {
    const int s = senders_[m];
    if (s == r) continue;
    const int j = receiver_row(s, r);
    const auto mi = static_cast<Eigen::Index>(m);
    const Eigen::VectorXd h = latent_offset(m);
    g.precision.noalias() += h * h.transpose();
    g.linear += h * (state_.z(mi, j) - xb_[mi * d + j] - state_.b[r]);
  }
  return g;
}

GaussianConditional GibbsSampler::v_conditional(int s) const {
  const int d = A_ - 1;
  GaussianConditional g;
  g.precision = Eigen::MatrixXd::Identity(Q_, Q_) + sender_counts_[static_cast<std::size_t>(s)] * gram_without(s);
  g.linear = Eigen::VectorXd::Zero(Q_);
  for (std::size_t m = 0; m < n_; ++m) {
    if (senders_[m] != s) continue;
    const auto mi = static_cast<Eigen::Index>(m);
    const Eigen::VectorXd w = state_.W.row(mi).transpose();
    for (int j = 0; j < d; ++j) {
      const int r = receiver_actor(s, j);
      const double e = state_.z(mi, j) - xb_[mi * d + j] - state_.b[r] - state_.U.row(r).dot(w);
      g.linear += state_.U.row(r).transpose() * e;
    }
  }
  return g;
}

GaussianConditional GibbsSampler::w_conditional(std::size_t m) const {
  const int d = A_ - 1;
  const int s = senders_[m];
  const auto mi = static_cast<Eigen::Index>(m);
  GaussianConditional g;
  g.precision = Eigen::MatrixXd::Identity(Q_, Q_) + gram_without(s);
  g.linear = Eigen::VectorXd::Zero(Q_);
  const Eigen::VectorXd v = state_.V.row(s).transpose();
  for (int j = 0; j < d; ++j) {
    const int r = receiver_actor(s, j);
    const double e = state_.z(mi, j) - xb_[mi * d + j] - state_.b[r] - state_.U.row(r).dot(v);
    g.linear += state_.U.row(r).transpose() * e;
  }
  return g;
}

std::size_t GibbsSampler::update_z(Rng& rng) {
  const double sigma_c = std::sqrt(state_.sigma_c2);
  std::vector<unsigned char> accepted(n_, 0);
  for_messages(rng, [&](std::size_t m, Rng& r) {
    const auto mi = static_cast<Eigen::Index>(m);
    const Eigen::VectorXd th = theta(m);
    std::span<double> z(state_.z.row(mi).data(), static_cast<std::size_t>(A_ - 1));
    const ZUpdate u = multirecv::update_z({th.data(), static_cast<std::size_t>(th.size())}, indicators(m),
                                          state_.c[mi], config_.mu_c, sigma_c, z, r);
    accepted[m] = u.accepted ? 1 : 0;
  });
  return static_cast<std::size_t>(std::count(accepted.begin(), accepted.end(), 1));
}

void GibbsSampler::update_c(Rng& rng) {
  const double sigma_c = std::sqrt(state_.sigma_c2);
  const auto d = static_cast<std::size_t>(A_ - 1);
  for_messages(rng, [&](std::size_t m, Rng& r) {
    const auto mi = static_cast<Eigen::Index>(m);
    state_.c[mi] = multirecv::update_c({state_.z.row(mi).data(), d}, indicators(m), config_.mu_c, sigma_c, r);
  });
}

bool GibbsSampler::update_sigma_c2(double rw_step, Rng& rng) {
  std::vector<double> zmax(n_);
  for (std::size_t m = 0; m < n_; ++m) zmax[m] = state_.z.row(static_cast<Eigen::Index>(m)).maxCoeff();
  const SigmaC2Update u = multirecv::update_sigma_c2({state_.c.data(), n_}, zmax, state_.sigma_c2,
                                                     config_.sigma_c2_prior, config_.mu_c, rw_step, rng);
  state_.sigma_c2 = u.value;
  return u.accepted;
}

double GibbsSampler::log_location_target(double shift) const {
  const double sigma = std::sqrt(state_.sigma_c2);
  double total = 0.0;
  for (std::size_t m = 0; m < n_; ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    const double e = (state_.c[mi] + shift - config_.mu_c) / sigma;
    total += -0.5 * e * e - log_normal_cdf((state_.z.row(mi).maxCoeff() + shift - config_.mu_c) / sigma);
  }
  Eigen::VectorXd diff = state_.beta - beta0_;
  diff[0] += shift;
  total -= 0.5 * diff.dot(beta_prior_precision_ * diff);
  return total;
}

bool GibbsSampler::update_location(double rw_step, Rng& rng) {
  if (!config_.intercept || K_ == 0) return false;
  const double shift = rw_step * rng.normal();
  const double log_ratio = log_location_target(shift) - log_location_target(0.0);
  if (!(log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio)) return false;
  state_.z.array() += shift;
  state_.c.array() += shift;
  state_.beta[0] += shift;
  refresh_linear_predictor();
  return true;
}

void GibbsSampler::update_beta(Rng& rng) {
  if (K_ == 0) return;
  const GaussianConditional g = beta_conditional();
  // Precision is data-independent of the state, so its factor is cached.
  Eigen::VectorXd draw = beta_posterior_llt_.solve(g.linear);
  Eigen::VectorXd e(K_);
  for (int k = 0; k < K_; ++k) e[k] = rng.normal();
  draw += beta_posterior_llt_.matrixU().solve(e);
  state_.beta = std::move(draw);
  refresh_linear_predictor();
}

void GibbsSampler::update_b(Rng& rng) {
  const int d = A_ - 1;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(A_);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(A_);
  for (std::size_t m = 0; m < n_; ++m) {
    const int s = senders_[m];
    const auto mi = static_cast<Eigen::Index>(m);
    Eigen::VectorXd uh;
    if (Q_ > 0) uh = state_.U * latent_offset(m);
    for (int j = 0; j < d; ++j) {
      const int r = receiver_actor(s, j);
      sum[r] += state_.z(mi, j) - xb_[mi * d + j] - (Q_ > 0 ? uh[r] : 0.0);
      count[r] += 1.0;
    }
  }
  for (int r = 0; r < A_; ++r) {
    const double precision = count[r] + 1.0 / state_.sigma_b2;
    state_.b[r] = sum[r] / precision + rng.normal() / std::sqrt(precision);
  }
}

void GibbsSampler::update_sigma_b2(Rng& rng) {
  state_.sigma_b2 = multirecv::update_sigma_b2(state_.b, config_.sigma_b2_prior, rng);
}

void GibbsSampler::update_U(Rng& rng) {
  if (Q_ == 0) return;
  const int d = A_ - 1;
  Eigen::MatrixXd H_all = Eigen::MatrixXd::Zero(Q_, Q_);
  std::vector<Eigen::MatrixXd> H_own(static_cast<std::size_t>(A_), Eigen::MatrixXd::Zero(Q_, Q_));
  Eigen::MatrixXd linear = Eigen::MatrixXd::Zero(A_, Q_);
  for (std::size_t m = 0; m < n_; ++m) {
    const int s = senders_[m];
    const auto mi = static_cast<Eigen::Index>(m);
    const Eigen::VectorXd h = latent_offset(m);
    const Eigen::MatrixXd hh = h * h.transpose();
    H_all += hh;
    H_own[static_cast<std::size_t>(s)] += hh;
    for (int j = 0; j < d; ++j) {
      const int r = receiver_actor(s, j);
      linear.row(r) += (state_.z(mi, j) - xb_[mi * d + j] - state_.b[r]) * h.transpose();
    }
  }
  for (int r = 0; r < A_; ++r) {
    GaussianConditional g;
    g.precision = Eigen::MatrixXd::Identity(Q_, Q_) + H_all - H_own[static_cast<std::size_t>(r)];
    g.linear = linear.row(r).transpose();
    state_.U.row(r) = g.sample(rng).transpose();
  }
}

void GibbsSampler::update_V(Rng& rng) {
  if (Q_ == 0) return;
  const int d = A_ - 1;
  Eigen::MatrixXd linear = Eigen::MatrixXd::Zero(A_, Q_);
  for (std::size_t m = 0; m < n_; ++m) {
    const int s = senders_[m];
    const auto mi = static_cast<Eigen::Index>(m);
    const Eigen::VectorXd uw = state_.U * state_.W.row(mi).transpose();
    for (int j = 0; j < d; ++j) {
      const int r = receiver_actor(s, j);
      const double e = state_.z(mi, j) - xb_[mi * d + j] - state_.b[r] - uw[r];
      linear.row(s) += e * state_.U.row(r);
    }
  }
  const Eigen::MatrixXd gram = state_.U.transpose() * state_.U;
  for (int s = 0; s < A_; ++s) {
    GaussianConditional g;
    g.precision = Eigen::MatrixXd::Identity(Q_, Q_) +
                  sender_counts_[static_cast<std::size_t>(s)] *
                      (gram - state_.U.row(s).transpose() * state_.U.row(s));
    g.linear = linear.row(s).transpose();
    state_.V.row(s) = g.sample(rng).transpose();
  }
}

void GibbsSampler::update_W(Rng& rng) {
  if (Q_ == 0) return;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factor(static_cast<std::size_t>(A_));
  for (int s = 0; s < A_; ++s) {
    factor[static_cast<std::size_t>(s)].compute(Eigen::MatrixXd::Identity(Q_, Q_) + gram_without(s));
  }
  const int d = A_ - 1;
  for_messages(rng, [&](std::size_t m, Rng& r) {
    const int s = senders_[m];
    const auto mi = static_cast<Eigen::Index>(m);
    const Eigen::VectorXd uv = state_.U * state_.V.row(s).transpose();
    Eigen::VectorXd linear = Eigen::VectorXd::Zero(Q_);
    for (int j = 0; j < d; ++j) {
      const int a = receiver_actor(s, j);
      linear += (state_.z(mi, j) - xb_[mi * d + j] - state_.b[a] - uv[a]) * state_.U.row(a).transpose();
    }
    const auto& llt = factor[static_cast<std::size_t>(s)];
    Eigen::VectorXd e(Q_);
    for (int q = 0; q < Q_; ++q) e[q] = r.normal();
    state_.W.row(mi) = (llt.solve(linear) + llt.matrixU().solve(e)).transpose();
  });
}

bool GibbsSampler::consistent() const {
  const int d = A_ - 1;
  for (std::size_t m = 0; m < n_; ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    const auto y = indicators(m);
    for (int j = 0; j < d; ++j) {
      if ((state_.z(mi, j) > state_.c[mi]) != (y[static_cast<std::size_t>(j)] != 0)) return false;
    }
  }
  return true;
}

void GibbsSampler::check_block(std::string_view block, long iteration, bool check) const {
  bool finite = true;
  if (block == "z") finite = state_.z.allFinite();
  else if (block == "c") finite = state_.c.allFinite();
  else if (block == "location") finite = state_.z.allFinite() && state_.c.allFinite() && state_.beta.allFinite();
  else if (block == "sigma_c2") finite = std::isfinite(state_.sigma_c2) && state_.sigma_c2 > 0.0;
  else if (block == "beta") finite = state_.beta.allFinite();
  else if (block == "b") finite = state_.b.allFinite();
  else if (block == "sigma_b2") finite = std::isfinite(state_.sigma_b2) && state_.sigma_b2 > 0.0;
  else if (block == "U") finite = state_.U.allFinite();
  else if (block == "V") finite = state_.V.allFinite();
  else if (block == "W") finite = state_.W.allFinite();
  if (!finite) {
    std::ostringstream msg;
    msg << "non-finite value in block '" << block << "' at iteration " << iteration;
    throw NumericalError(msg.str());
  }
  if (check && !consistent()) {
    std::ostringstream msg;
    msg << "state inconsistent with observed receivers after block '" << block << "' at iteration " << iteration;
    throw InvariantViolation(msg.str());
  }
}

GibbsSampler::SweepResult GibbsSampler::sweep(const StepSizes& steps, Rng& rng, long iteration, bool check) {
  // A non-finite state reaching a sampling primitive surfaces as an invalid
  // argument there; report it against the block that was running.
  auto step = [&](std::string_view block, auto&& update) {
    try {
      update();
    } catch (const InvalidArgument& e) {
      std::ostringstream msg;
      msg << "numerical failure in block '" << block << "' at iteration " << iteration << ": " << e.what();
      throw NumericalError(msg.str());
    }
    check_block(block, iteration, check);
  };
  SweepResult out;
  step("z", [&] { out.z_accepted = update_z(rng); });
  step("c", [&] { update_c(rng); });
  step("sigma_c2", [&] { out.sigma_c2_accepted = update_sigma_c2(steps.sigma_c2, rng); });
  if (steps.location > 0.0) step("location", [&] { out.location_accepted = update_location(steps.location, rng); });
  step("beta", [&] { update_beta(rng); });
  step("b", [&] { update_b(rng); });
  step("sigma_b2", [&] { update_sigma_b2(rng); });
  step("U", [&] { update_U(rng); });
  step("V", [&] { update_V(rng); });
  step("W", [&] { update_W(rng); });
  return out;
}

PosteriorDraws run_chain(const EventDataset& data, const ModelConfig& config, const McmcSettings& settings) {
  settings.validate();
  if (data.empty()) throw InvalidArgument("run_chain: dataset has no messages");
  const auto start = std::chrono::steady_clock::now();

  GibbsSampler sampler(data, config, settings.threads);
  Rng rng(settings.seed);
  sampler.initialize(rng);

  const int D = settings.retained();
  PosteriorDraws draws;
  draws.num_actors = sampler.num_actors();
  draws.num_coefficients = sampler.num_coefficients();
  draws.latent_dim = sampler.latent_dim();
  draws.num_messages = sampler.num_messages();
  draws.intercept = config.intercept;
  draws.mu_c = config.mu_c;
  draws.seed = settings.seed;
  draws.iterations = settings.iterations;
  draws.burn_in = settings.burn_in;
  draws.thin = settings.thin;
  draws.beta.resize(D, draws.num_coefficients);
  draws.b.resize(D, draws.num_actors);
  draws.sigma_b2.resize(D);
  draws.sigma_c2.resize(D);

  double log_step = std::log(settings.rw_step);
  const bool use_location = settings.location_move && config.intercept && sampler.num_coefficients() > 0;
  double log_location_step = std::log(settings.location_step);
  std::size_t z_accepted = 0;
  std::size_t sc_accepted = 0;
  std::size_t loc_accepted = 0;
  std::size_t post_sweeps = 0;
  int stored = 0;
  for (int it = 0; it < settings.iterations; ++it) {
    GibbsSampler::StepSizes steps;
    steps.sigma_c2 = std::exp(log_step);
    steps.location = use_location ? std::exp(log_location_step) : 0.0;
    const auto res = sampler.sweep(steps, rng, it, settings.check_consistency);
    if (it < settings.burn_in) {
      if (settings.adapt) {
        const double gain = 1.0 / std::pow(1.0 + it, 0.6);
        log_step += gain * ((res.sigma_c2_accepted ? 1.0 : 0.0) - settings.target_acceptance);
        if (use_location) {
          log_location_step += gain * ((res.location_accepted ? 1.0 : 0.0) - settings.target_acceptance);
        }
      }
      continue;
    }
    ++post_sweeps;
    z_accepted += res.z_accepted;
    sc_accepted += res.sigma_c2_accepted ? 1 : 0;
    loc_accepted += res.location_accepted ? 1 : 0;
    const int since = it - settings.burn_in + 1;
    if (since % settings.thin != 0 || stored >= D) continue;
    const LatentState& s = sampler.state();
    draws.beta.row(stored) = s.beta.transpose();
    draws.b.row(stored) = s.b.transpose();
    draws.sigma_b2[stored] = s.sigma_b2;
    draws.sigma_c2[stored] = s.sigma_c2;
    if (settings.store_latent && draws.latent_dim > 0) {
      draws.U.push_back(s.U);
      draws.V.push_back(s.V);
    }
    if (settings.store_w && draws.latent_dim > 0) draws.W.push_back(s.W);
    ++stored;
  }
  draws.sigma_c2_step = std::exp(log_step);
  draws.location_step = use_location ? std::exp(log_location_step) : 0.0;
  if (post_sweeps > 0) {
    draws.location_acceptance = static_cast<double>(loc_accepted) / static_cast<double>(post_sweeps);
    draws.z_acceptance = static_cast<double>(z_accepted) / static_cast<double>(post_sweeps * sampler.num_messages());
    draws.sigma_c2_acceptance = static_cast<double>(sc_accepted) / static_cast<double>(post_sweeps);
  }
  draws.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return draws;
}

}  // namespace multirecv
