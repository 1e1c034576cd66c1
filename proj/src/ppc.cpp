#include "multirecv/ppc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

#include <boost/multiprecision/cpp_int.hpp>

#include "multirecv/errors.hpp"

namespace multirecv {

namespace {

using Int128 = __int128;

enum class Closing { Forward, Reverse };

// (A-1)^3 * t, with e scaled by (A-1) so every entry is an integer.
double transitivity(const EventDataset& data, Closing closing) {
  const int A = data.num_actors();
  if (A < 3) throw InvalidArgument("transitivity statistics need at least three actors");
  const Eigen::MatrixXi counts = send_counts(data);
  const std::int64_t scale = A - 1;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> E(A, A);
  for (int s = 0; s < A; ++s) {
    const std::int64_t row_total = counts.row(s).sum();
    for (int r = 0; r < A; ++r) E(s, r) = (r == s) ? 0 : scale * counts(s, r) - row_total;
  }
  // With a zero diagonal, sum_j E_sj E_jr skips j in {s, r} on its own.
  Int128 total = 0;
  for (int s = 0; s < A; ++s) {
    for (int r = 0; r < A; ++r) {
      if (r == s) continue;
      std::int64_t path = 0;
      for (int j = 0; j < A; ++j) path += E(s, j) * E(j, r);
      const std::int64_t closing_edge = closing == Closing::Forward ? E(s, r) : E(r, s);
      total += static_cast<Int128>(path) * closing_edge;
    }
  }
  namespace mp = boost::multiprecision;
  const bool negative = total < 0;
  auto magnitude = static_cast<unsigned __int128>(negative ? -total : total);
  mp::cpp_int numerator = static_cast<std::uint64_t>(magnitude >> 64);
  numerator <<= 64;
  numerator += static_cast<std::uint64_t>(magnitude);
  if (negative) numerator = -numerator;
  const mp::cpp_rational value(numerator, mp::cpp_int(scale * scale * scale));
  return value.convert_to<double>();
}

}  // namespace

std::map<int, double> stat_t1(const EventDataset& data) {
  std::map<int, std::size_t> counts;
  for (const auto& m : data.messages()) ++counts[static_cast<int>(m.receivers.size())];
  std::map<int, double> out;
  for (const auto& [size, count] : counts) out[size] = static_cast<double>(count) / static_cast<double>(data.size());
  return out;
}

Eigen::VectorXd stat_t2(const EventDataset& data, int sender) {
  if (sender < 0 || sender >= data.num_actors()) throw InvalidArgument("stat_t2: sender out of range");
  Eigen::VectorXd received = Eigen::VectorXd::Zero(data.num_actors() - 1);
  std::size_t sent = 0;
  for (const auto& m : data.messages()) {
    if (m.sender != sender) continue;
    ++sent;
    for (int r : m.receivers) received[receiver_row(sender, r)] += 1.0;
  }
  if (sent == 0) {
    std::ostringstream msg;
    msg << "stat_t2: undefined for sender " << sender << " with no messages";
    throw InvalidArgument(msg.str());
  }
  return received / static_cast<double>(sent);
}

Eigen::MatrixXi send_counts(const EventDataset& data) {
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(data.num_actors(), data.num_actors());
  for (const auto& m : data.messages()) {
    for (int r : m.receivers) ++counts(m.sender, r);
  }
  return counts;
}

double stat_t3(const EventDataset& data) { return transitivity(data, Closing::Forward); }

double stat_t4(const EventDataset& data) { return transitivity(data, Closing::Reverse); }

EventDataset replicate(const EventDataset& data, const LatentState& draw, bool intercept, double mu_c, Rng& rng,
                       bool reuse_w) {
  const int A = data.num_actors();
  const int K = data.num_covariates() + (intercept ? 1 : 0);
  const auto Q = draw.U.cols();
  if (draw.beta.size() != K || draw.b.size() != A || draw.U.rows() != A || draw.V.rows() != A ||
      draw.V.cols() != Q) {
    throw InvalidArgument("replicate: posterior draw does not match the dataset dimensions");
  }
  if (reuse_w && Q > 0 && (draw.W.rows() != static_cast<Eigen::Index>(data.size()) || draw.W.cols() != Q)) {
    throw InvalidArgument("replicate: reuse_w needs message factors for every message");
  }
  if (!(draw.sigma_c2 > 0.0)) throw InvalidArgument("replicate: sigma_c2 must be positive");
  const double sigma_c = std::sqrt(draw.sigma_c2);
  std::vector<Message> messages;
  messages.reserve(data.size());
  Eigen::VectorXd w(Q);
  for (std::size_t i = 0; i < data.size(); ++i) {
    Message m = data[i];
    if (reuse_w && Q > 0) {
      w = draw.W.row(static_cast<Eigen::Index>(i)).transpose();
    } else {
      for (Eigen::Index q = 0; q < Q; ++q) w[q] = rng.normal();
    }
    const Eigen::VectorXd theta = message_mean(m, draw.beta, intercept, draw.b, draw.U, draw.V.row(m.sender).transpose(), w);
    m.receivers = simulate_event(m.sender, theta, mu_c, sigma_c, rng).receivers;
    messages.push_back(std::move(m));
  }
  return EventDataset(A, data.num_covariates(), std::move(messages));
}

Quantiles summarize_quantiles(std::vector<double> sample) {
  if (sample.empty()) throw InvalidArgument("summarize_quantiles: empty sample");
  std::sort(sample.begin(), sample.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(sample.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sample.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sample[lo] + frac * (sample[hi] - sample[lo]);
  };
  return {at(0.025), at(0.25), at(0.5), at(0.75), at(0.975)};
}

double posterior_predictive_pvalue(double observed, const std::vector<double>& replicates) {
  if (replicates.empty()) throw InvalidArgument("posterior_predictive_pvalue: no replicates");
  double below = 0.0;
  double ties = 0.0;
  for (double r : replicates) {
    if (r < observed) below += 1.0;
    else if (r == observed) ties += 1.0;
  }
  const double rank = (below + 0.5 * ties) / static_cast<double>(replicates.size());
  return 2.0 * std::min(rank, 1.0 - rank);
}

PpcReport run_ppc(const EventDataset& data, const PosteriorDraws& draws, const PpcOptions& options) {
  if (draws.size() == 0) throw InvalidArgument("run_ppc: no retained posterior draws");
  if (data.empty()) throw InvalidArgument("run_ppc: dataset has no messages");
  if (draws.num_actors != data.num_actors() || draws.num_messages != data.size() ||
      draws.num_coefficients != data.num_covariates() + (draws.intercept ? 1 : 0)) {
    throw InvalidArgument("run_ppc: posterior draws do not match the dataset");
  }
  if (!draws.has_factors()) throw InvalidArgument("run_ppc: draws were stored without latent factors");
  if (options.reuse_w && !draws.has_message_factors()) {
    throw InvalidArgument("run_ppc: reuse_w needs stored message factors");
  }

  PpcReport report;
  const std::size_t total = draws.size();
  const std::size_t R = options.max_replicates == 0 ? total : std::min(total, options.max_replicates);
  for (std::size_t k = 0; k < R; ++k) report.draw_indices.push_back(k * total / R);
  report.num_replicates = R;

  std::vector<int> t2_senders = options.t2_senders;
  const std::vector<int> sent = data.sender_counts();
  if (options.t2 && t2_senders.empty()) {
    for (int s = 0; s < data.num_actors(); ++s) {
      if (sent[static_cast<std::size_t>(s)] > 0) t2_senders.push_back(s);
    }
  }
  for (int s : t2_senders) {
    if (s < 0 || s >= data.num_actors()) throw InvalidArgument("run_ppc: t2 sender out of range");
    if (sent[static_cast<std::size_t>(s)] == 0) {
      std::ostringstream msg;
      msg << "run_ppc: t2 undefined for sender " << s << " with no messages";
      throw InvalidArgument(msg.str());
    }
  }

  const bool want_transitivity = (options.t3 || options.t4) && data.num_actors() >= 3;
  std::vector<std::map<int, double>> rep_t1(R);
  std::vector<std::vector<Eigen::VectorXd>> rep_t2(R);
  std::vector<double> rep_t3(R, 0.0);
  std::vector<double> rep_t4(R, 0.0);

  Rng base(options.seed);
  auto one = [&](std::size_t k) {
    Rng rng = base.split(k);
    const LatentState draw = draws.snapshot(report.draw_indices[k]);
    const EventDataset rep = replicate(data, draw, draws.intercept, draws.mu_c, rng, options.reuse_w);
    if (options.t1) rep_t1[k] = stat_t1(rep);
    if (options.t2) {
      for (int s : t2_senders) rep_t2[k].push_back(stat_t2(rep, s));
    }
    if (want_transitivity && options.t3) rep_t3[k] = stat_t3(rep);
    if (want_transitivity && options.t4) rep_t4[k] = stat_t4(rep);
  };

  const auto T = static_cast<std::size_t>(std::max(1, options.threads));
  if (T == 1) {
    for (std::size_t k = 0; k < R; ++k) one(k);
  } else {
    std::vector<std::exception_ptr> errors(T);
    {
      std::vector<std::jthread> workers;
      for (std::size_t t = 0; t < T; ++t) {
        workers.emplace_back([&, t] {
          try {
            for (std::size_t k = t; k < R; k += T) one(k);
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

  if (options.t1) {
    SizeDistributionCheck check;
    const auto observed = stat_t1(data);
    int max_size = observed.rbegin()->first;
    for (const auto& m : rep_t1) max_size = std::max(max_size, m.rbegin()->first);
    for (int size = 1; size <= max_size; ++size) check.sizes.push_back(size);
    check.observed = Eigen::VectorXd::Zero(max_size);
    for (const auto& [size, f] : observed) check.observed[size - 1] = f;
    check.replicates = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(R), max_size);
    for (std::size_t k = 0; k < R; ++k) {
      for (const auto& [size, f] : rep_t1[k]) check.replicates(static_cast<Eigen::Index>(k), size - 1) = f;
    }
    for (int j = 0; j < max_size; ++j) {
      const Eigen::VectorXd col = check.replicates.col(j);
      check.quantiles.push_back(summarize_quantiles({col.data(), col.data() + col.size()}));
    }
    report.t1 = std::move(check);
  }

  if (options.t2) {
    for (std::size_t i = 0; i < t2_senders.size(); ++i) {
      PopularityCheck check;
      check.sender = t2_senders[i];
      check.observed = stat_t2(data, check.sender);
      const auto d = check.observed.size();
      check.replicates.resize(static_cast<Eigen::Index>(R), d);
      for (std::size_t k = 0; k < R; ++k) check.replicates.row(static_cast<Eigen::Index>(k)) = rep_t2[k][i].transpose();
      for (Eigen::Index j = 0; j < d; ++j) {
        const Eigen::VectorXd col = check.replicates.col(j);
        check.quantiles.push_back(summarize_quantiles({col.data(), col.data() + col.size()}));
      }
      check.observed_order.resize(static_cast<std::size_t>(d));
      std::iota(check.observed_order.begin(), check.observed_order.end(), 0);
      std::stable_sort(check.observed_order.begin(), check.observed_order.end(),
                       [&](int a, int b) { return check.observed[a] > check.observed[b]; });
      report.t2.push_back(std::move(check));
    }
  }

  auto scalar = [&](double observed, std::vector<double> reps) {
    ScalarCheck check;
    check.observed = observed;
    check.quantiles = summarize_quantiles(reps);
    check.ppp = posterior_predictive_pvalue(observed, reps);
    check.replicates = std::move(reps);
    return check;
  };
  if (want_transitivity && options.t3) report.t3 = scalar(stat_t3(data), std::move(rep_t3));
  if (want_transitivity && options.t4) report.t4 = scalar(stat_t4(data), std::move(rep_t4));
  return report;
}

}  // namespace multirecv
