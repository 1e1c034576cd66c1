#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "multirecv/config.hpp"
#include "multirecv/errors.hpp"
#include "multirecv/reports.hpp"
#include "multirecv/summary.hpp"

using namespace multirecv;
using nlohmann::json;

namespace {

PosteriorDraws synthetic_draws(int D, int K, int A, int Q, std::uint64_t seed) {
  Rng rng(seed);
  PosteriorDraws d;
  d.num_actors = A;
  d.num_coefficients = K;
  d.latent_dim = Q;
  d.beta.resize(D, K);
  d.b.resize(D, A);
  d.sigma_b2.resize(D);
  d.sigma_c2.resize(D);
  for (int i = 0; i < D; ++i) {
    for (int k = 0; k < K; ++k) d.beta(i, k) = k + rng.normal();
    for (int r = 0; r < A; ++r) d.b(i, r) = rng.normal();
    d.sigma_b2[i] = 0.5 + rng.uniform();
    d.sigma_c2[i] = 0.1 + rng.uniform();
    if (Q > 0) {
      Eigen::MatrixXd U(A, Q), V(A, Q);
      for (Eigen::Index j = 0; j < U.size(); ++j) {
        U(j) = rng.normal();
        V(j) = rng.normal();
      }
      d.U.push_back(U);
      d.V.push_back(V);
    }
  }
  return d;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("sections round trip through JSON") {
  ModelConfig m;
  m.latent_dim = 2;
  m.mu_c = 0.25;
  m.sigma_c2_prior = {5.0, 1.0};
  m.beta_prior.mean = Eigen::Vector2d(1.0, 2.0);
  m.beta_prior.covariance = Eigen::Matrix2d::Identity() * 3.0;
  const ModelConfig back = model_config_from_json(to_json(m));
  CHECK(back.latent_dim == 2);
  CHECK(back.mu_c == 0.25);
  CHECK(back.sigma_c2_prior.alpha == 5.0);
  CHECK(back.beta_prior.mean == m.beta_prior.mean);
  CHECK(back.beta_prior.covariance == m.beta_prior.covariance);
  CHECK(to_json(back) == to_json(m));

  McmcSettings s;
  s.iterations = 77;
  s.burn_in = 20;
  s.thin = 3;
  s.seed = 12345678901ULL;
  CHECK(to_json(mcmc_settings_from_json(to_json(s))) == to_json(s));

  SimulationDesign d;
  d.num_actors = 9;
  CHECK(to_json(simulation_design_from_json(to_json(d))) == to_json(d));

  PpcOptions p;
  p.t4 = false;
  p.t2_senders = {1, 3};
  CHECK(to_json(ppc_options_from_json(to_json(p))) == to_json(p));

  CHECK(model_config_from_json(json::parse(R"({"beta_prior": {"type": "unit_information"}})")).beta_prior.kind ==
        BetaPrior::Kind::UnitInformation);
}

TEST_CASE("bad configuration is rejected") {
  CHECK_THROWS_AS(model_config_from_json(json::parse(R"({"latnt_dim": 1})")), ConfigError);
  CHECK_THROWS_AS(model_config_from_json(json::parse(R"({"latent_dim": "one"})")), ConfigError);
  CHECK_THROWS_AS(model_config_from_json(json::parse(R"({"latent_dim": -1})")), ConfigError);
  CHECK_THROWS_AS(model_config_from_json(json::parse(R"({"beta_prior": {"type": "flat"}})")), ConfigError);
  CHECK_THROWS_AS(mcmc_settings_from_json(json::parse(R"({"iterations": 10, "burn_in": 20})")), ConfigError);
  CHECK_THROWS_AS(simulation_design_from_json(json::parse(R"({"message_rate": -3})")), ConfigError);
  CHECK_THROWS_AS(ppc_options_from_json(json::parse(R"({"statistics": ["t5"]})")), ConfigError);
  CHECK_THROWS_AS(parse_config_text("{"), ConfigError);
}

}

TEST_SUITE("summary") {

TEST_CASE("parameter summaries") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
  const ParameterSummary s = summarize_parameter("x", x);
  CHECK(s.mean == 4.5);
  CHECK(s.sd == doctest::Approx(std::sqrt(6.0)));
  CHECK(s.lower == doctest::Approx(1.175));
  CHECK(s.upper == doctest::Approx(7.825));
  CHECK(s.lower < s.upper);
  // Drifting chain: halves disagree strongly.
  CHECK(s.rhat > 1.5);
  CHECK(std::isnan(split_rhat(std::vector<double>{1.0, 2.0, 3.0})));
  CHECK(std::isnan(split_rhat(std::vector<double>(10, 1.0))));
}

TEST_CASE("split rhat of a stationary sequence is near one") {
  Rng rng(4);
  std::vector<double> x(20000);
  for (auto& v : x) v = rng.normal();
  CHECK(std::abs(split_rhat(x) - 1.0) < 0.01);
}

TEST_CASE("summaries cover every block and use invariant factors") {
  const PosteriorDraws d = synthetic_draws(200, 3, 4, 2, 5);
  const PosteriorSummary s = summarize_draws(d);
  CHECK(s.beta.size() == 3);
  CHECK(s.b.size() == 4);
  CHECK(s.uut.size() == 10);
  CHECK(s.uv.size() == 12);
  CHECK(s.raw_u.empty());
  for (const auto& p : s.beta) CHECK(p.lower < p.upper);
  for (const auto& p : s.uut) CHECK(p.lower < p.upper);
  // UU' is unchanged by a joint rotation of U and V.
  PosteriorDraws rotated = d;
  const double a = 0.7;
  Eigen::Matrix2d R;
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  for (std::size_t i = 0; i < d.size(); ++i) {
    rotated.U[i] = d.U[i] * R;
    rotated.V[i] = d.V[i] * R;
  }
  const PosteriorSummary r = summarize_draws(rotated);
  for (std::size_t i = 0; i < s.uut.size(); ++i) CHECK(r.uut[i].mean == doctest::Approx(s.uut[i].mean));
  for (std::size_t i = 0; i < s.uv.size(); ++i) CHECK(r.uv[i].mean == doctest::Approx(s.uv[i].mean));

  SummaryOptions raw;
  raw.raw_factors = true;
  raw.coefficient_names = {"intercept", "x1", "x2"};
  const PosteriorSummary w = summarize_draws(d, raw);
  CHECK(w.raw_u.size() == 8);
  CHECK(w.beta[1].name == "x1");
  CHECK(summary_to_json(w).at("raw_factors").contains("warning"));
}

TEST_CASE("models without coefficients omit the beta section") {
  const PosteriorDraws d = synthetic_draws(50, 0, 3, 0, 6);
  const PosteriorSummary s = summarize_draws(d);
  CHECK(s.beta.empty());
  const json j = summary_to_json(s);
  CHECK_FALSE(j.contains("beta"));
  CHECK(j.contains("sigma_c2"));
  CHECK_THROWS_AS(summarize_draws(synthetic_draws(0, 1, 3, 0, 7)), InvalidArgument);
}

TEST_CASE("summary files") {
  const auto dir = std::filesystem::temp_directory_path() / "multirecv_test_summary";
  std::filesystem::remove_all(dir);
  write_summary(summarize_draws(synthetic_draws(30, 2, 3, 1, 8)), dir);
  std::ifstream csv(dir / "parameters.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "block,name,mean,sd,lower,upper,rhat");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 2 + 3 + 2 + 6 + 6);
  CHECK(std::filesystem::exists(dir / "summary.json"));
}

TEST_CASE("number formatting round trips") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0}) CHECK(std::stod(format_number(x)) == x);
  CHECK(format_number(std::nan("")) == "nan");
}

}
