#include "multirecv/config.hpp"

#include <set>
#include <string>

#include "multirecv/errors.hpp"

namespace multirecv {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.contains(key)) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& target, const char* section) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(section) + ": '" + key + "' has the wrong type");
  }
}

InverseGammaPrior read_ig(const json& j, const char* section) {
  reject_unknown(j, {"alpha", "gamma"}, section);
  InverseGammaPrior p;
  read(j, "alpha", p.alpha, section);
  read(j, "gamma", p.gamma, section);
  return p;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(M.cols()));
    for (Eigen::Index k = 0; k < M.cols(); ++k) row[static_cast<std::size_t>(k)] = M(i, k);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

json parse_config_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
}

ModelConfig model_config_from_json(const json& j) {
  constexpr const char* section = "model";
  reject_unknown(j, {"latent_dim", "mu_c", "intercept", "beta_prior", "sigma_b2_prior", "sigma_c2_prior"}, section);
  ModelConfig c;
  read(j, "latent_dim", c.latent_dim, section);
  read(j, "mu_c", c.mu_c, section);
  read(j, "intercept", c.intercept, section);
  if (j.contains("beta_prior")) {
    const json& bp = j.at("beta_prior");
    reject_unknown(bp, {"type", "mean", "covariance", "variance"}, "model.beta_prior");
    std::string type = "normal";
    read(bp, "type", type, "model.beta_prior");
    if (type == "unit_information") {
      c.beta_prior.kind = BetaPrior::Kind::UnitInformation;
    } else if (type == "normal") {
      c.beta_prior.kind = BetaPrior::Kind::Normal;
      read(bp, "variance", c.beta_prior.variance, "model.beta_prior");
      std::vector<double> mean;
      read(bp, "mean", mean, "model.beta_prior");
      c.beta_prior.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
      std::vector<std::vector<double>> cov;
      read(bp, "covariance", cov, "model.beta_prior");
      if (!cov.empty()) {
        const auto k = static_cast<Eigen::Index>(cov.size());
        c.beta_prior.covariance.resize(k, k);
        for (Eigen::Index r = 0; r < k; ++r) {
          if (static_cast<Eigen::Index>(cov[static_cast<std::size_t>(r)].size()) != k) {
            throw ConfigError("model.beta_prior: covariance must be square");
          }
          for (Eigen::Index q = 0; q < k; ++q) c.beta_prior.covariance(r, q) = cov[static_cast<std::size_t>(r)][static_cast<std::size_t>(q)];
        }
      }
    } else {
      throw ConfigError("model.beta_prior: unknown type '" + type + "'");
    }
  }
  if (j.contains("sigma_b2_prior")) c.sigma_b2_prior = read_ig(j.at("sigma_b2_prior"), "model.sigma_b2_prior");
  if (j.contains("sigma_c2_prior")) c.sigma_c2_prior = read_ig(j.at("sigma_c2_prior"), "model.sigma_c2_prior");
  c.validate();
  return c;
}

McmcSettings mcmc_settings_from_json(const json& j) {
  constexpr const char* section = "mcmc";
  reject_unknown(j,
                 {"iterations", "burn_in", "thin", "seed", "rw_step", "adapt", "target_acceptance", "location_move",
                  "location_step", "store_latent", "store_w", "threads", "check_consistency"},
                 section);
  McmcSettings s;
  read(j, "iterations", s.iterations, section);
  read(j, "burn_in", s.burn_in, section);
  read(j, "thin", s.thin, section);
  read(j, "seed", s.seed, section);
  read(j, "rw_step", s.rw_step, section);
  read(j, "adapt", s.adapt, section);
  read(j, "target_acceptance", s.target_acceptance, section);
  read(j, "location_move", s.location_move, section);
  read(j, "location_step", s.location_step, section);
  read(j, "store_latent", s.store_latent, section);
  read(j, "store_w", s.store_w, section);
  read(j, "threads", s.threads, section);
  read(j, "check_consistency", s.check_consistency, section);
  s.validate();
  return s;
}

SimulationDesign simulation_design_from_json(const json& j) {
  constexpr const char* section = "design";
  reject_unknown(j,
                 {"num_actors", "beta", "covariate_correlation", "mu_b", "sigma_b2", "latent_dim", "uv_correlation",
                  "mu_c", "sigma_c2", "message_rate"},
                 section);
  SimulationDesign d;
  read(j, "num_actors", d.num_actors, section);
  read(j, "beta", d.beta, section);
  read(j, "covariate_correlation", d.covariate_correlation, section);
  read(j, "mu_b", d.mu_b, section);
  read(j, "sigma_b2", d.sigma_b2, section);
  read(j, "latent_dim", d.latent_dim, section);
  read(j, "uv_correlation", d.uv_correlation, section);
  read(j, "mu_c", d.mu_c, section);
  read(j, "sigma_c2", d.sigma_c2, section);
  read(j, "message_rate", d.message_rate, section);
  try {
    d.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return d;
}

PpcOptions ppc_options_from_json(const json& j) {
  constexpr const char* section = "ppc";
  reject_unknown(j, {"statistics", "t2_senders", "max_replicates", "reuse_w", "seed", "threads"}, section);
  PpcOptions o;
  if (j.contains("statistics")) {
    std::vector<std::string> stats;
    read(j, "statistics", stats, section);
    o.t1 = o.t2 = o.t3 = o.t4 = false;
    for (const auto& s : stats) {
      if (s == "t1") o.t1 = true;
      else if (s == "t2") o.t2 = true;
      else if (s == "t3") o.t3 = true;
      else if (s == "t4") o.t4 = true;
      else throw ConfigError("ppc: unknown statistic '" + s + "'");
    }
  }
  read(j, "t2_senders", o.t2_senders, section);
  read(j, "max_replicates", o.max_replicates, section);
  read(j, "reuse_w", o.reuse_w, section);
  read(j, "seed", o.seed, section);
  read(j, "threads", o.threads, section);
  if (o.threads < 1) throw ConfigError("ppc: threads must be at least 1");
  return o;
}

json to_json(const ModelConfig& c) {
  json bp;
  if (c.beta_prior.kind == BetaPrior::Kind::UnitInformation) {
    bp = {{"type", "unit_information"}};
  } else {
    bp = {{"type", "normal"}, {"variance", c.beta_prior.variance}};
    if (c.beta_prior.mean.size() > 0) bp["mean"] = vector_json(c.beta_prior.mean);
    if (c.beta_prior.covariance.size() > 0) bp["covariance"] = matrix_json(c.beta_prior.covariance);
  }
  return {{"latent_dim", c.latent_dim},
          {"mu_c", c.mu_c},
          {"intercept", c.intercept},
          {"beta_prior", bp},
          {"sigma_b2_prior", {{"alpha", c.sigma_b2_prior.alpha}, {"gamma", c.sigma_b2_prior.gamma}}},
          {"sigma_c2_prior", {{"alpha", c.sigma_c2_prior.alpha}, {"gamma", c.sigma_c2_prior.gamma}}}};
}

json to_json(const McmcSettings& s) {
  return {{"iterations", s.iterations},
          {"burn_in", s.burn_in},
          {"thin", s.thin},
          {"seed", s.seed},
          {"rw_step", s.rw_step},
          {"adapt", s.adapt},
          {"target_acceptance", s.target_acceptance},
          {"location_move", s.location_move},
          {"location_step", s.location_step},
          {"store_latent", s.store_latent},
          {"store_w", s.store_w},
          {"threads", s.threads},
          {"check_consistency", s.check_consistency}};
}

json to_json(const SimulationDesign& d) {
  return {{"num_actors", d.num_actors},       {"beta", d.beta},
          {"covariate_correlation", d.covariate_correlation},
          {"mu_b", d.mu_b},                   {"sigma_b2", d.sigma_b2},
          {"latent_dim", d.latent_dim},       {"uv_correlation", d.uv_correlation},
          {"mu_c", d.mu_c},                   {"sigma_c2", d.sigma_c2},
          {"message_rate", d.message_rate}};
}

json to_json(const PpcOptions& o) {
  std::vector<std::string> stats;
  if (o.t1) stats.emplace_back("t1");
  if (o.t2) stats.emplace_back("t2");
  if (o.t3) stats.emplace_back("t3");
  if (o.t4) stats.emplace_back("t4");
  return {{"statistics", stats},
          {"t2_senders", o.t2_senders},
          {"max_replicates", o.max_replicates},
          {"reuse_w", o.reuse_w},
          {"seed", o.seed},
          {"threads", o.threads}};
}

json state_to_json(const LatentState& s) {
  return {{"beta", vector_json(s.beta)},       {"b", vector_json(s.b)},
          {"U", matrix_json(s.U)},             {"V", matrix_json(s.V)},
          {"W", matrix_json(s.W)},             {"c", vector_json(s.c)},
          {"sigma_b2", s.sigma_b2},            {"sigma_c2", s.sigma_c2}};
}

}  // namespace multirecv
