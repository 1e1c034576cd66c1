#include "multirecv/reports.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "multirecv/errors.hpp"
#include "multirecv/model.hpp"

namespace multirecv {

namespace {

using nlohmann::json;

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json quantiles_json(const Quantiles& q) {
  return {{"q025", q.q025}, {"q25", q.q25}, {"q50", q.q50}, {"q75", q.q75}, {"q975", q.q975}};
}

std::string quantile_cells(const Quantiles& q) {
  return format_number(q.q025) + "," + format_number(q.q25) + "," + format_number(q.q50) + "," +
         format_number(q.q75) + "," + format_number(q.q975);
}

std::vector<double> column(const Eigen::MatrixXd& M, Eigen::Index k) {
  std::vector<double> out(static_cast<std::size_t>(M.rows()));
  for (Eigen::Index i = 0; i < M.rows(); ++i) out[static_cast<std::size_t>(i)] = M(i, k);
  return out;
}

json scalar_json(const ScalarCheck& c, bool samples) {
  json j = {{"observed", c.observed},
            {"quantiles", quantiles_json(c.quantiles)},
            {"ppp", c.ppp},
            {"inside_central_95", c.inside_central_95()}};
  if (samples) j["replicates"] = c.replicates;
  return j;
}

json parameter_json(const ParameterSummary& s) {
  return {{"name", s.name}, {"mean", number(s.mean)}, {"sd", number(s.sd)},
          {"lower", number(s.lower)}, {"upper", number(s.upper)}, {"rhat", number(s.rhat)}};
}

json parameter_list(const std::vector<ParameterSummary>& list) {
  json out = json::array();
  for (const auto& s : list) out.push_back(parameter_json(s));
  return out;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), end);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

json ppc_report_to_json(const PpcReport& report, bool include_samples) {
  json j = {{"num_replicates", report.num_replicates}, {"draw_indices", report.draw_indices}};
  if (report.t1) {
    const auto& t1 = *report.t1;
    json rows = json::array();
    for (std::size_t k = 0; k < t1.sizes.size(); ++k) {
      const auto col = column(t1.replicates, static_cast<Eigen::Index>(k));
      json row = {{"size", t1.sizes[k]},
                  {"observed", t1.observed(static_cast<Eigen::Index>(k))},
                  {"quantiles", quantiles_json(t1.quantiles[k])},
                  {"ppp", posterior_predictive_pvalue(t1.observed(static_cast<Eigen::Index>(k)), col)}};
      if (include_samples) row["replicates"] = col;
      rows.push_back(row);
    }
    j["t1"] = rows;
  }
  if (!report.t2.empty()) {
    json senders = json::array();
    for (const auto& check : report.t2) {
      json receivers = json::array();
      for (Eigen::Index row = 0; row < check.observed.size(); ++row) {
        const auto col = column(check.replicates, row);
        json r = {{"receiver", receiver_actor(check.sender, static_cast<int>(row))},
                  {"observed", check.observed(row)},
                  {"quantiles", quantiles_json(check.quantiles[static_cast<std::size_t>(row)])},
                  {"ppp", posterior_predictive_pvalue(check.observed(row), col)}};
        if (include_samples) r["replicates"] = col;
        receivers.push_back(r);
      }
      std::vector<int> order;
      for (int row : check.observed_order) order.push_back(receiver_actor(check.sender, row));
      senders.push_back({{"sender", check.sender}, {"receivers", receivers}, {"observed_order", order}});
    }
    j["t2"] = senders;
  }
  if (report.t3) j["t3"] = scalar_json(*report.t3, include_samples);
  if (report.t4) j["t4"] = scalar_json(*report.t4, include_samples);
  return j;
}

void write_ppc_report(const PpcReport& report, const std::filesystem::path& dir, bool include_samples) {
  std::filesystem::create_directories(dir);
  write_text(dir / "ppc_report.json", ppc_report_to_json(report, include_samples).dump(2) + "\n");

  if (report.t1) {
    std::ostringstream csv;
    csv << "size,observed,q025,q25,q50,q75,q975\n";
    for (std::size_t k = 0; k < report.t1->sizes.size(); ++k) {
      csv << report.t1->sizes[k] << ',' << format_number(report.t1->observed(static_cast<Eigen::Index>(k))) << ','
          << quantile_cells(report.t1->quantiles[k]) << '\n';
    }
    write_text(dir / "t1.csv", csv.str());
  }
  if (!report.t2.empty()) {
    std::ostringstream csv;
    csv << "sender,receiver,observed_rank,observed,q025,q25,q50,q75,q975\n";
    for (const auto& check : report.t2) {
      std::vector<int> rank(static_cast<std::size_t>(check.observed.size()));
      for (std::size_t k = 0; k < check.observed_order.size(); ++k) {
        rank[static_cast<std::size_t>(check.observed_order[k])] = static_cast<int>(k) + 1;
      }
      for (Eigen::Index row = 0; row < check.observed.size(); ++row) {
        csv << check.sender << ',' << receiver_actor(check.sender, static_cast<int>(row)) << ','
            << rank[static_cast<std::size_t>(row)] << ',' << format_number(check.observed(row)) << ','
            << quantile_cells(check.quantiles[static_cast<std::size_t>(row)]) << '\n';
      }
    }
    write_text(dir / "t2.csv", csv.str());
  }
  if (report.t3 || report.t4) {
    std::ostringstream csv;
    csv << "statistic,observed,q025,q25,q50,q75,q975,ppp\n";
    if (report.t3) {
      csv << "t3," << format_number(report.t3->observed) << ',' << quantile_cells(report.t3->quantiles) << ','
          << format_number(report.t3->ppp) << '\n';
    }
    if (report.t4) {
      csv << "t4," << format_number(report.t4->observed) << ',' << quantile_cells(report.t4->quantiles) << ','
          << format_number(report.t4->ppp) << '\n';
    }
    write_text(dir / "transitivity.csv", csv.str());
  }
}

json summary_to_json(const PosteriorSummary& s) {
  json j = {{"draws", s.draws}};
  if (!s.beta.empty()) j["beta"] = parameter_list(s.beta);
  j["b"] = parameter_list(s.b);
  j["sigma_b2"] = parameter_json(s.sigma_b2);
  j["sigma_c2"] = parameter_json(s.sigma_c2);
  if (!s.uut.empty()) j["UUt"] = parameter_list(s.uut);
  if (!s.uv.empty()) j["uv"] = parameter_list(s.uv);
  if (!s.raw_u.empty()) {
    j["raw_factors"] = {
        {"warning", "raw U and V are identified only up to a joint rotation and sign; prefer UUt and uv"},
        {"U", parameter_list(s.raw_u)},
        {"V", parameter_list(s.raw_v)}};
  }
  j["max_rhat"] = number(s.max_rhat);
  return j;
}

void write_summary(const PosteriorSummary& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "summary.json", summary_to_json(s).dump(2) + "\n");
  std::ostringstream csv;
  csv << "block,name,mean,sd,lower,upper,rhat\n";
  auto emit = [&](const char* block, const ParameterSummary& p) {
    csv << block << ',' << p.name << ',' << format_number(p.mean) << ',' << format_number(p.sd) << ','
        << format_number(p.lower) << ',' << format_number(p.upper) << ',' << format_number(p.rhat) << '\n';
  };
  for (const auto& p : s.beta) emit("beta", p);
  for (const auto& p : s.b) emit("b", p);
  emit("sigma_b2", s.sigma_b2);
  emit("sigma_c2", s.sigma_c2);
  for (const auto& p : s.uut) emit("UUt", p);
  for (const auto& p : s.uv) emit("uv", p);
  for (const auto& p : s.raw_u) emit("U_raw", p);
  for (const auto& p : s.raw_v) emit("V_raw", p);
  write_text(dir / "parameters.csv", csv.str());
}

json convergence_to_json(const PosteriorDraws& d) {
  json rhat = json::object();
  std::vector<double> col(d.size());
  for (Eigen::Index k = 0; k < d.beta.cols(); ++k) {
    for (std::size_t i = 0; i < d.size(); ++i) col[i] = d.beta(static_cast<Eigen::Index>(i), k);
    rhat["beta[" + std::to_string(k) + "]"] = number(split_rhat(col));
  }
  rhat["sigma_b2"] = number(split_rhat({d.sigma_b2.data(), d.size()}));
  rhat["sigma_c2"] = number(split_rhat({d.sigma_c2.data(), d.size()}));
  return {{"draws", d.size()},
          {"acceptance", {{"z", d.z_acceptance}, {"sigma_c2", d.sigma_c2_acceptance}, {"location", d.location_acceptance}}},
          {"steps", {{"sigma_c2", d.sigma_c2_step}, {"location", d.location_step}}},
          {"split_rhat", rhat}};
}

}  // namespace multirecv
