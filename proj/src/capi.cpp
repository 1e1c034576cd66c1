#include "multirecv/multirecv.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "multirecv/config.hpp"
#include "multirecv/data_io.hpp"
#include "multirecv/errors.hpp"
#include "multirecv/mcmc.hpp"
#include "multirecv/ppc.hpp"
#include "multirecv/reports.hpp"
#include "multirecv/storage.hpp"
#include "multirecv/summary.hpp"

struct mr_dataset {
  multirecv::EventDataset data;
};

struct mr_draws {
  multirecv::PosteriorDraws draws;
};

struct mr_ppc_report {
  multirecv::PpcReport report;
};

namespace {

thread_local std::string last_error;

mr_status fail(mr_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <class F>
mr_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return MR_OK;
  } catch (const multirecv::InvalidArgument& e) {
    return fail(MR_ERR_INVALID_ARGUMENT, e.what());
  } catch (const multirecv::ConfigError& e) {
    return fail(MR_ERR_CONFIG, e.what());
  } catch (const multirecv::ParseError& e) {
    return fail(MR_ERR_PARSE, e.what());
  } catch (const multirecv::NumericalError& e) {
    return fail(MR_ERR_NUMERICAL, e.what());
  } catch (const multirecv::IoError& e) {
    return fail(MR_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(MR_ERR_IO, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(MR_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return fail(MR_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MR_ERR_INTERNAL, "unknown error");
  }
}

char* duplicate(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse_or_empty(const char* text) {
  if (!text || !*text) return nlohmann::json::object();
  return multirecv::parse_config_text(text);
}

void require(const void* p, const char* what) {
  if (!p) throw multirecv::InvalidArgument(std::string(what) + " is null");
}

}  // namespace

extern "C" {

const char* mr_version(void) { return "0.1.0"; }

const char* mr_status_string(mr_status status) {
  switch (status) {
    case MR_OK: return "ok";
    case MR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MR_ERR_CONFIG: return "configuration error";
    case MR_ERR_PARSE: return "parse error";
    case MR_ERR_NUMERICAL: return "numerical error";
    case MR_ERR_IO: return "i/o error";
    case MR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mr_last_error(void) { return last_error.c_str(); }

void mr_string_free(char* s) { std::free(s); }

mr_status mr_simulate(const char* design_json, uint64_t seed, mr_dataset** out, char** truth_json) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    const auto design = multirecv::simulation_design_from_json(parse_or_empty(design_json));
    multirecv::Rng rng(seed, 0);
    auto [data, truth] = multirecv::simulate_dataset(design, rng);
    auto handle = std::make_unique<mr_dataset>(mr_dataset{std::move(data)});
    if (truth_json) *truth_json = duplicate(multirecv::state_to_json(truth).dump());
    *out = handle.release();
  });
}

mr_status mr_dataset_load(const char* path, mr_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new mr_dataset{multirecv::load_dataset(path)};
  });
}

mr_status mr_dataset_save(const mr_dataset* ds, const char* path) {
  return guarded([&] {
    require(ds, "dataset");
    require(path, "path");
    multirecv::save_dataset(ds->data, path);
  });
}

mr_status mr_dataset_from_events(const char* events_path, const char* attributes_path, const char* covariates_json,
                                 mr_dataset** out, char** info_json) {
  return guarded([&] {
    require(events_path, "events_path");
    require(out, "out");
    *out = nullptr;
    multirecv::ActorMap actors;
    std::optional<multirecv::ActorAttributes> attributes;
    if (attributes_path && *attributes_path) {
      attributes = multirecv::load_attributes(attributes_path, actors);
    } else {
      actors = multirecv::collect_actors(events_path);
    }
    const auto spec =
        multirecv::parse_covariate_spec(covariates_json && *covariates_json ? covariates_json : "{\"terms\": []}");
    const auto log = multirecv::load_events(events_path, actors);
    auto data = multirecv::build_covariates(log, attributes ? &*attributes : nullptr, spec);
    auto handle = std::make_unique<mr_dataset>(mr_dataset{std::move(data)});
    if (info_json) {
      *info_json = duplicate(nlohmann::json{{"actors", actors.labels()}, {"covariates", spec.names()}}.dump());
    }
    *out = handle.release();
  });
}

void mr_dataset_free(mr_dataset* ds) { delete ds; }

int mr_dataset_num_actors(const mr_dataset* ds) { return ds ? ds->data.num_actors() : 0; }

int mr_dataset_num_covariates(const mr_dataset* ds) { return ds ? ds->data.num_covariates() : 0; }

size_t mr_dataset_num_messages(const mr_dataset* ds) { return ds ? ds->data.size() : 0; }

double mr_dataset_mean_receivers(const mr_dataset* ds) {
  return ds && !ds->data.empty() ? ds->data.mean_receiver_count() : 0.0;
}

mr_status mr_dataset_message(const mr_dataset* ds, size_t i, int* sender, int* receivers, size_t capacity,
                             size_t* count) {
  return guarded([&] {
    require(ds, "dataset");
    if (i >= ds->data.size()) throw multirecv::InvalidArgument("message index out of range");
    const auto& msg = ds->data[i];
    if (sender) *sender = msg.sender;
    if (count) *count = msg.receivers.size();
    if (receivers) {
      for (std::size_t k = 0; k < msg.receivers.size() && k < capacity; ++k) receivers[k] = msg.receivers[k];
    }
  });
}

mr_status mr_fit(const mr_dataset* ds, const char* model_json, const char* mcmc_json, mr_draws** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(out, "out");
    *out = nullptr;
    const auto config = multirecv::model_config_from_json(parse_or_empty(model_json));
    const auto settings = multirecv::mcmc_settings_from_json(parse_or_empty(mcmc_json));
    auto draws = multirecv::run_chain(ds->data, config, settings);
    draws.config_echo = nlohmann::json{{"model", multirecv::to_json(config)}, {"mcmc", multirecv::to_json(settings)}}.dump();
    *out = new mr_draws{std::move(draws)};
  });
}

mr_status mr_draws_save(const mr_draws* draws, const char* dir) {
  return guarded([&] {
    require(draws, "draws");
    require(dir, "dir");
    multirecv::save_draws(draws->draws, dir);
  });
}

mr_status mr_draws_load(const char* dir, mr_draws** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = nullptr;
    *out = new mr_draws{multirecv::load_draws(dir)};
  });
}

void mr_draws_free(mr_draws* draws) { delete draws; }

size_t mr_draws_count(const mr_draws* draws) { return draws ? draws->draws.size() : 0; }

double mr_draws_wall_seconds(const mr_draws* draws) { return draws ? draws->draws.wall_seconds : 0.0; }

mr_status mr_draws_block(const mr_draws* draws, const char* name, double* buffer, size_t capacity, size_t* needed) {
  return guarded([&] {
    require(draws, "draws");
    require(name, "name");
    const auto& d = draws->draws;
    const std::string block(name);
    std::vector<double> values;
    auto matrix = [&](const Eigen::MatrixXd& M) {
      for (Eigen::Index r = 0; r < M.rows(); ++r)
        for (Eigen::Index c = 0; c < M.cols(); ++c) values.push_back(M(r, c));
    };
    if (block == "beta") {
      matrix(d.beta);
    } else if (block == "b") {
      matrix(d.b);
    } else if (block == "sigma_b2") {
      values.assign(d.sigma_b2.data(), d.sigma_b2.data() + d.sigma_b2.size());
    } else if (block == "sigma_c2") {
      values.assign(d.sigma_c2.data(), d.sigma_c2.data() + d.sigma_c2.size());
    } else if (block == "U" || block == "V" || block == "W") {
      const auto& list = block == "U" ? d.U : block == "V" ? d.V : d.W;
      for (const auto& M : list) matrix(M);
    } else {
      throw multirecv::InvalidArgument("unknown draw block '" + block + "'");
    }
    if (needed) *needed = values.size();
    if (buffer) {
      if (capacity < values.size()) throw multirecv::InvalidArgument("buffer too small for block '" + block + "'");
      std::copy(values.begin(), values.end(), buffer);
    }
  });
}

mr_status mr_draws_diagnostics_json(const mr_draws* draws, char** out) {
  return guarded([&] {
    require(draws, "draws");
    require(out, "out");
    *out = duplicate(multirecv::convergence_to_json(draws->draws).dump());
  });
}

mr_status mr_ppc_run(const mr_dataset* ds, const mr_draws* draws, const char* ppc_json, mr_ppc_report** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(draws, "draws");
    require(out, "out");
    *out = nullptr;
    const auto options = multirecv::ppc_options_from_json(parse_or_empty(ppc_json));
    *out = new mr_ppc_report{multirecv::run_ppc(ds->data, draws->draws, options)};
  });
}

mr_status mr_ppc_report_json(const mr_ppc_report* report, int include_samples, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = duplicate(multirecv::ppc_report_to_json(report->report, include_samples != 0).dump());
  });
}

mr_status mr_ppc_report_write(const mr_ppc_report* report, const char* dir, int include_samples) {
  return guarded([&] {
    require(report, "report");
    require(dir, "dir");
    multirecv::write_ppc_report(report->report, dir, include_samples != 0);
  });
}

mr_status mr_ppc_transitivity(const mr_ppc_report* report, int which, double* observed, double* lower, double* upper,
                              double* ppp) {
  return guarded([&] {
    require(report, "report");
    if (which != 3 && which != 4) throw multirecv::InvalidArgument("transitivity statistic must be 3 or 4");
    const auto& check = which == 3 ? report->report.t3 : report->report.t4;
    if (!check) throw multirecv::InvalidArgument("statistic was not computed");
    if (observed) *observed = check->observed;
    if (lower) *lower = check->quantiles.q025;
    if (upper) *upper = check->quantiles.q975;
    if (ppp) *ppp = check->ppp;
  });
}

void mr_ppc_report_free(mr_ppc_report* report) { delete report; }

namespace {

multirecv::SummaryOptions summary_options(const char* text) {
  const auto j = parse_or_empty(text);
  multirecv::SummaryOptions o;
  for (const auto& [key, value] : j.items()) {
    if (key == "raw_factors") o.raw_factors = value.get<bool>();
    else if (key == "invariant_factors") o.invariant_factors = value.get<bool>();
    else if (key == "coefficient_names") o.coefficient_names = value.get<std::vector<std::string>>();
    else throw multirecv::ConfigError("summary: unknown key '" + key + "'");
  }
  return o;
}

}  // namespace

mr_status mr_summarize(const mr_draws* draws, const char* options_json, char** summary_json) {
  return guarded([&] {
    require(draws, "draws");
    require(summary_json, "summary_json");
    const auto summary = multirecv::summarize_draws(draws->draws, summary_options(options_json));
    *summary_json = duplicate(multirecv::summary_to_json(summary).dump());
  });
}

mr_status mr_summarize_write(const mr_draws* draws, const char* options_json, const char* dir) {
  return guarded([&] {
    require(draws, "draws");
    require(dir, "dir");
    const auto summary = multirecv::summarize_draws(draws->draws, summary_options(options_json));
    multirecv::write_summary(summary, dir);
  });
}

}  // extern "C"
