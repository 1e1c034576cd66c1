// Command-line front end: simulate, fit, ppc and summarize over a JSON run
// configuration. Talks to the library through the C API only.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "multirecv/multirecv.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kParse = 3, kNumerical = 4, kIo = 5 };

struct Failure {
  int code;
  std::string message;
};

int exit_code(mr_status status) {
  switch (status) {
    case MR_OK: return kOk;
    case MR_ERR_INVALID_ARGUMENT:
    case MR_ERR_CONFIG: return kConfig;
    case MR_ERR_PARSE: return kParse;
    case MR_ERR_NUMERICAL: return kNumerical;
    case MR_ERR_IO: return kIo;
    default: return kOther;
  }
}

void check(mr_status status) {
  if (status != MR_OK) {
    throw Failure{exit_code(status), std::string(mr_status_string(status)) + ": " + mr_last_error()};
  }
}

[[noreturn]] void config_error(const std::string& message) { throw Failure{kConfig, "configuration error: " + message}; }

std::string take_string(char* s) {
  std::string out(s ? s : "");
  mr_string_free(s);
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw Failure{kIo, "i/o error: cannot write " + path.string()};
}

// Owning wrappers so early exits release handles.
template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
};
using Dataset = Handle<mr_dataset, mr_dataset_free>;
using Draws = Handle<mr_draws, mr_draws_free>;
using Report = Handle<mr_ppc_report, mr_ppc_report_free>;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string output;
  bool raw_factors = false;
};

// Loaded configuration with paths resolved against the config file location.
struct Run {
  json config = json::object();
  fs::path base = ".";
  fs::path output;

  fs::path resolve(const std::string& p) const { return fs::path(p).is_absolute() ? fs::path(p) : base / p; }

  json section(const char* name) const {
    if (!config.contains(name)) return json::object();
    const json& s = config.at(name);
    if (!s.is_object()) config_error(std::string("'") + name + "' must be an object");
    return s;
  }

  std::string path_field(const char* name) const {
    if (!config.contains(name) || !config.at(name).is_string()) config_error(std::string("missing path '") + name + "'");
    return resolve(config.at(name).get<std::string>()).string();
  }
};

Run load_run(const Options& opt) {
  Run run;
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path, std::ios::binary);
    if (!in) config_error("cannot read config file " + opt.config_path);
    std::stringstream text;
    text << in.rdbuf();
    try {
      run.config = json::parse(text.str());
    } catch (const json::parse_error& e) {
      config_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!run.config.is_object()) config_error("config must be a JSON object");
    run.base = fs::path(opt.config_path).parent_path();
    if (run.base.empty()) run.base = ".";
  }
  if (opt.seed) run.config["seed"] = *opt.seed;
  if (opt.threads) {
    if (*opt.threads < 1) config_error("--threads must be at least 1");
    run.config["threads"] = *opt.threads;
  }
  if (!opt.output.empty()) {
    run.output = opt.output;
    run.config["output"] = opt.output;
  } else if (run.config.contains("output") && run.config.at("output").is_string()) {
    run.output = run.resolve(run.config.at("output").get<std::string>());
  } else {
    config_error("no output directory (use --output or the 'output' key)");
  }
  for (const char* key : {"seed", "threads"}) {
    if (run.config.contains(key) && !run.config.at(key).is_number_integer()) {
      config_error(std::string("'") + key + "' must be an integer");
    }
  }
  std::error_code ec;
  fs::create_directories(run.output, ec);
  if (ec) throw Failure{kIo, "i/o error: cannot create " + run.output.string() + ": " + ec.message()};
  return run;
}

// Top-level seed and threads fill a section unless the section sets them;
// command-line overrides always win.
json with_seed_threads(json section, const Run& run, const Options& opt) {
  if (run.config.contains("seed") && (opt.seed || !section.contains("seed"))) section["seed"] = run.config.at("seed");
  if (run.config.contains("threads") && (opt.threads || !section.contains("threads"))) {
    section["threads"] = run.config.at("threads");
  }
  return section;
}

void echo_config(const Run& run, const char* command) {
  json echo = run.config;
  echo["command"] = command;
  write_file(run.output / "config.json", echo.dump(2) + "\n");
}

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) config_error(std::string(what) + " not found: " + path);
}

// Dataset from "dataset" (binary container) or "events" (log + covariates).
// Returns covariate and actor labels when built from events.
json open_dataset(const Run& run, Dataset& ds) {
  if (run.config.contains("events")) {
    const json ev = run.section("events");
    if (!ev.contains("path")) config_error("events.path is required");
    const std::string events = run.resolve(ev.at("path").get<std::string>()).string();
    require_file(events, "event log");
    std::string attributes;
    if (ev.contains("attributes")) {
      attributes = run.resolve(ev.at("attributes").get<std::string>()).string();
      require_file(attributes, "attribute file");
    }
    const std::string covariates = ev.contains("covariates") ? ev.at("covariates").dump() : std::string();
    char* info = nullptr;
    check(mr_dataset_from_events(events.c_str(), attributes.c_str(), covariates.c_str(), &ds.ptr, &info));
    return json::parse(take_string(info));
  }
  const std::string path = run.path_field("dataset");
  require_file(path, "dataset");
  check(mr_dataset_load(path.c_str(), &ds.ptr));
  return json::object();
}

int cmd_simulate(const Options& opt) {
  const Run run = load_run(opt);
  const std::uint64_t seed = run.config.value("seed", std::uint64_t{1});
  Dataset ds;
  char* truth = nullptr;
  check(mr_simulate(run.section("design").dump().c_str(), seed, &ds.ptr, &truth));
  const json truth_json = json::parse(take_string(truth));
  check(mr_dataset_save(ds.ptr, (run.output / "dataset.mrds").string().c_str()));
  write_file(run.output / "truth.json", truth_json.dump(2) + "\n");
  echo_config(run, "simulate");
  std::printf("simulated %zu messages among %d actors, mean receiver-set size %.4f\n", mr_dataset_num_messages(ds.ptr),
              mr_dataset_num_actors(ds.ptr), mr_dataset_mean_receivers(ds.ptr));
  return kOk;
}

int cmd_fit(const Options& opt) {
  const Run run = load_run(opt);
  Dataset ds;
  const json info = open_dataset(run, ds);
  const json model = run.section("model");
  const json mcmc = with_seed_threads(run.section("mcmc"), run, opt);
  Draws draws;
  check(mr_fit(ds.ptr, model.dump().c_str(), mcmc.dump().c_str(), &draws.ptr));
  check(mr_draws_save(draws.ptr, run.output.string().c_str()));

  char* diag = nullptr;
  check(mr_draws_diagnostics_json(draws.ptr, &diag));
  const json diagnostics = json::parse(take_string(diag));
  write_file(run.output / "convergence.json", diagnostics.dump(2) + "\n");
  write_file(run.output / "timing.json", json{{"wall_seconds", mr_draws_wall_seconds(draws.ptr)}}.dump(2) + "\n");
  if (!info.empty()) {
    json labels = info;
    json coefficients = json::array();
    if (model.value("intercept", true)) coefficients.push_back("intercept");
    for (const auto& name : info.at("covariates")) coefficients.push_back(name);
    labels["coefficients"] = coefficients;
    write_file(run.output / "labels.json", labels.dump(2) + "\n");
  }
  echo_config(run, "fit");
  std::printf("retained %zu draws from %zu messages; z acceptance %.3f, sigma_c2 acceptance %.3f\n",
              mr_draws_count(draws.ptr), mr_dataset_num_messages(ds.ptr),
              diagnostics.at("acceptance").at("z").get<double>(),
              diagnostics.at("acceptance").at("sigma_c2").get<double>());
  return kOk;
}

int cmd_ppc(const Options& opt) {
  const Run run = load_run(opt);
  Dataset ds;
  open_dataset(run, ds);
  const std::string draws_dir = run.path_field("draws");
  require_file(draws_dir, "draw directory");
  Draws draws;
  check(mr_draws_load(draws_dir.c_str(), &draws.ptr));

  json ppc = with_seed_threads(run.section("ppc"), run, opt);
  const bool samples = ppc.value("include_samples", false);
  ppc.erase("include_samples");
  Report report;
  check(mr_ppc_run(ds.ptr, draws.ptr, ppc.dump().c_str(), &report.ptr));
  check(mr_ppc_report_write(report.ptr, run.output.string().c_str(), samples ? 1 : 0));
  echo_config(run, "ppc");
  for (int which : {3, 4}) {
    double observed = 0, lower = 0, upper = 0, ppp = 0;
    if (mr_ppc_transitivity(report.ptr, which, &observed, &lower, &upper, &ppp) == MR_OK) {
      std::printf("t%d observed %.6g, replicate 95%% band [%.6g, %.6g], ppp %.3f\n", which, observed, lower, upper, ppp);
    }
  }
  return kOk;
}

int cmd_summarize(const Options& opt) {
  const Run run = load_run(opt);
  const std::string draws_dir = run.path_field("draws");
  require_file(draws_dir, "draw directory");
  Draws draws;
  check(mr_draws_load(draws_dir.c_str(), &draws.ptr));

  json summary = run.section("summary");
  if (opt.raw_factors) summary["raw_factors"] = true;
  if (!summary.contains("coefficient_names") && fs::exists(fs::path(draws_dir) / "labels.json")) {
    std::ifstream in(fs::path(draws_dir) / "labels.json");
    const json labels = json::parse(in, nullptr, false);
    if (labels.is_object() && labels.contains("coefficients")) summary["coefficient_names"] = labels.at("coefficients");
  }
  if (summary.value("raw_factors", false)) {
    std::fprintf(stderr,
                 "warning: raw latent factors are identified only up to a joint rotation and sign; "
                 "intervals for individual coordinates are not meaningful across runs\n");
  }
  check(mr_summarize_write(draws.ptr, summary.dump().c_str(), run.output.string().c_str()));
  echo_config(run, "summarize");
  std::printf("summarized %zu draws into %s\n", mr_draws_count(draws.ptr), run.output.string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple-receiver relational event model: simulate, fit, check and summarize"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mr_version()));

  Options opt;
  std::uint64_t seed = 0;
  int threads = 1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "random seed (overrides the configuration)");
    sub->add_option("--threads", threads, "worker threads (overrides the configuration)");
    sub->add_option("--output", opt.output, "output directory");
  };

  auto* simulate = app.add_subcommand("simulate", "simulate a dataset from a design");
  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler and store posterior draws");
  auto* ppc = app.add_subcommand("ppc", "posterior predictive checks");
  auto* summarize = app.add_subcommand("summarize", "posterior summaries of stored draws");
  for (auto* sub : {simulate, fit, ppc, summarize}) add_common(sub);
  summarize->add_flag("--raw-factors", opt.raw_factors, "also summarize raw U and V coordinates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  for (auto* sub : {simulate, fit, ppc, summarize}) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed") > 0) opt.seed = seed;
    if (sub->count("--threads") > 0) opt.threads = threads;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(opt);
    if (fit->parsed()) return cmd_fit(opt);
    if (ppc->parsed()) return cmd_ppc(opt);
    return cmd_summarize(opt);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return f.code;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: configuration error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
}
