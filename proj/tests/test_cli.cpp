// Runs the command-line tool as a subprocess.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

fs::path workdir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("multirecv_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(MULTIRECV_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "timing.json") {
      out[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
  }
  return out;
}

const char* kSim = R"({"seed": 5, "output": "sim", "design": {"num_actors": 10, "message_rate": 6}})";
const char* kFit = R"({"seed": 2, "output": "fit", "dataset": "sim/dataset.mrds",
                      "model": {"latent_dim": 1}, "mcmc": {"iterations": 80, "burn_in": 20}})";
const char* kPpc = R"({"seed": 3, "output": "ppc", "dataset": "sim/dataset.mrds", "draws": "fit",
                      "ppc": {"include_samples": true}})";
const char* kSum = R"({"output": "sum", "draws": "fit"})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("full workflow is reproducible byte for byte") {
  std::map<std::string, std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path w = workdir(pass == 0 ? "flow_a" : "flow_b");
    write(w / "sim.json", kSim);
    write(w / "fit.json", kFit);
    write(w / "ppc.json", kPpc);
    write(w / "sum.json", kSum);
    REQUIRE(run("simulate --config " + (w / "sim.json").string()) == 0);
    REQUIRE(run("fit --config " + (w / "fit.json").string()) == 0);
    REQUIRE(run("ppc --config " + (w / "ppc.json").string()) == 0);
    REQUIRE(run("summarize --config " + (w / "sum.json").string()) == 0);
    for (const char* f : {"sim/dataset.mrds", "sim/truth.json", "sim/config.json", "fit/meta.json", "fit/beta.bin",
                          "fit/convergence.json", "fit/timing.json", "ppc/ppc_report.json", "ppc/t1.csv", "ppc/t2.csv",
                          "ppc/transitivity.csv", "sum/summary.json", "sum/parameters.csv"}) {
      CHECK_MESSAGE(fs::exists(w / f), f);
    }
    const auto files = contents(w);
    if (pass == 0) first = files;
    else CHECK(files == first);
  }
}

TEST_CASE("seed override changes the output") {
  const fs::path w = workdir("seed");
  write(w / "sim.json", kSim);
  REQUIRE(run("simulate --config " + (w / "sim.json").string() + " --output " + (w / "a").string()) == 0);
  REQUIRE(run("simulate --config " + (w / "sim.json").string() + " --seed 6 --output " + (w / "b").string()) == 0);
  CHECK(slurp(w / "a" / "dataset.mrds") != slurp(w / "b" / "dataset.mrds"));
  const auto echo = nlohmann::json::parse(slurp(w / "b" / "config.json"));
  CHECK(echo.at("seed") == 6);
  CHECK(echo.at("command") == "simulate");
}

TEST_CASE("three latent dimensions give three draw directories") {
  const fs::path w = workdir("dims");
  write(w / "sim.json", kSim);
  REQUIRE(run("simulate --config " + (w / "sim.json").string()) == 0);
  for (int q = 0; q < 3; ++q) {
    const std::string cfg = R"({"dataset": "sim/dataset.mrds", "model": {"latent_dim": )" + std::to_string(q) +
                            R"(}, "mcmc": {"iterations": 40, "burn_in": 10}})";
    write(w / "fit.json", cfg);
    const fs::path out = w / ("q" + std::to_string(q));
    REQUIRE(run("fit --config " + (w / "fit.json").string() + " --output " + out.string()) == 0);
    const auto meta = nlohmann::json::parse(slurp(out / "meta.json"));
    CHECK(meta.dump().find("\"latent_dim\":" + std::to_string(q)) != std::string::npos);
  }
}

TEST_CASE("exit codes") {
  const fs::path w = workdir("codes");
  write(w / "neg.json", R"({"output": "x", "design": {"message_rate": -2}})");
  CHECK(run("simulate --config " + (w / "neg.json").string()) == 2);
  write(w / "missing.json", R"({"output": "x", "dataset": "nowhere.mrds"})");
  CHECK(run("fit --config " + (w / "missing.json").string()) == 2);
  write(w / "broken.json", "{\"output\": ");
  CHECK(run("simulate --config " + (w / "broken.json").string()) == 2);
  CHECK(run("simulate") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("--help") == 0);

  write(w / "events.csv", "timestamp,sender,receivers\n1,a,b\n2,b,b\n");
  write(w / "ev.json", R"({"output": "x", "events": {"path": "events.csv"}})");
  CHECK(run("fit --config " + (w / "ev.json").string()) == 3);

  // A covariate that is identically zero makes X'X singular under the
  // unit-information prior.
  write(w / "flat.csv", "timestamp,sender,receivers\n1,a,b\n2,b,c\n3,c,a\n4,a,c\n");
  write(w / "num.json", R"({"output": "x", "events": {"path": "flat.csv", "covariates": {"terms": [{"type": "inertia", "window": 0.5}]}},
                             "model": {"beta_prior": {"type": "unit_information"}}, "mcmc": {"iterations": 5, "burn_in": 1}})");
  CHECK(run("fit --config " + (w / "num.json").string()) == 4);
}

TEST_CASE("zero retained draws is an error for ppc") {
  const fs::path w = workdir("nodraws");
  write(w / "sim.json", kSim);
  REQUIRE(run("simulate --config " + (w / "sim.json").string()) == 0);
  write(w / "fit.json", R"({"output": "fit", "dataset": "sim/dataset.mrds", "mcmc": {"iterations": 10, "burn_in": 5, "thin": 10}})");
  REQUIRE(run("fit --config " + (w / "fit.json").string()) == 0);
  write(w / "ppc.json", R"({"output": "ppc", "dataset": "sim/dataset.mrds", "draws": "fit"})");
  CHECK(run("ppc --config " + (w / "ppc.json").string()) == 2);
}

TEST_CASE("summaries without coefficients") {
  const fs::path w = workdir("nobeta");
  write(w / "sim.json", R"({"output": "sim", "design": {"num_actors": 6, "message_rate": 5, "beta": []}})");
  REQUIRE(run("simulate --config " + (w / "sim.json").string()) == 0);
  write(w / "fit.json", R"({"output": "fit", "dataset": "sim/dataset.mrds", "model": {"intercept": false},
                             "mcmc": {"iterations": 50, "burn_in": 10}})");
  REQUIRE(run("fit --config " + (w / "fit.json").string()) == 0);
  write(w / "sum.json", R"({"output": "sum", "draws": "fit"})");
  REQUIRE(run("summarize --config " + (w / "sum.json").string()) == 0);
  const auto j = nlohmann::json::parse(slurp(w / "sum" / "summary.json"));
  CHECK_FALSE(j.contains("beta"));
  for (const auto& p : j.at("b")) CHECK(p.at("lower").get<double>() < p.at("upper").get<double>());
}

TEST_CASE("event logs with attributes and covariates") {
  const fs::path w = workdir("events");
  write(w / "events.csv",
        "timestamp,sender,receivers\n0,ann,bob\n5,bob,ann;cat\n9,cat,dan\n12,dan,ann\n20,ann,bob;dan\n"
        "25,bob,cat\n31,cat,ann\n40,dan,bob;cat\n44,ann,cat\n50,bob,dan\n");
  write(w / "people.csv", "actor,team\nann,red\nbob,red\ncat,blue\ndan,blue\n");
  write(w / "fit.json", R"({"output": "fit", "events": {"path": "events.csv", "attributes": "people.csv",
                             "covariates": {"terms": [{"type": "same", "field": "team"}, {"type": "reciprocity", "window": 30}]}},
                             "model": {"latent_dim": 1}, "mcmc": {"iterations": 60, "burn_in": 20}})");
  REQUIRE(run("fit --config " + (w / "fit.json").string()) == 0);
  const auto labels = nlohmann::json::parse(slurp(w / "fit" / "labels.json"));
  CHECK(labels.at("coefficients").size() == 3);
  write(w / "sum.json", R"({"output": "sum", "draws": "fit"})");
  REQUIRE(run("summarize --config " + (w / "sum.json").string() + " --raw-factors") == 0);
  const auto j = nlohmann::json::parse(slurp(w / "sum" / "summary.json"));
  CHECK(j.at("beta").at(1).at("name") == "same.team");
  CHECK(j.contains("raw_factors"));
}

}
