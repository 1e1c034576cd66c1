#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "multirecv/errors.hpp"
#include "multirecv/storage.hpp"
#include "support.hpp"

using namespace multirecv;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("multirecv_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

EventDataset simulated(std::uint64_t seed) {
  SimulationDesign design;
  design.num_actors = 12;
  design.message_rate = 6;
  Rng rng(seed);
  return simulate_dataset(design, rng).first;
}

}  // namespace

TEST_SUITE("storage") {

TEST_CASE("dataset round trip is exact") {
  const EventDataset d = simulated(1);
  std::stringstream buf;
  write_dataset(d, buf);
  CHECK(read_dataset(buf) == d);

  const fs::path dir = scratch_dir("roundtrip");
  save_dataset(d, dir / "d.mrds");
  CHECK(load_dataset(dir / "d.mrds") == d);
}

TEST_CASE("timestamps and K = 0 survive") {
  const EventDataset d(3, 0,
                       {testing::message(0, {1, 2}, Eigen::MatrixXd(2, 0), 1.5),
                        testing::message(2, {0}, Eigen::MatrixXd(2, 0))});
  std::stringstream buf;
  write_dataset(d, buf);
  const EventDataset back = read_dataset(buf);
  CHECK(back == d);
  CHECK(back[0].timestamp == 1.5);
  CHECK(!back[1].timestamp);
}

TEST_CASE("truncated, versioned and padded inputs fail cleanly") {
  const EventDataset d = simulated(2);
  std::stringstream buf;
  write_dataset(d, buf);
  const std::string bytes = buf.str();
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    std::stringstream in(bytes.substr(0, cut));
    CHECK_THROWS_AS(read_dataset(in), ParseError);
  }
  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  std::stringstream v(wrong_version);
  CHECK_THROWS_AS(read_dataset(v), ParseError);
  std::stringstream padded(bytes + "x");
  CHECK_THROWS_AS(read_dataset(padded), ParseError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.mrds"), IoError);
}

TEST_CASE("numeric arrays") {
  const fs::path dir = scratch_dir("arrays");
  NumericArray a{{2, 3}, {1, 2, 3, 4, 5, -0.0}};
  write_array(dir / "a.bin", a);
  const NumericArray b = read_array(dir / "a.bin");
  CHECK(b.shape == a.shape);
  CHECK(b.values == a.values);
  CHECK(std::signbit(b.values[5]));
}

TEST_CASE("posterior draw directories round trip") {
  const EventDataset d = simulated(3);
  ModelConfig config;
  config.latent_dim = 2;
  McmcSettings settings;
  settings.iterations = 40;
  settings.burn_in = 10;
  settings.thin = 3;
  settings.store_w = true;
  PosteriorDraws draws = run_chain(d, config, settings);
  draws.config_echo = R"({"model": {"latent_dim": 2}})";
  const fs::path dir = scratch_dir("draws");
  save_draws(draws, dir);
  for (const char* f : {"meta.json", "beta.bin", "b.bin", "sigma_b2.bin", "sigma_c2.bin", "U.bin", "V.bin", "W.bin"}) {
    CHECK(fs::exists(dir / f));
  }
  const PosteriorDraws back = load_draws(dir);
  CHECK(back.size() == draws.size());
  CHECK(back.beta == draws.beta);
  CHECK(back.b == draws.b);
  CHECK(back.sigma_b2 == draws.sigma_b2);
  CHECK(back.sigma_c2 == draws.sigma_c2);
  REQUIRE(back.U.size() == draws.U.size());
  CHECK(back.U[3] == draws.U[3]);
  CHECK(back.W.back() == draws.W.back());
  CHECK(back.num_messages == draws.num_messages);
  CHECK(back.z_acceptance == draws.z_acceptance);
  CHECK(back.seed == draws.seed);
  CHECK(nlohmann::json::parse(back.config_echo) == nlohmann::json::parse(draws.config_echo));

  // Saving twice gives identical bytes.
  const fs::path dir2 = scratch_dir("draws2");
  save_draws(back, dir2);
  for (const char* f : {"meta.json", "beta.bin", "U.bin"}) {
    std::ifstream x(dir / f, std::ios::binary), y(dir2 / f, std::ios::binary);
    std::stringstream xs, ys;
    xs << x.rdbuf();
    ys << y.rdbuf();
    CHECK(xs.str() == ys.str());
  }

  fs::remove(dir / "beta.bin");
  CHECK_THROWS(load_draws(dir));
}

}
