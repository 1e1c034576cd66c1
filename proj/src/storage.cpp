#include "multirecv/storage.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "multirecv/errors.hpp"

namespace multirecv {

static_assert(std::endian::native == std::endian::little, "storage format assumes a little-endian host");

namespace {

using nlohmann::json;

constexpr std::array<char, 4> kDatasetMagic{'M', 'R', 'D', 'S'};
constexpr std::array<char, 4> kDatasetEnd{'E', 'N', 'D', '.'};
constexpr std::array<char, 4> kArrayMagic{'M', 'R', 'A', 'R'};
constexpr std::uint32_t kArrayVersion = 1;
constexpr int kDrawsFormatVersion = 1;

template <class T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in, const char* what) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ParseError(std::string("truncated input while reading ") + what);
  }
  return value;
}

void get_bytes(std::istream& in, char* dst, std::size_t count, const char* what) {
  if (!in.read(dst, static_cast<std::streamsize>(count))) {
    throw ParseError(std::string("truncated input while reading ") + what);
  }
}

void expect_tag(std::istream& in, const std::array<char, 4>& tag, const char* what) {
  std::array<char, 4> got{};
  get_bytes(in, got.data(), got.size(), what);
  if (got != tag) throw ParseError(std::string("bad ") + what);
}

void require_file_ok(const std::ostream& out, const std::filesystem::path& path) {
  if (!out) throw IoError("failed writing " + path.string());
}

NumericArray to_array(const Eigen::MatrixXd& M) {
  NumericArray a;
  a.shape = {static_cast<std::uint64_t>(M.rows()), static_cast<std::uint64_t>(M.cols())};
  a.values.resize(static_cast<std::size_t>(M.size()));
  Eigen::Map<RowMatrix>(a.values.data(), M.rows(), M.cols()) = M;
  return a;
}

NumericArray to_array(const Eigen::VectorXd& v) {
  return {{static_cast<std::uint64_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size())};
}

NumericArray to_array(const std::vector<Eigen::MatrixXd>& stack, Eigen::Index rows, Eigen::Index cols) {
  NumericArray a;
  a.shape = {stack.size(), static_cast<std::uint64_t>(rows), static_cast<std::uint64_t>(cols)};
  a.values.resize(stack.size() * static_cast<std::size_t>(rows * cols));
  for (std::size_t d = 0; d < stack.size(); ++d) {
    Eigen::Map<RowMatrix>(a.values.data() + d * static_cast<std::size_t>(rows * cols), rows, cols) = stack[d];
  }
  return a;
}

void check_shape(const NumericArray& a, const std::vector<std::uint64_t>& shape, const std::string& name) {
  if (a.shape != shape) throw ParseError("array '" + name + "' has an unexpected shape");
}

Eigen::MatrixXd matrix_of(const NumericArray& a) {
  return Eigen::Map<const RowMatrix>(a.values.data(), static_cast<Eigen::Index>(a.shape[0]),
                                     static_cast<Eigen::Index>(a.shape[1]));
}

std::vector<Eigen::MatrixXd> stack_of(const NumericArray& a) {
  const auto rows = static_cast<Eigen::Index>(a.shape[1]);
  const auto cols = static_cast<Eigen::Index>(a.shape[2]);
  std::vector<Eigen::MatrixXd> out;
  for (std::uint64_t d = 0; d < a.shape[0]; ++d) {
    out.emplace_back(Eigen::Map<const RowMatrix>(a.values.data() + d * static_cast<std::size_t>(rows * cols), rows, cols));
  }
  return out;
}

}  // namespace

void write_dataset(const EventDataset& data, std::ostream& out) {
  out.write(kDatasetMagic.data(), kDatasetMagic.size());
  put<std::uint32_t>(out, kDatasetVersion);
  put<std::int32_t>(out, data.num_actors());
  put<std::int32_t>(out, data.num_covariates());
  put<std::uint64_t>(out, data.size());
  for (const auto& m : data.messages()) {
    put<std::int32_t>(out, m.sender);
    put<std::uint8_t>(out, m.timestamp ? 1 : 0);
    put<double>(out, m.timestamp.value_or(0.0));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.receivers.size()));
    for (int r : m.receivers) put<std::int32_t>(out, r);
    const RowMatrix block = m.covariates;
    out.write(reinterpret_cast<const char*>(block.data()), static_cast<std::streamsize>(block.size() * sizeof(double)));
  }
  out.write(kDatasetEnd.data(), kDatasetEnd.size());
}

EventDataset read_dataset(std::istream& in) {
  expect_tag(in, kDatasetMagic, "dataset magic");
  const auto version = get<std::uint32_t>(in, "dataset version");
  if (version != kDatasetVersion) {
    std::ostringstream msg;
    msg << "unsupported dataset version " << version << " (expected " << kDatasetVersion << ")";
    throw ParseError(msg.str());
  }
  const auto A = get<std::int32_t>(in, "actor count");
  const auto K = get<std::int32_t>(in, "covariate count");
  const auto n = get<std::uint64_t>(in, "message count");
  if (A < 2 || K < 0) throw ParseError("dataset header has invalid dimensions");
  std::vector<Message> messages;
  for (std::uint64_t i = 0; i < n; ++i) {
    Message m;
    m.sender = get<std::int32_t>(in, "sender");
    const auto has_ts = get<std::uint8_t>(in, "timestamp flag");
    const auto ts = get<double>(in, "timestamp");
    if (has_ts) m.timestamp = ts;
    const auto count = get<std::uint32_t>(in, "receiver count");
    if (count > static_cast<std::uint32_t>(A)) throw ParseError("receiver count exceeds actor count");
    m.receivers.resize(count);
    for (auto& r : m.receivers) r = get<std::int32_t>(in, "receiver");
    RowMatrix block(A - 1, K);
    get_bytes(in, reinterpret_cast<char*>(block.data()), static_cast<std::size_t>(block.size()) * sizeof(double),
              "covariates");
    m.covariates = block;
    messages.push_back(std::move(m));
  }
  expect_tag(in, kDatasetEnd, "dataset end marker");
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes after dataset");
  try {
    return EventDataset(A, K, std::move(messages));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("dataset violates invariants: ") + e.what());
  }
}

void save_dataset(const EventDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_dataset(data, out);
  require_file_ok(out, path);
}

EventDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_dataset(in);
}

void write_array(const std::filesystem::path& path, const NumericArray& array) {
  std::uint64_t expected = 1;
  for (auto d : array.shape) expected *= d;
  if (expected != array.values.size()) throw InvalidArgument("write_array: shape does not match value count");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kArrayMagic.data(), kArrayMagic.size());
  put<std::uint32_t>(out, kArrayVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(array.shape.size()));
  for (auto d : array.shape) put<std::uint64_t>(out, d);
  out.write(reinterpret_cast<const char*>(array.values.data()),
            static_cast<std::streamsize>(array.values.size() * sizeof(double)));
  require_file_ok(out, path);
}

NumericArray read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  expect_tag(in, kArrayMagic, "array magic");
  const auto version = get<std::uint32_t>(in, "array version");
  if (version != kArrayVersion) throw ParseError("unsupported array version in " + path.string());
  const auto ndim = get<std::uint32_t>(in, "array rank");
  if (ndim > 8) throw ParseError("array rank too large in " + path.string());
  NumericArray a;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    a.shape.push_back(get<std::uint64_t>(in, "array shape"));
    count *= a.shape.back();
  }
  a.values.resize(count);
  get_bytes(in, reinterpret_cast<char*>(a.values.data()), count * sizeof(double), "array values");
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes in " + path.string());
  return a;
}

void save_draws(const PosteriorDraws& draws, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const bool factors = draws.latent_dim > 0 && !draws.U.empty();
  const bool message_factors = draws.latent_dim > 0 && !draws.W.empty();

  json meta;
  meta["format_version"] = kDrawsFormatVersion;
  meta["num_actors"] = draws.num_actors;
  meta["num_coefficients"] = draws.num_coefficients;
  meta["latent_dim"] = draws.latent_dim;
  meta["num_messages"] = draws.num_messages;
  meta["intercept"] = draws.intercept;
  meta["mu_c"] = draws.mu_c;
  meta["draws"] = draws.size();
  meta["iterations"] = draws.iterations;
  meta["burn_in"] = draws.burn_in;
  meta["thin"] = draws.thin;
  meta["seed"] = draws.seed;
  meta["acceptance"] = {{"z", draws.z_acceptance},
                        {"sigma_c2", draws.sigma_c2_acceptance},
                        {"location", draws.location_acceptance}};
  meta["steps"] = {{"sigma_c2", draws.sigma_c2_step}, {"location", draws.location_step}};
  meta["sweep_order"] = std::vector<std::string>(kSweepOrder.begin(), kSweepOrder.end());
  meta["latent_factors_stored"] = factors;
  meta["message_factors_stored"] = message_factors;
  if (draws.latent_dim > 0) {
    meta["factor_note"] = "U, V, W are identified only up to a joint orthogonal rotation and sign";
  }
  meta["config"] = draws.config_echo.empty() ? json::object() : json::parse(draws.config_echo);
  {
    std::ofstream out(dir / "meta.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << '\n';
    require_file_ok(out, dir / "meta.json");
  }
  write_array(dir / "beta.bin", to_array(draws.beta));
  write_array(dir / "b.bin", to_array(draws.b));
  write_array(dir / "sigma_b2.bin", to_array(draws.sigma_b2));
  write_array(dir / "sigma_c2.bin", to_array(draws.sigma_c2));
  if (factors) {
    write_array(dir / "U.bin", to_array(draws.U, draws.num_actors, draws.latent_dim));
    write_array(dir / "V.bin", to_array(draws.V, draws.num_actors, draws.latent_dim));
  }
  if (message_factors) {
    write_array(dir / "W.bin", to_array(draws.W, static_cast<Eigen::Index>(draws.num_messages), draws.latent_dim));
  }
}

PosteriorDraws load_draws(const std::filesystem::path& dir) {
  json meta;
  {
    std::ifstream in(dir / "meta.json");
    if (!in) throw IoError("cannot open " + (dir / "meta.json").string());
    try {
      meta = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed meta.json: ") + e.what());
    }
  }
  PosteriorDraws d;
  std::size_t count = 0;
  bool factors = false;
  bool message_factors = false;
  try {
    if (meta.at("format_version").get<int>() != kDrawsFormatVersion) {
      throw ParseError("unsupported posterior draw format version");
    }
    d.num_actors = meta.at("num_actors").get<int>();
    d.num_coefficients = meta.at("num_coefficients").get<int>();
    d.latent_dim = meta.at("latent_dim").get<int>();
    d.num_messages = meta.at("num_messages").get<std::size_t>();
    d.intercept = meta.at("intercept").get<bool>();
    d.mu_c = meta.at("mu_c").get<double>();
    count = meta.at("draws").get<std::size_t>();
    d.iterations = meta.at("iterations").get<int>();
    d.burn_in = meta.at("burn_in").get<int>();
    d.thin = meta.at("thin").get<int>();
    d.seed = meta.at("seed").get<std::uint64_t>();
    d.z_acceptance = meta.at("acceptance").at("z").get<double>();
    d.sigma_c2_acceptance = meta.at("acceptance").at("sigma_c2").get<double>();
    d.location_acceptance = meta.at("acceptance").value("location", 0.0);
    d.sigma_c2_step = meta.at("steps").at("sigma_c2").get<double>();
    d.location_step = meta.at("steps").value("location", 0.0);
    factors = meta.at("latent_factors_stored").get<bool>();
    message_factors = meta.at("message_factors_stored").get<bool>();
    if (meta.contains("config") && !meta.at("config").empty()) d.config_echo = meta.at("config").dump();
  } catch (const json::exception& e) {
    throw ParseError(std::string("meta.json: ") + e.what());
  }
  const auto D = static_cast<std::uint64_t>(count);
  const auto A = static_cast<std::uint64_t>(d.num_actors);
  const auto K = static_cast<std::uint64_t>(d.num_coefficients);
  const auto Q = static_cast<std::uint64_t>(d.latent_dim);
  const NumericArray beta = read_array(dir / "beta.bin");
  check_shape(beta, {D, K}, "beta");
  d.beta = matrix_of(beta);
  const NumericArray b = read_array(dir / "b.bin");
  check_shape(b, {D, A}, "b");
  d.b = matrix_of(b);
  const NumericArray sb = read_array(dir / "sigma_b2.bin");
  check_shape(sb, {D}, "sigma_b2");
  d.sigma_b2 = Eigen::Map<const Eigen::VectorXd>(sb.values.data(), static_cast<Eigen::Index>(D));
  const NumericArray sc = read_array(dir / "sigma_c2.bin");
  check_shape(sc, {D}, "sigma_c2");
  d.sigma_c2 = Eigen::Map<const Eigen::VectorXd>(sc.values.data(), static_cast<Eigen::Index>(D));
  if (factors) {
    const NumericArray U = read_array(dir / "U.bin");
    check_shape(U, {D, A, Q}, "U");
    d.U = stack_of(U);
    const NumericArray V = read_array(dir / "V.bin");
    check_shape(V, {D, A, Q}, "V");
    d.V = stack_of(V);
  }
  if (message_factors) {
    const NumericArray W = read_array(dir / "W.bin");
    check_shape(W, {D, static_cast<std::uint64_t>(d.num_messages), Q}, "W");
    d.W = stack_of(W);
  }
  return d;
}

}  // namespace multirecv
