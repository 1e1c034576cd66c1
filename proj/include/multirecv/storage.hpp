#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "multirecv/mcmc.hpp"
#include "multirecv/model.hpp"

namespace multirecv {

// Dataset container, little-endian:
//   "MRDS" u32 version  i32 A  i32 K  u64 n
//   per message: i32 sender  u8 has_timestamp  f64 timestamp  u32 m
//                i32 receivers[m]  f64 covariates[(A-1) * K] (row-major)
//   "END."
inline constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(const EventDataset& data, std::ostream& out);
// Throws ParseError on a bad magic, version, truncation or trailing bytes.
EventDataset read_dataset(std::istream& in);
void save_dataset(const EventDataset& data, const std::filesystem::path& path);
EventDataset load_dataset(const std::filesystem::path& path);

// Flat numeric array: "MRAR" u32 version u32 ndim u64 shape[ndim] f64 values.
struct NumericArray {
  std::vector<std::uint64_t> shape;
  std::vector<double> values;  // row-major
};

void write_array(const std::filesystem::path& path, const NumericArray& array);
NumericArray read_array(const std::filesystem::path& path);

// Posterior draws as a directory: meta.json plus one array file per block
// (beta, b, sigma_b2, sigma_c2, and U, V, W when stored).
void save_draws(const PosteriorDraws& draws, const std::filesystem::path& dir);
PosteriorDraws load_draws(const std::filesystem::path& dir);

}  // namespace multirecv
