#pragma once

// Brute-force statistics in exact rational arithmetic, written straight from
// the definitions without sharing code with the library.
#include <map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "multirecv/model.hpp"

namespace oracle {

using Rational = boost::multiprecision::cpp_rational;

inline std::map<int, double> t1(const multirecv::EventDataset& data) {
  std::map<int, long> counts;
  for (const auto& m : data.messages()) counts[static_cast<int>(m.receivers.size())] += 1;
  std::map<int, double> out;
  for (const auto& [size, c] : counts) {
    out[size] = static_cast<double>(Rational(c, static_cast<long>(data.size())));
  }
  return out;
}

// Indexed by actor; the sender's own entry is left at zero.
inline std::vector<double> t2(const multirecv::EventDataset& data, int sender) {
  const int A = data.num_actors();
  std::vector<long> hits(static_cast<std::size_t>(A), 0);
  long sent = 0;
  for (const auto& m : data.messages()) {
    if (m.sender != sender) continue;
    ++sent;
    for (int r : m.receivers) hits[static_cast<std::size_t>(r)] += 1;
  }
  std::vector<double> out(static_cast<std::size_t>(A), 0.0);
  for (int r = 0; r < A; ++r) out[static_cast<std::size_t>(r)] = static_cast<double>(Rational(hits[static_cast<std::size_t>(r)], sent));
  return out;
}

inline std::vector<std::vector<Rational>> centered_counts(const multirecv::EventDataset& data) {
  const int A = data.num_actors();
  std::vector<std::vector<long>> y(static_cast<std::size_t>(A), std::vector<long>(static_cast<std::size_t>(A), 0));
  for (const auto& m : data.messages()) {
    for (int r : m.receivers) y[static_cast<std::size_t>(m.sender)][static_cast<std::size_t>(r)] += 1;
  }
  std::vector<std::vector<Rational>> e(static_cast<std::size_t>(A), std::vector<Rational>(static_cast<std::size_t>(A)));
  for (int s = 0; s < A; ++s) {
    long total = 0;
    for (int r = 0; r < A; ++r) {
      if (r != s) total += y[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)];
    }
    for (int r = 0; r < A; ++r) {
      if (r == s) continue;
      e[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)] =
          Rational(y[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)]) - Rational(total, A - 1);
    }
  }
  return e;
}

// which = 3: e_sj e_jr e_sr; which = 4: e_sj e_jr e_rs.
inline double transitivity(const multirecv::EventDataset& data, int which) {
  const auto e = centered_counts(data);
  const auto A = e.size();
  Rational sum = 0;
  for (std::size_t s = 0; s < A; ++s) {
    for (std::size_t r = 0; r < A; ++r) {
      if (r == s) continue;
      for (std::size_t j = 0; j < A; ++j) {
        if (j == s || j == r) continue;
        sum += e[s][j] * e[j][r] * (which == 3 ? e[s][r] : e[r][s]);
      }
    }
  }
  return static_cast<double>(sum);
}

}  // namespace oracle
