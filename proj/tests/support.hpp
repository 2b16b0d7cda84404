#pragma once

// Shared fixtures for the unit tests: random models and small brute-force oracles.

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fockscatter/model.hpp"

namespace testing {

using fockscatter::BoseHubbardModel;
using fockscatter::cplx;
using fockscatter::Interaction;
using fockscatter::InteractionIndex;

inline Eigen::MatrixXcd random_hermitian(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXcd h(n, n);
  for (int i = 0; i < n; ++i) {
    h(i, i) = g(rng);
    for (int j = i + 1; j < n; ++j) {
      h(i, j) = cplx(g(rng), g(rng));
      h(j, i) = std::conj(h(i, j));
    }
  }
  return h;
}

/// Adds v at (k,l,m,n) together with every partner fixed by the tensor symmetries.
inline void add_symmetric(std::map<InteractionIndex, double>& u, int k, int l, int m, int n, double v) {
  const InteractionIndex orbit[] = {{k, l, m, n}, {m, n, k, l}, {l, k, m, n}, {k, l, n, m},
                                    {l, k, n, m}, {m, n, l, k}, {n, m, k, l}, {n, m, l, k}};
  for (const auto& idx : orbit) u[idx] = v;
}

/// Random Hermitian hopping plus on-site and a handful of off-site real interaction terms.
inline BoseHubbardModel random_model(int sites, std::uint64_t seed, bool general_terms = true, double hbar = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> site(0, sites - 1);
  Eigen::VectorXd onsite(sites);
  for (int l = 0; l < sites; ++l) onsite(l) = 0.5 + 0.5 * u(rng);
  std::map<InteractionIndex, double> general;
  if (general_terms && sites > 1) {
    for (int r = 0; r < 4; ++r) {
      int k = site(rng), l = site(rng), m = site(rng), n = site(rng);
      if (k == l && l == m && m == n) continue;
      add_symmetric(general, k, l, m, n, 0.3 * u(rng));
    }
  }
  return BoseHubbardModel(random_hermitian(sites, rng, 0.7), Interaction(onsite, general), hbar);
}

/// Ryser's formula for the permanent of a small complex matrix.
inline cplx permanent(const Eigen::MatrixXcd& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return 1.0;
  cplx total = 0.0;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    cplx prod = 1.0;
    for (int i = 0; i < n; ++i) {
      cplx row = 0.0;
      for (int j = 0; j < n; ++j)
        if (mask & (1u << j)) row += a(i, j);
      prod *= row;
    }
    const int bits = __builtin_popcount(mask);
    total += ((n - bits) % 2 ? -1.0 : 1.0) * prod;
  }
  return total;
}

/// <n_f| U^{(N)} |n_i> for noninteracting bosons with single-particle unitary u.
inline cplx boson_amplitude(const Eigen::MatrixXcd& u, const std::vector<int>& n_i, const std::vector<int>& n_f) {
  std::vector<int> rows, cols;
  double norm = 1.0;
  for (std::size_t l = 0; l < n_f.size(); ++l) {
    for (int c = 0; c < n_f[l]; ++c) rows.push_back(static_cast<int>(l));
    norm *= std::tgamma(n_f[l] + 1.0);
  }
  for (std::size_t l = 0; l < n_i.size(); ++l) {
    for (int c = 0; c < n_i[l]; ++c) cols.push_back(static_cast<int>(l));
    norm *= std::tgamma(n_i[l] + 1.0);
  }
  Eigen::MatrixXcd sub(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) sub(r, c) = u(rows[r], cols[c]);
  return permanent(sub) / std::sqrt(norm);
}

}  // namespace testing
