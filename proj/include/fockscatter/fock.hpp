#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fockscatter/model.hpp"

namespace fockscatter {

/// Occupation numbers n_l of a Fock state |n>.
using FockState = std::vector<int>;

std::string format_state(std::span<const int> n);
int total_particles(std::span<const int> n);

class BasisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::int64_t kDefaultDimensionCap = 200000;

/// Fixed-N Fock basis in descending lexicographic order, e.g. for L=2, N=2:
/// (2,0), (1,1), (0,2). Positions come from combinatorial ranking.
class FockBasis {
 public:
  FockBasis(int sites, int particles, std::int64_t dimension_cap = kDefaultDimensionCap);

  int sites() const { return sites_; }
  int particles() const { return particles_; }
  std::int64_t size() const { return static_cast<std::int64_t>(states_.size()); }

  const FockState& state(std::int64_t k) const { return states_[static_cast<std::size_t>(k)]; }
  const std::vector<FockState>& states() const { return states_; }

  /// Position of `n`, or nullopt when n does not belong to this basis.
  std::optional<std::int64_t> find(std::span<const int> n) const;
  /// Position of `n`; throws BasisError when absent.
  std::int64_t index(std::span<const int> n) const;

  /// Number of compositions of `particles` into `sites` non-negative parts.
  static std::int64_t dimension(int sites, int particles);

 private:
  int sites_;
  int particles_;
  std::vector<FockState> states_;
  // compositions_[s][m]: number of ways to put m bosons on s sites
  std::vector<std::vector<std::int64_t>> compositions_;
};

FockBasis enumerate_basis(int sites, int particles, std::int64_t dimension_cap = kDefaultDimensionCap);

using SparseHamiltonian = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

/// <n|H|n'> for the full Bose-Hubbard Hamiltonian, hopping plus the
/// interaction tensor, as a sparse Hermitian matrix.
SparseHamiltonian build_hamiltonian(const BoseHubbardModel& model, const FockBasis& basis);

using QuantumState = Eigen::VectorXcd;

QuantumState fock_state_vector(const FockBasis& basis, std::span<const int> n);

struct EvolveOptions {
  double tol = 1e-12;
  std::int64_t dense_threshold = 512;
  int krylov_dimension = 30;
};

class EvolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// exp(-i H t / hbar) |state>. Dense scaling-and-squaring for small bases,
/// adaptive Lanczos time stepping above options.dense_threshold.
QuantumState evolve(const QuantumState& state, const BoseHubbardModel& model, const FockBasis& basis, double t,
                    const EvolveOptions& options = {});

/// Same, with a prebuilt Hamiltonian.
QuantumState evolve(const QuantumState& state, const SparseHamiltonian& hamiltonian, double hbar, double t,
                    const EvolveOptions& options = {});

/// Dense propagator exp(-i H t / hbar) by scaling and squaring.
Eigen::MatrixXcd dense_propagator(const SparseHamiltonian& hamiltonian, double hbar, double t);

/// |<n_f| exp(-i H t/hbar) |n_i>|^2.
double transition_probability_exact(const BoseHubbardModel& model, std::span<const int> n_i, std::span<const int> n_f,
                                    double t, const EvolveOptions& options = {});

/// All |<n_f| exp(-i H t/hbar) |n_i>|^2, ordered like `basis`.
Eigen::VectorXd transition_probabilities_exact(const BoseHubbardModel& model, const FockBasis& basis,
                                               std::span<const int> n_i, double t, const EvolveOptions& options = {});

/// Eigendecomposition of H for repeated evaluation at many times.
class SpectralPropagator {
 public:
  SpectralPropagator(const SparseHamiltonian& hamiltonian, double hbar);

  QuantumState evolve(const QuantumState& state, double t) const;
  /// |<m| exp(-iHt/hbar) |k>|^2 for all m, with |k> the basis vector `column`.
  Eigen::VectorXd probabilities_from(std::int64_t column, double t) const;

  const Eigen::VectorXd& energies() const { return energies_; }

 private:
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd vectors_;
  double hbar_;
};

/// <psi|H|psi>.
double energy_expectation(const SparseHamiltonian& hamiltonian, const QuantumState& psi);

}  // namespace fockscatter
