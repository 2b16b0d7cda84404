#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fockscatter/fock.hpp"
#include "fockscatter/meanfield.hpp"
#include "fockscatter/trajectory.hpp"

namespace fockscatter {

enum class EstimateMethod { exact, classical_mc, semiclassical, diagonal, trajectory_sum };

std::string to_string(EstimateMethod m);
EstimateMethod estimate_method_from_string(const std::string& s);

struct TransitionEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::int64_t samples = 0;
  EstimateMethod method = EstimateMethod::exact;
  int family_count = 0;
  int caustic_count = 0;
  std::string note;
};

struct SemiclassicalAmplitude {
  cplx amplitude = 0.0;
  int family_count = 0;   // non-caustic families summed
  int caustic_count = 0;  // families found but excluded
  bool no_trajectory = false;
  std::vector<Trajectory> families;  // every family found, caustic ones included
  ShootingDiagnostics diagnostics;
};

/// K_sc = sum over non-caustic families of prefactor * exp(i R / hbar).
SemiclassicalAmplitude propagator_fock_semiclassical(const BoseHubbardModel& model, const FockState& n_i,
                                                     const FockState& n_f, double t, const ShootingConfig& cfg = {});

/// |K_sc|^2 including all cross terms between the families found.
TransitionEstimate semiclassical_probability(const BoseHubbardModel& model, const FockState& n_i, const FockState& n_f,
                                             double t, const ShootingConfig& cfg = {});

/// Diagonal term from the trajectories themselves:
/// sum_gamma |det' d theta(t_i) / d n_f| / (2 pi)^(L-1).
TransitionEstimate diagonal_trajectory_sum(const BoseHubbardModel& model, const FockState& n_i, const FockState& n_f,
                                           double t, const ShootingConfig& cfg = {});

struct ClassicalSamplingOptions {
  std::int64_t chunk_size = 256;  // samples per random substream
  int threads = 1;
  /// Largest tolerated fraction of samples lost to integration failures.
  double max_discard_fraction = 0.01;
  /// Constant added to every initial phase, theta_1 included. Results only
  /// move within statistical error: the flow is U(1) covariant.
  double phase_offset = 0.0;
  IntegratorConfig integrator{1e-9, 1e-11};
};

/// Phase-space estimate of P(n_i -> n_f, t) for every n_f of the fixed-N basis,
/// at several times from the same samples.
struct ClassicalDistribution {
  FockBasis basis;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> probabilities;  // per time, ordered like basis
  std::vector<double> out_of_basis;            // per time: fraction landing outside the basis
  std::int64_t samples = 0;                    // samples that were integrated successfully
  std::int64_t discarded = 0;

  /// Estimate for one final state at time index k.
  TransitionEstimate estimate(std::size_t k, const FockState& n_f, EstimateMethod method) const;
};

/// Samples theta_1 = 0, theta_l uniform on [0, 2 pi), psi_l = sqrt(n_i,l + 1/2) e^{i theta_l},
/// integrates, and bins sites 2..L by floor(|psi_l|^2) (nearest integer to |psi|^2 - 1/2);
/// site 1 takes the remaining N - sum. Results depend only on (seed, sample_count, chunk_size).
ClassicalDistribution classical_distribution(const BoseHubbardModel& model, const FockState& n_i,
                                             const std::vector<double>& times, std::int64_t sample_count,
                                             std::uint64_t seed, const ClassicalSamplingOptions& opts = {});

using FockSelector = std::function<bool(const FockState&)>;

struct SelectedEstimate {
  FockState n_f;
  TransitionEstimate estimate;
};

/// Classical (sum-rule) transition probabilities for the n_f accepted by `selector`
/// (all states when empty).
std::vector<SelectedEstimate> classical_transition_probability(const BoseHubbardModel& model, const FockState& n_i,
                                                               const FockSelector& selector, double t,
                                                               std::int64_t sample_count, std::uint64_t seed,
                                                               const ClassicalSamplingOptions& opts = {});

/// Same computation reported under the `diagonal` tag: P_da = P_cl.
std::vector<SelectedEstimate> diagonal_approximation(const BoseHubbardModel& model, const FockState& n_i,
                                                     const FockSelector& selector, double t,
                                                     std::int64_t sample_count, std::uint64_t seed,
                                                     const ClassicalSamplingOptions& opts = {});

inline constexpr const char* kDiagonalNote = "P_da = P_cl (sum rule)";

struct TransitionRecord {
  FockState n_i;
  FockState n_f;
  double t = 0.0;
  TransitionEstimate estimate;
};

/// Tab-separated records with a '#' header naming the columns.
void write_transition_records(std::ostream& out, const std::vector<TransitionRecord>& records);
std::vector<TransitionRecord> read_transition_records(std::istream& in);

}  // namespace fockscatter
