#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fockscatter/meanfield.hpp"
#include "fockscatter/model.hpp"
#include "fockscatter/quadrature.hpp"

namespace fockscatter {

enum class TrajectoryKind { quadrature, fock };

std::string to_string(TrajectoryKind kind);
TrajectoryKind trajectory_kind_from_string(const std::string& s);

struct ShootingConfig {
  double residual_tol = 1e-9;
  int max_newton_iter = 50;
  int multistart_count = 64;
  double damping = 0.5;          // backtracking factor of the line search
  double dedup_distance = 1e-6;  // in the space of unknown initial conditions
  /// sigma_min(B) / ||reduced monodromy|| below this flags a caustic.
  double caustic_tolerance = 1e-7;
  std::uint64_t seed = 0;
  int threads = 1;
  IntegratorConfig integrator{};
  quadrature::QuadratureConfig quadrature{};
};

/// Boundary data at one end of a trajectory.
struct BoundaryPoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd n;      // |psi|^2 - 1/2
  Eigen::VectorXd theta;  // unwrapped arg psi
};

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::fock;
  MeanFieldPath path;  // samples carry M(t)
  TangentFrame monodromy;
  double hbar = 1.0;
  double b = 0.0;       // quadrature scale used for q, p
  double action = 0.0;  // R
  double energy = 0.0;  // conserved H_cl
  BoundaryPoint initial;
  BoundaryPoint final;
  /// Unknowns of the boundary-value problem: p(t_i) for quadrature
  /// trajectories, relative phases theta_l - theta_1 (l >= 2) at t_i for Fock.
  Eigen::VectorXd unknowns;
  double residual = 0.0;
  int newton_iterations = 0;

  /// B = d(boundary coordinate at t_f) / d(unknowns) and its partner block
  /// D = d(conjugate coordinate at t_f) / d(unknowns); for Fock trajectories
  /// these are the reduced (N fixed, theta_1(t_i) fixed) blocks.
  Eigen::MatrixXd b_block;
  Eigen::MatrixXd d_block;
  /// Reduced blocks A = dn~_f/dn~_i and C = dphi_f/dn~_i (Fock only).
  Eigen::MatrixXd a_block;
  Eigen::MatrixXd c_block;
  /// Mixed second derivative of R between final and initial boundary
  /// coordinates, rows final, columns initial.
  Eigen::MatrixXd action_hessian;

  cplx prefactor = 0.0;
  /// Number of conjugate points: the prefactor carries exp(-i pi maslov / 2).
  int maslov = 0;
  bool caustic = false;
  double caustic_indicator = 0.0;
};

struct ShootingDiagnostics {
  int seeds = 0;
  int converged = 0;
  int duplicates = 0;
  int diverged = 0;
  int integration_failures = 0;
  int caustics = 0;
  std::string message;
};

struct ShootingResult {
  std::vector<Trajectory> trajectories;
  ShootingDiagnostics diagnostics;
};

/// Real solutions with Re psi(t_i) = q_i/(2b), Re psi(t_f) = q_f/(2b).
ShootingResult shoot_quadrature(const BoseHubbardModel& model, const Eigen::VectorXd& q_i, const Eigen::VectorXd& q_f,
                                TimeSpan span, const ShootingConfig& cfg = {});

/// Single Newton run from the initial momenta `p_guess`.
std::optional<Trajectory> shoot_quadrature_from(const BoseHubbardModel& model, const Eigen::VectorXd& q_i,
                                                const Eigen::VectorXd& q_f, TimeSpan span,
                                                const Eigen::VectorXd& p_guess, const ShootingConfig& cfg = {});

/// Gauge-fixed (theta_1(t_i) = 0) representatives of the trajectory families
/// with |psi_l(t_i)|^2 = n_i,l + 1/2 and |psi_l(t_f)|^2 = n_f,l + 1/2.
/// Occupations may be non-integer; sums must agree.
ShootingResult shoot_fock(const BoseHubbardModel& model, const Eigen::VectorXd& n_i, const Eigen::VectorXd& n_f,
                          TimeSpan span, const ShootingConfig& cfg = {});
ShootingResult shoot_fock(const BoseHubbardModel& model, const std::vector<int>& n_i, const std::vector<int>& n_f,
                          TimeSpan span, const ShootingConfig& cfg = {});

/// Single Newton run from the relative initial phases `phase_guess` (L-1 entries).
/// `global_phase` is theta_1(t_i); any value gives the same family.
std::optional<Trajectory> shoot_fock_from(const BoseHubbardModel& model, const Eigen::VectorXd& n_i,
                                          const Eigen::VectorXd& n_f, TimeSpan span,
                                          const Eigen::VectorXd& phase_guess, const ShootingConfig& cfg = {},
                                          double global_phase = 0.0);

/// Integrates from psi0 and assembles the trajectory record (action,
/// blocks, prefactor) as if psi0 were a converged boundary-value solution.
Trajectory trajectory_from_initial(const BoseHubbardModel& model, const ClassicalField& psi0, TimeSpan span,
                                   TrajectoryKind kind, const ShootingConfig& cfg = {});

/// sqrt(det[(-2 pi i hbar)^{-1} d2R/dq_f dq_i]) with the Maslov phase.
cplx prefactor_quadrature(const Trajectory& traj);

/// sqrt(det'[(-2 pi i hbar)^{-1} d2R/dn_f dn_i]), det' over the reduced
/// (L-1)x(L-1) block; 1 for a single site.
cplx prefactor_fock(const Trajectory& traj);

/// Time-reversed partner: psi'(t) = exp(-2 i chi) conj psi(t_f + t_i - t),
/// with chi the phases that make the model real. Requires a TRS model.
Trajectory time_reverse(const BoseHubbardModel& model, const Trajectory& traj, const ShootingConfig& cfg = {});

/// Plain-text dump: '#' header lines with key/value pairs, then one row per
/// sample: t, Re psi_1, Im psi_1, ..., Re psi_L, Im psi_L.
void write_trajectory(std::ostream& out, const Trajectory& traj);

struct TrajectoryRecord {
  TrajectoryKind kind = TrajectoryKind::fock;
  int sites = 0;
  double t_initial = 0.0;
  double t_final = 0.0;
  double action = 0.0;
  double energy = 0.0;
  cplx prefactor = 0.0;
  double residual = 0.0;
  bool caustic = false;
  int maslov = 0;
  std::vector<double> times;
  std::vector<ClassicalField> psi;
};

/// Parses the dump format; throws std::runtime_error on malformed input.
TrajectoryRecord read_trajectory(std::istream& in);

}  // namespace fockscatter
