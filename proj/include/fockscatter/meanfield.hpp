#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fockscatter/model.hpp"
#include "fockscatter/ode.hpp"

namespace fockscatter {

/// Mean-field amplitudes psi_l; psi = (q + i p) / (2b).
using ClassicalField = Eigen::VectorXcd;

using ode::IntegrationError;

/// H_cl with every a^dag_l a_l' replaced by psi*_l psi_l' - delta_ll'/2.
double classical_hamiltonian(const BoseHubbardModel& model, const ClassicalField& psi);

/// Same sum before discarding the imaginary part (which vanishes for
/// Hermitian models up to rounding).
cplx classical_hamiltonian_complex(const BoseHubbardModel& model, const ClassicalField& psi);

/// sum_l |psi_l|^2; equals N + L/2 on Fock boundary conditions.
double conserved_norm(const ClassicalField& psi);

/// dH_cl / dpsi*_l.
ClassicalField field_gradient(const BoseHubbardModel& model, const ClassicalField& psi);

/// dpsi/dt = -i/hbar dH_cl/dpsi*.
ClassicalField eom_rhs(const BoseHubbardModel& model, const ClassicalField& psi);

/// Jacobian of the flow in real coordinates z = (Re psi, Im psi). The same
/// matrix acts on (q, p) since both are the same linear rescaling of z.
Eigen::MatrixXd eom_jacobian(const BoseHubbardModel& model, const ClassicalField& psi);

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  /// Spacing of recorded samples; 0 records every accepted step.
  double dense_output_stride = 0.0;
  std::int64_t max_steps = 50'000'000;
};

struct TimeSpan {
  double initial = 0.0;
  double final = 0.0;
  double length() const { return final - initial; }
};

/// Monodromy M = d(q(t), p(t)) / d(q(t0), p(t0)), stored as a 2L x 2L matrix
/// with the q block first.
struct TangentFrame {
  Eigen::MatrixXd matrix;

  int sites() const { return static_cast<int>(matrix.rows() / 2); }
  /// Block d(out)/d(in), 0 selecting q and 1 selecting p.
  Eigen::MatrixXd block(int out, int in) const;
  /// X = -(dq/dp(t_i)) (dp/dp(t_i))^{-1}.
  Eigen::MatrixXd x_ratio() const;
  /// Smallest singular value of dp/dp over its largest; small means caustic.
  double caustic_indicator() const;
  /// max |M^T J M - J|.
  double symplectic_defect() const;
};

struct PathSample {
  double t = 0.0;
  ClassicalField psi;
  Eigen::VectorXd phase;      // unwrapped arg psi_l, continuous along the path
  double kinetic = 0.0;       // int 2 Im(psi).d/dt Re(psi) dt
  double area = 0.0;          // int sum_l (x_l y_l' - y_l x_l') dt, with psi = x + iy
  double energy_integral = 0.0;  // int H_cl dt
  Eigen::MatrixXd monodromy;  // empty unless integrated with tangent
};

struct MeanFieldPath {
  std::vector<PathSample> samples;
  double energy = 0.0;
  double norm = 0.0;
  double max_energy_drift = 0.0;  // relative
  double max_norm_drift = 0.0;    // relative
  std::int64_t accepted_steps = 0;
  std::int64_t rejected_steps = 0;

  const PathSample& front() const { return samples.front(); }
  const PathSample& back() const { return samples.back(); }
  double t_initial() const { return samples.front().t; }
  double t_final() const { return samples.back().t; }

  /// Quadrature-form action hbar * int p.q'/(2 b^2) dt - int H dt.
  double quadrature_action(double hbar) const;
  /// Fock-form action int (hbar theta.n' - H) dt with the unwrapped phases.
  double fock_action(double hbar) const;
};

/// Integrates the mean-field equations over `span` with the action
/// integrands and invariant monitoring carried along.
MeanFieldPath integrate(const BoseHubbardModel& model, const ClassicalField& psi0, TimeSpan span,
                        const IntegratorConfig& cfg = {});

struct TangentPath {
  MeanFieldPath path;
  TangentFrame monodromy;  // at span.final
};

/// As `integrate`, with the variational equations for M co-integrated and
/// included in step-size control. Every sample carries M(t).
TangentPath integrate_with_tangent(const BoseHubbardModel& model, const ClassicalField& psi0, TimeSpan span,
                                   const IntegratorConfig& cfg = {});

/// Lightweight field-only integration returning psi at each of the
/// ascending `times` (all >= t0). Used for phase-space sampling.
std::vector<ClassicalField> integrate_to_times(const BoseHubbardModel& model, const ClassicalField& psi0, double t0,
                                               const std::vector<double>& times, const IntegratorConfig& cfg = {});

/// Real coordinates z = (Re psi, Im psi) and back.
Eigen::VectorXd to_real(const ClassicalField& psi);
ClassicalField from_real(const Eigen::Ref<const Eigen::VectorXd>& z, int sites);

}  // namespace fockscatter
