#include "fockscatter/meanfield.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fockscatter {

namespace {

struct GeneralTerm {
  int k, l, m, n;
  double value;
};

// Model data flattened for repeated evaluation in the integrator.
class ClassicalSystem {
 public:
  explicit ClassicalSystem(const BoseHubbardModel& model)
      : sites_(model.sites()),
        hbar_(model.hbar()),
        h0_(model.effective_hopping()),
        onsite_(model.interaction().onsite()) {
    for (const auto& [idx, value] : model.interaction().general())
      general_.push_back({idx[0], idx[1], idx[2], idx[3], value});
    psi_.resize(sites_);
    g_.resize(sites_);
    a_.resize(sites_, sites_);
    b_.resize(sites_, sites_);
  }

  int sites() const { return sites_; }
  double hbar() const { return hbar_; }

  // rho_ln = psi*_l psi_n - delta_ln / 2
  static cplx rho(const ClassicalField& psi, int l, int n) {
    return std::conj(psi(l)) * psi(n) - (l == n ? 0.5 : 0.0);
  }

  cplx energy(const ClassicalField& psi) const {
    cplx e = 0.0;
    for (int l = 0; l < sites_; ++l)
      for (int lp = 0; lp < sites_; ++lp)
        if (h0_(l, lp) != 0.0) e += h0_(l, lp) * rho(psi, l, lp);
    for (int l = 0; l < sites_; ++l) {
      const double r = std::norm(psi(l)) - 0.5;
      e += 0.5 * onsite_(l) * r * r;
    }
    for (const auto& t : general_) e += 0.5 * t.value * rho(psi, t.k, t.m) * rho(psi, t.l, t.n);
    return e;
  }

  void gradient(const ClassicalField& psi, ClassicalField& g) const {
    g.noalias() = h0_ * psi;
    for (int j = 0; j < sites_; ++j) g(j) += onsite_(j) * (std::norm(psi(j)) - 0.5) * psi(j);
    for (const auto& t : general_) g(t.k) += t.value * psi(t.m) * rho(psi, t.l, t.n);
  }

  // delta g = A delta psi + B delta psi*
  void tangent_blocks(const ClassicalField& psi, Eigen::MatrixXcd& a, Eigen::MatrixXcd& b) const {
    a = h0_;
    b.setZero(sites_, sites_);
    for (int j = 0; j < sites_; ++j) {
      a(j, j) += onsite_(j) * (2.0 * std::norm(psi(j)) - 0.5);
      b(j, j) += onsite_(j) * psi(j) * psi(j);
    }
    for (const auto& t : general_) {
      a(t.k, t.m) += t.value * (2.0 * rho(psi, t.l, t.n) + (t.l == t.n ? 0.5 : 0.0));
      b(t.k, t.l) += t.value * psi(t.m) * psi(t.n);
    }
  }

  void load(const double* z) const {
    for (int l = 0; l < sites_; ++l) psi_(l) = cplx(z[l], z[sites_ + l]);
  }

  // dz/dt for z = (x, y): x' = Im g / hbar, y' = -Re g / hbar
  void flow(const double* z, double* dz) const {
    load(z);
    gradient(psi_, g_);
    for (int l = 0; l < sites_; ++l) {
      dz[l] = g_(l).imag() / hbar_;
      dz[sites_ + l] = -g_(l).real() / hbar_;
    }
  }

  void jacobian(const ClassicalField& psi, Eigen::MatrixXd& jac) const {
    tangent_blocks(psi, a_, b_);
    const int L = sites_;
    jac.resize(2 * L, 2 * L);
    for (int k = 0; k < L; ++k) {
      for (int j = 0; j < L; ++j) {
        const cplx dx = a_(j, k) + b_(j, k);
        const cplx dy = cplx(0.0, 1.0) * (a_(j, k) - b_(j, k));
        jac(j, k) = dx.imag() / hbar_;
        jac(L + j, k) = -dx.real() / hbar_;
        jac(j, L + k) = dy.imag() / hbar_;
        jac(L + j, L + k) = -dy.real() / hbar_;
      }
    }
  }

  const ClassicalField& scratch_psi() const { return psi_; }
  const ClassicalField& scratch_gradient() const { return g_; }

 private:
  int sites_;
  double hbar_;
  Eigen::MatrixXcd h0_;
  Eigen::VectorXd onsite_;
  std::vector<GeneralTerm> general_;
  mutable ClassicalField psi_;
  mutable ClassicalField g_;
  mutable Eigen::MatrixXcd a_;
  mutable Eigen::MatrixXcd b_;
};

void check_length(const BoseHubbardModel& model, const ClassicalField& psi) {
  if (psi.size() != model.sites())
    throw std::invalid_argument("field has " + std::to_string(psi.size()) + " components, model has " +
                                std::to_string(model.sites()) + " sites");
}

void check_span(TimeSpan span) {
  if (!std::isfinite(span.initial) || !std::isfinite(span.final)) throw std::invalid_argument("non-finite time span");
  if (span.final < span.initial) throw std::invalid_argument("time span must satisfy t_f >= t_i");
}

ode::StepControl step_control(const IntegratorConfig& cfg) {
  if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0)) throw std::invalid_argument("integrator tolerances must be positive");
  if (!(cfg.max_step > 0.0)) throw std::invalid_argument("max_step must be positive");
  if (cfg.dense_output_stride < 0.0) throw std::invalid_argument("dense_output_stride must be non-negative");
  return {cfg.rel_tol, cfg.abs_tol, cfg.max_step, cfg.max_steps};
}

// State layout: x (L), y (L), kinetic, area, energy integral, then M column-major.
struct PathRhs {
  const ClassicalSystem* system;
  bool tangent;
  mutable Eigen::MatrixXd jac;

  void operator()(double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) const {
    const int L = system->sites();
    system->flow(y.data(), dy.data());
    double kinetic = 0.0, area = 0.0;
    for (int l = 0; l < L; ++l) {
      kinetic += 2.0 * y(L + l) * dy(l);
      area += y(l) * dy(L + l) - y(L + l) * dy(l);
    }
    dy(2 * L) = kinetic;
    dy(2 * L + 1) = area;
    dy(2 * L + 2) = system->energy(system->scratch_psi()).real();
    if (tangent) {
      system->jacobian(system->scratch_psi(), jac);
      const int n = 2 * L;
      Eigen::Map<const Eigen::MatrixXd> m(y.data() + 2 * L + 3, n, n);
      Eigen::Map<Eigen::MatrixXd> dm(dy.data() + 2 * L + 3, n, n);
      dm.noalias() = jac * m;
    }
  }
};

double wrap_near(double angle, double reference) {
  const double two_pi = 2.0 * std::numbers::pi;
  return angle + two_pi * std::round((reference - angle) / two_pi);
}

MeanFieldPath run(const BoseHubbardModel& model, const ClassicalField& psi0, TimeSpan span,
                  const IntegratorConfig& cfg, bool tangent) {
  check_length(model, psi0);
  check_span(span);
  if (!psi0.allFinite()) throw IntegrationError("non-finite initial field", span.initial);
  const ode::StepControl control = step_control(cfg);

  ClassicalSystem system(model);
  const int L = model.sites();
  const int n = 2 * L;
  Eigen::VectorXd y0(2 * L + 3 + (tangent ? n * n : 0));
  y0.head(n) = to_real(psi0);
  y0.segment(n, 3).setZero();
  if (tangent) {
    Eigen::Map<Eigen::MatrixXd>(y0.data() + n + 3, n, n).setIdentity();
  }

  MeanFieldPath path;
  path.energy = system.energy(psi0).real();
  path.norm = conserved_norm(psi0);
  const double energy_scale =
      std::max(std::abs(path.energy), model.effective_hopping().cwiseAbs().maxCoeff() * path.norm);

  auto make_sample = [&](double t, const Eigen::VectorXd& y, const Eigen::VectorXd& ref_phase) {
    PathSample s;
    s.t = t;
    s.psi = from_real(y.head(n), L);
    s.phase.resize(L);
    for (int l = 0; l < L; ++l) s.phase(l) = wrap_near(std::arg(s.psi(l)), ref_phase(l));
    s.kinetic = y(n);
    s.area = y(n + 1);
    s.energy_integral = y(n + 2);
    if (tangent) s.monodromy = Eigen::Map<const Eigen::MatrixXd>(y.data() + n + 3, n, n);
    return s;
  };

  Eigen::VectorXd phase0(L);
  for (int l = 0; l < L; ++l) phase0(l) = std::arg(psi0(l));
  path.samples.push_back(make_sample(span.initial, y0, phase0));
  if (span.length() == 0.0) return path;

  ode::DormandPrince<PathRhs> stepper(PathRhs{&system, tangent, {}}, y0, span.initial, control);
  Eigen::VectorXd phase_prev = phase0;  // unwrapped phases at the last accepted step
  Eigen::VectorXd interp;
  const double stride = cfg.dense_output_stride;
  std::int64_t next_index = 1;

  while (stepper.t() < span.final) {
    stepper.step(span.final);
    const Eigen::VectorXd& y = stepper.y();
    if (!y.allFinite()) throw IntegrationError("non-finite state", stepper.t());

    if (stride > 0.0) {
      while (true) {
        const double ts = span.initial + static_cast<double>(next_index) * stride;
        if (ts >= span.final || ts > stepper.t()) break;
        stepper.dense(ts, interp);
        path.samples.push_back(make_sample(ts, interp, phase_prev));
        ++next_index;
      }
    }
    PathSample end = make_sample(stepper.t(), y, phase_prev);
    phase_prev = end.phase;

    const double e = system.energy(end.psi).real();
    path.max_energy_drift = std::max(path.max_energy_drift, std::abs(e - path.energy) / energy_scale);
    path.max_norm_drift = std::max(path.max_norm_drift, std::abs(conserved_norm(end.psi) - path.norm) / path.norm);

    if (stride == 0.0 || stepper.t() >= span.final) path.samples.push_back(std::move(end));
  }
  path.accepted_steps = stepper.accepted();
  path.rejected_steps = stepper.rejected();
  return path;
}

}  // namespace

Eigen::VectorXd to_real(const ClassicalField& psi) {
  const auto L = psi.size();
  Eigen::VectorXd z(2 * L);
  z.head(L) = psi.real();
  z.tail(L) = psi.imag();
  return z;
}

ClassicalField from_real(const Eigen::Ref<const Eigen::VectorXd>& z, int sites) {
  ClassicalField psi(sites);
  for (int l = 0; l < sites; ++l) psi(l) = cplx(z(l), z(sites + l));
  return psi;
}

cplx classical_hamiltonian_complex(const BoseHubbardModel& model, const ClassicalField& psi) {
  check_length(model, psi);
  return ClassicalSystem(model).energy(psi);
}

double classical_hamiltonian(const BoseHubbardModel& model, const ClassicalField& psi) {
  return classical_hamiltonian_complex(model, psi).real();
}

double conserved_norm(const ClassicalField& psi) { return psi.squaredNorm(); }

ClassicalField field_gradient(const BoseHubbardModel& model, const ClassicalField& psi) {
  check_length(model, psi);
  ClassicalField g(psi.size());
  ClassicalSystem(model).gradient(psi, g);
  return g;
}

ClassicalField eom_rhs(const BoseHubbardModel& model, const ClassicalField& psi) {
  return field_gradient(model, psi) * cplx(0.0, -1.0 / model.hbar());
}

Eigen::MatrixXd eom_jacobian(const BoseHubbardModel& model, const ClassicalField& psi) {
  check_length(model, psi);
  Eigen::MatrixXd jac;
  ClassicalSystem(model).jacobian(psi, jac);
  return jac;
}

Eigen::MatrixXd TangentFrame::block(int out, int in) const {
  const int L = sites();
  return matrix.block(out * L, in * L, L, L);
}

Eigen::MatrixXd TangentFrame::x_ratio() const {
  const Eigen::MatrixXd dqdp = block(0, 1);
  const Eigen::MatrixXd dpdp = block(1, 1);
  // X = -dqdp * dpdp^{-1}  <=>  X^T = -(dpdp^T)^{-1} dqdp^T
  return -(dpdp.transpose().fullPivLu().solve(dqdp.transpose())).transpose();
}

double TangentFrame::caustic_indicator() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(block(1, 1));
  const auto& s = svd.singularValues();
  return s(0) > 0.0 ? s(s.size() - 1) / s(0) : 0.0;
}

double TangentFrame::symplectic_defect() const {
  const int L = sites();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * L, 2 * L);
  j.topRightCorner(L, L).setIdentity();
  j.bottomLeftCorner(L, L) = -Eigen::MatrixXd::Identity(L, L);
  return (matrix.transpose() * j * matrix - j).cwiseAbs().maxCoeff();
}

double MeanFieldPath::quadrature_action(double hbar) const {
  return hbar * (back().kinetic - front().kinetic) - (back().energy_integral - front().energy_integral);
}

double MeanFieldPath::fock_action(double hbar) const {
  double boundary = 0.0;
  for (Eigen::Index l = 0; l < front().psi.size(); ++l)
    boundary += back().phase(l) * std::norm(back().psi(l)) - front().phase(l) * std::norm(front().psi(l));
  return hbar * (boundary - (back().area - front().area)) - (back().energy_integral - front().energy_integral);
}

MeanFieldPath integrate(const BoseHubbardModel& model, const ClassicalField& psi0, TimeSpan span,
                        const IntegratorConfig& cfg) {
  return run(model, psi0, span, cfg, false);
}

TangentPath integrate_with_tangent(const BoseHubbardModel& model, const ClassicalField& psi0, TimeSpan span,
                                   const IntegratorConfig& cfg) {
  TangentPath out;
  out.path = run(model, psi0, span, cfg, true);
  out.monodromy.matrix = out.path.back().monodromy;
  return out;
}

std::vector<ClassicalField> integrate_to_times(const BoseHubbardModel& model, const ClassicalField& psi0, double t0,
                                               const std::vector<double>& times, const IntegratorConfig& cfg) {
  check_length(model, psi0);
  const ode::StepControl control = step_control(cfg);
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t0 || (k > 0 && times[k] < times[k - 1]))
      throw std::invalid_argument("sample times must be ascending and not before t0");
  }
  ClassicalSystem system(model);
  const int L = model.sites();
  auto rhs = [&system](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { system.flow(y.data(), dy.data()); };

  std::vector<ClassicalField> out;
  out.reserve(times.size());
  ode::DormandPrince<decltype(rhs)> stepper(rhs, to_real(psi0), t0, control);
  Eigen::VectorXd interp;
  for (double t : times) {
    if (t == t0) {
      out.push_back(psi0);
      continue;
    }
    while (stepper.t() < t) {
      stepper.step(times.back());
      if (!stepper.y().allFinite()) throw IntegrationError("non-finite state", stepper.t());
    }
    if (stepper.t() == t) {
      out.push_back(from_real(stepper.y(), L));
    } else {
      stepper.dense(t, interp);
      out.push_back(from_real(interp, L));
    }
  }
  return out;
}

}  // namespace fockscatter
