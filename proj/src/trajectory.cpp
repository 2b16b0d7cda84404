#include "fockscatter/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fockscatter/parallel.hpp"
#include "fockscatter/random.hpp"

namespace fockscatter {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_to_pi(double a) { return a - kTwoPi * std::round(a / kTwoPi); }

double wrap_to_two_pi(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

// Columns: d(x, y)_i / d(n~, phi) with n_1 = N - sum n~ and theta_1 held fixed.
Eigen::MatrixXd reduced_input(const ClassicalField& psi) {
  const int L = static_cast<int>(psi.size());
  const int r = L - 1;
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(2 * L, 2 * r);
  auto dn = [&](int site, int col, double sign) {
    const double r2 = std::norm(psi(site));
    e(site, col) += sign * psi(site).real() / (2.0 * r2);
    e(L + site, col) += sign * psi(site).imag() / (2.0 * r2);
  };
  for (int k = 0; k < r; ++k) {
    dn(k + 1, k, 1.0);
    dn(0, k, -1.0);
    e(k + 1, r + k) = -psi(k + 1).imag();
    e(L + k + 1, r + k) = psi(k + 1).real();
  }
  return e;
}

// Rows: d(n~, phi)_f / d(x, y)_f with phi_l = theta_l - theta_1.
Eigen::MatrixXd reduced_output(const ClassicalField& psi) {
  const int L = static_cast<int>(psi.size());
  const int r = L - 1;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2 * r, 2 * L);
  auto dtheta = [&](int row, int site, double sign) {
    const double r2 = std::norm(psi(site));
    p(row, site) += -sign * psi(site).imag() / r2;
    p(row, L + site) += sign * psi(site).real() / r2;
  };
  for (int k = 0; k < r; ++k) {
    p(k, k + 1) = 2.0 * psi(k + 1).real();
    p(k, L + k + 1) = 2.0 * psi(k + 1).imag();
    dtheta(r + k, k + 1, 1.0);
    dtheta(r + k, 0, -1.0);
  }
  return p;
}

struct Blocks {
  Eigen::MatrixXd a, b, c, d;
  double scale = 0.0;  // largest singular value of the (reduced) monodromy
};

Blocks extract_blocks(TrajectoryKind kind, const Eigen::MatrixXd& m, const ClassicalField& psi_i,
                      const ClassicalField& psi_t) {
  Blocks out;
  Eigen::MatrixXd red;
  if (kind == TrajectoryKind::quadrature) {
    red = m;
  } else {
    red = reduced_output(psi_t) * m * reduced_input(psi_i);
  }
  const auto n = red.rows() / 2;
  out.a = red.topLeftCorner(n, n);
  out.b = red.topRightCorner(n, n);
  out.c = red.bottomLeftCorner(n, n);
  out.d = red.bottomRightCorner(n, n);
  if (n > 0) out.scale = Eigen::JacobiSVD<Eigen::MatrixXd>(red).singularValues()(0);
  return out;
}

cplx regularized_det(const Eigen::MatrixXd& b, const Eigen::MatrixXd& d, double eps) {
  if (b.rows() == 0) return 1.0;
  const Eigen::MatrixXcd z = b.cast<cplx>() - cplx(0.0, eps) * d.cast<cplx>();
  return z.partialPivLu().determinant();
}

struct MaslovCount {
  bool resolved = true;
  int index = 0;
  double mismatch = 0.0;  // distance of the limiting phase from a multiple of pi
};

// Continuous arg det(B - i eps D) from t_i (where it is -n pi/2), first at
// eps = 1 along the path, then eps -> 0+ at t_f. The limit is index * pi.
MaslovCount count_conjugate_points(TrajectoryKind kind, const MeanFieldPath& path) {
  MaslovCount out;
  const ClassicalField& psi_i = path.front().psi;
  const auto n = static_cast<int>(kind == TrajectoryKind::quadrature ? psi_i.size() : psi_i.size() - 1);
  if (n == 0 || path.samples.size() < 2) return out;
  double phi = -0.5 * n * std::numbers::pi;
  double last_arg = std::arg(regularized_det(Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Identity(n, n), 1.0));
  Blocks blocks;
  for (std::size_t k = 1; k < path.samples.size(); ++k) {
    const auto& s = path.samples[k];
    blocks = extract_blocks(kind, s.monodromy, psi_i, s.psi);
    const double a = std::arg(regularized_det(blocks.b, blocks.d, 1.0));
    const double step = wrap_to_pi(a - last_arg);
    if (std::abs(step) > 0.5 * std::numbers::pi) out.resolved = false;
    phi += step;
    last_arg = a;
  }
  const int sweep = 400;
  for (int j = 1; j <= sweep; ++j) {
    const double eps = std::pow(10.0, -14.0 * j / sweep);
    const double a = std::arg(regularized_det(blocks.b, blocks.d, eps));
    const double step = wrap_to_pi(a - last_arg);
    if (std::abs(step) > 0.5 * std::numbers::pi) out.resolved = false;
    phi += step;
    last_arg = a;
  }
  out.index = static_cast<int>(std::lround(phi / std::numbers::pi));
  out.mismatch = std::abs(phi - out.index * std::numbers::pi);
  return out;
}

BoundaryPoint boundary_at(const PathSample& s, double b) {
  BoundaryPoint p;
  p.q = 2.0 * b * s.psi.real();
  p.p = 2.0 * b * s.psi.imag();
  p.n = s.psi.cwiseAbs2().array() - 0.5;
  p.theta = s.phase;
  return p;
}

Eigen::VectorXd fock_unknowns(const ClassicalField& psi) {
  const auto L = psi.size();
  Eigen::VectorXd phi(std::max<Eigen::Index>(L - 1, 0));
  for (Eigen::Index l = 1; l < L; ++l) phi(l - 1) = wrap_to_two_pi(std::arg(psi(l)) - std::arg(psi(0)));
  return phi;
}

// Fills every derived field of `traj` from its path. Returns false when the
// conjugate-point count could not be resolved at the path's sampling.
bool assemble(Trajectory& traj, const ShootingConfig& cfg) {
  const MeanFieldPath& path = traj.path;
  const ClassicalField& psi_i = path.front().psi;
  const ClassicalField& psi_f = path.back().psi;
  traj.b = cfg.quadrature.b;
  traj.monodromy.matrix = path.back().monodromy;
  traj.energy = path.energy;
  traj.initial = boundary_at(path.front(), traj.b);
  traj.final = boundary_at(path.back(), traj.b);

  const Blocks blk = extract_blocks(traj.kind, traj.monodromy.matrix, psi_i, psi_f);
  traj.a_block = blk.a;
  traj.b_block = blk.b;
  traj.c_block = blk.c;
  traj.d_block = blk.d;
  const auto n = blk.b.rows();

  if (traj.kind == TrajectoryKind::quadrature) {
    traj.action = path.quadrature_action(traj.hbar);
  } else {
    traj.action = path.fock_action(traj.hbar);
  }

  if (n == 0) {
    traj.caustic = false;
    traj.caustic_indicator = 1.0;
    traj.maslov = 0;
    traj.action_hessian.resize(0, 0);
    traj.prefactor = 1.0;
    return true;
  }

  const auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(blk.b).singularValues();
  traj.caustic_indicator = blk.scale > 0.0 ? sv(n - 1) / blk.scale : 0.0;
  traj.caustic = traj.caustic_indicator < cfg.caustic_tolerance;

  const Eigen::MatrixXd b_inv_t = blk.b.transpose().fullPivLu().inverse();
  const double hess_scale =
      traj.kind == TrajectoryKind::quadrature ? traj.hbar / (2.0 * traj.b * traj.b) : traj.hbar;
  traj.action_hessian = -hess_scale * b_inv_t;

  const MaslovCount mc = count_conjugate_points(traj.kind, path);
  traj.maslov = mc.index;
  if (mc.mismatch > 0.25) traj.caustic = true;
  traj.prefactor = traj.kind == TrajectoryKind::quadrature ? prefactor_quadrature(traj) : prefactor_fock(traj);
  return mc.resolved;
}

// Integrates with the tangent flow and assembles; refines the sampling when
// consecutive samples are too far apart to follow the determinant phase.
// `phases0`, when given, picks the 2 pi branch of the initial phases.
Trajectory build(const BoseHubbardModel& model, const ClassicalField& psi0, TimeSpan span, TrajectoryKind kind,
                 const ShootingConfig& cfg, const Eigen::VectorXd* phases0 = nullptr) {
  Trajectory traj;
  traj.kind = kind;
  traj.hbar = model.hbar();
  IntegratorConfig ic = cfg.integrator;
  for (int attempt = 0; attempt < 6; ++attempt) {
    traj.path = integrate_with_tangent(model, psi0, span, ic).path;
    if (phases0 != nullptr) {
      const Eigen::VectorXd shift =
          ((*phases0 - traj.path.front().phase) / kTwoPi).array().round().matrix() * kTwoPi;
      for (auto& s : traj.path.samples) s.phase += shift;
    }
    if (assemble(traj, cfg)) return traj;
    const double stride = span.length() / 256.0;
    ic.dense_output_stride = ic.dense_output_stride > 0.0 ? std::min(stride, ic.dense_output_stride) / 4.0 : stride;
  }
  traj.caustic = true;  // phase bookkeeping unreliable; keep out of sums
  return traj;
}

// Newton only needs the end state and monodromy. Storing every step of a
// wild trial orbit (large momenta make the flow stiff) can exhaust memory.
IntegratorConfig endpoints_only(IntegratorConfig ic, TimeSpan span) {
  ic.dense_output_stride = span.length();
  return ic;
}

Eigen::VectorXd canonical_phases(const ClassicalField& psi, double global_phase) {
  Eigen::VectorXd th(psi.size());
  th(0) = global_phase;
  for (Eigen::Index l = 1; l < psi.size(); ++l) th(l) = global_phase + wrap_to_two_pi(std::arg(psi(l)) - std::arg(psi(0)));
  return th;
}

struct Evaluation {
  TangentPath tangent;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
};

template <class Eval>
struct NewtonOutcome {
  bool converged = false;
  bool integration_failed = false;
  int iterations = 0;
  Eigen::VectorXd x;
  std::optional<Evaluation> eval;
};

template <class Eval>
NewtonOutcome<Eval> newton(Eigen::VectorXd x, Eval&& evaluate, const ShootingConfig& cfg) {
  NewtonOutcome<Eval> out;
  std::optional<Evaluation> cur;
  try {
    cur = evaluate(x);
  } catch (const IntegrationError&) {
    out.integration_failed = true;
    return out;
  }
  for (int it = 0; it <= cfg.max_newton_iter; ++it) {
    out.iterations = it;
    const double rnorm = cur->residual.norm();
    if (cur->residual.cwiseAbs().maxCoeff() < cfg.residual_tol) {
      out.converged = true;
      out.x = x;
      out.eval = std::move(cur);
      return out;
    }
    if (it == cfg.max_newton_iter) break;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(cur->jacobian);
    if (!lu.isInvertible()) break;
    Eigen::VectorXd delta = -lu.solve(cur->residual);
    if (!delta.allFinite()) break;
    // trust radius: a far jump in the unknowns lands on a stiff, costly orbit
    const double radius = std::max(1.0, x.cwiseAbs().maxCoeff());
    const double size = delta.cwiseAbs().maxCoeff();
    if (size > radius) delta *= radius / size;
    double lambda = 1.0;
    bool accepted = false;
    while (lambda > 1e-6) {
      const Eigen::VectorXd trial = x + lambda * delta;
      try {
        Evaluation e = evaluate(trial);
        if (e.residual.allFinite() && e.residual.norm() < rnorm) {
          x = trial;
          cur = std::move(e);
          accepted = true;
          break;
        }
      } catch (const IntegrationError&) {
      }
      lambda *= cfg.damping;
    }
    if (!accepted) break;
  }
  return out;
}

void check_shooting_config(const ShootingConfig& cfg) {
  if (!(cfg.residual_tol > 0.0) || cfg.max_newton_iter < 1 || cfg.multistart_count < 1 || !(cfg.damping > 0.0) ||
      !(cfg.damping < 1.0) || !(cfg.dedup_distance > 0.0) || !(cfg.caustic_tolerance >= 0.0))
    throw std::invalid_argument("invalid shooting configuration");
}

ClassicalField fock_initial_field(const Eigen::VectorXd& n_i, const Eigen::VectorXd& phases, double global_phase) {
  const auto L = n_i.size();
  ClassicalField psi(L);
  psi(0) = std::polar(std::sqrt(n_i(0) + 0.5), global_phase);
  for (Eigen::Index l = 1; l < L; ++l) psi(l) = std::polar(std::sqrt(n_i(l) + 0.5), global_phase + phases(l - 1));
  return psi;
}

// R_d low-discrepancy sequence on the unit cube.
Eigen::VectorXd kronecker_point(int dim, std::int64_t k) {
  double g = 2.0;
  for (int it = 0; it < 64; ++it) g = std::pow(1.0 + g, 1.0 / (dim + 1));
  Eigen::VectorXd u(dim);
  for (int j = 0; j < dim; ++j) {
    const double alpha = std::pow(1.0 / g, j + 1);
    u(j) = std::fmod(0.5 + alpha * static_cast<double>(k), 1.0);
  }
  return u;
}

double unknown_distance(TrajectoryKind kind, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double d = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double diff = kind == TrajectoryKind::fock ? wrap_to_pi(a(j) - b(j)) : a(j) - b(j);
    d = std::max(d, std::abs(diff));
  }
  return d;
}

ShootingResult collect(std::vector<std::optional<Trajectory>>& found, TrajectoryKind kind, const ShootingConfig& cfg,
                       ShootingDiagnostics diag) {
  std::vector<Trajectory> all;
  for (auto& f : found)
    if (f) all.push_back(std::move(*f));
  std::sort(all.begin(), all.end(), [](const Trajectory& a, const Trajectory& b) {
    return std::lexicographical_compare(a.unknowns.begin(), a.unknowns.end(), b.unknowns.begin(), b.unknowns.end());
  });
  ShootingResult out;
  for (auto& t : all) {
    bool dup = false;
    for (const auto& kept : out.trajectories)
      if (unknown_distance(kind, kept.unknowns, t.unknowns) < cfg.dedup_distance) {
        dup = true;
        break;
      }
    if (dup) {
      ++diag.duplicates;
      continue;
    }
    if (t.caustic) ++diag.caustics;
    out.trajectories.push_back(std::move(t));
  }
  if (out.trajectories.empty() && diag.message.empty()) diag.message = "no root found from any seed";
  out.diagnostics = diag;
  return out;
}

}  // namespace

std::string to_string(TrajectoryKind kind) { return kind == TrajectoryKind::fock ? "fock" : "quadrature"; }

TrajectoryKind trajectory_kind_from_string(const std::string& s) {
  if (s == "fock") return TrajectoryKind::fock;
  if (s == "quadrature") return TrajectoryKind::quadrature;
  throw std::invalid_argument("unknown trajectory kind '" + s + "'");
}

cplx prefactor_quadrature(const Trajectory& traj) {
  if (traj.kind != TrajectoryKind::quadrature) throw std::invalid_argument("prefactor_quadrature needs a quadrature trajectory");
  const auto L = traj.b_block.rows();
  const double det = std::abs(traj.b_block.determinant());
  const double mag = 1.0 / std::sqrt(std::pow(4.0 * std::numbers::pi * traj.b * traj.b, static_cast<double>(L)) * det);
  return std::polar(mag, -0.25 * std::numbers::pi * static_cast<double>(L) - 0.5 * std::numbers::pi * traj.maslov);
}

cplx prefactor_fock(const Trajectory& traj) {
  if (traj.kind != TrajectoryKind::fock) throw std::invalid_argument("prefactor_fock needs a Fock trajectory");
  const auto r = traj.b_block.rows();
  if (r == 0) return 1.0;
  const double det = std::abs(traj.b_block.determinant());
  const double mag = 1.0 / std::sqrt(std::pow(2.0 * std::numbers::pi, static_cast<double>(r)) * det);
  return std::polar(mag, -0.25 * std::numbers::pi * static_cast<double>(r) - 0.5 * std::numbers::pi * traj.maslov);
}

Trajectory trajectory_from_initial(const BoseHubbardModel& model, const ClassicalField& psi0, TimeSpan span,
                                   TrajectoryKind kind, const ShootingConfig& cfg) {
  const Eigen::VectorXd th = canonical_phases(psi0, std::arg(psi0(0)));
  Trajectory t = build(model, psi0, span, kind, cfg, kind == TrajectoryKind::fock ? &th : nullptr);
  t.unknowns = kind == TrajectoryKind::fock ? fock_unknowns(psi0) : Eigen::VectorXd(2.0 * cfg.quadrature.b * psi0.imag());
  return t;
}

std::optional<Trajectory> shoot_quadrature_from(const BoseHubbardModel& model, const Eigen::VectorXd& q_i,
                                                const Eigen::VectorXd& q_f, TimeSpan span,
                                                const Eigen::VectorXd& p_guess, const ShootingConfig& cfg) {
  const int L = model.sites();
  if (q_i.size() != L || q_f.size() != L || p_guess.size() != L)
    throw std::invalid_argument("quadrature boundary vectors must have one entry per site");
  const double two_b = 2.0 * cfg.quadrature.b;
  auto field = [&](const Eigen::VectorXd& p) {
    ClassicalField psi(L);
    for (int l = 0; l < L; ++l) psi(l) = cplx(q_i(l), p(l)) / two_b;
    return psi;
  };
  auto evaluate = [&](const Eigen::VectorXd& p) {
    Evaluation e;
    e.tangent = integrate_with_tangent(model, field(p), span, endpoints_only(cfg.integrator, span));
    e.residual = two_b * e.tangent.path.back().psi.real() - q_f;
    e.jacobian = e.tangent.monodromy.block(0, 1);  // dq_f/dp_i
    return e;
  };
  auto res = newton(p_guess, evaluate, cfg);
  if (!res.converged) return std::nullopt;
  Trajectory t = build(model, field(res.x), span, TrajectoryKind::quadrature, cfg);
  t.unknowns = res.x;
  t.residual = res.eval->residual.cwiseAbs().maxCoeff();
  t.newton_iterations = res.iterations;
  return t;
}

ShootingResult shoot_quadrature(const BoseHubbardModel& model, const Eigen::VectorXd& q_i, const Eigen::VectorXd& q_f,
                                TimeSpan span, const ShootingConfig& cfg) {
  check_shooting_config(cfg);
  const int L = model.sites();
  if (q_i.size() != L || q_f.size() != L)
    throw std::invalid_argument("quadrature boundary vectors must have one entry per site");
  const double two_b = 2.0 * cfg.quadrature.b;
  // momentum seeds spread over the scale set by the boundary amplitudes
  const double amp2 = (q_i.squaredNorm() + q_f.squaredNorm()) / (2.0 * L * two_b * two_b);
  const double sigma = two_b * std::sqrt(std::max(0.5, amp2));

  std::vector<std::optional<Trajectory>> found(cfg.multistart_count);
  std::vector<int> status(cfg.multistart_count, 0);
  parallel_for(cfg.multistart_count, cfg.threads, [&](std::int64_t k) {
    Eigen::VectorXd guess = Eigen::VectorXd::Zero(L);
    if (k > 0) {
      Stream rng(substream_seed(cfg.seed, stream_tag::multistart, static_cast<std::uint64_t>(k)));
      for (int l = 0; l < L; ++l) guess(l) = sigma * rng.normal();
    }
    try {
      found[k] = shoot_quadrature_from(model, q_i, q_f, span, guess, cfg);
      status[k] = found[k] ? 1 : 2;
    } catch (const IntegrationError&) {
      status[k] = 3;
    }
  });
  ShootingDiagnostics diag;
  diag.seeds = cfg.multistart_count;
  for (int s : status) {
    diag.converged += s == 1;
    diag.diverged += s == 2;
    diag.integration_failures += s == 3;
  }
  return collect(found, TrajectoryKind::quadrature, cfg, diag);
}

std::optional<Trajectory> shoot_fock_from(const BoseHubbardModel& model, const Eigen::VectorXd& n_i,
                                          const Eigen::VectorXd& n_f, TimeSpan span,
                                          const Eigen::VectorXd& phase_guess, const ShootingConfig& cfg,
                                          double global_phase) {
  const int L = model.sites();
  if (n_i.size() != L || n_f.size() != L)
    throw std::invalid_argument("occupation vectors must have one entry per site");
  if (phase_guess.size() != L - 1) throw std::invalid_argument("phase guess must have L-1 entries");
  if ((n_i.array() <= -0.5).any() || (n_f.array() <= -0.5).any())
    throw std::invalid_argument("occupations must exceed -1/2");
  if (std::abs(n_i.sum() - n_f.sum()) > 1e-9) return std::nullopt;

  auto evaluate = [&](const Eigen::VectorXd& phases) {
    Evaluation e;
    const ClassicalField psi0 = fock_initial_field(n_i, phases, global_phase);
    e.tangent = integrate_with_tangent(model, psi0, span, endpoints_only(cfg.integrator, span));
    const ClassicalField& psi_f = e.tangent.path.back().psi;
    e.residual.resize(L - 1);
    for (int l = 1; l < L; ++l) e.residual(l - 1) = std::norm(psi_f(l)) - 0.5 - n_f(l);
    e.jacobian = (reduced_output(psi_f) * e.tangent.monodromy.matrix * reduced_input(psi0)).topRightCorner(L - 1, L - 1);
    return e;
  };
  if (L == 1) {
    if (std::abs(n_f(0) - n_i(0)) > cfg.residual_tol) return std::nullopt;
    const Eigen::VectorXd th = Eigen::VectorXd::Constant(1, global_phase);
    Trajectory t = build(model, fock_initial_field(n_i, Eigen::VectorXd(0), global_phase), span, TrajectoryKind::fock,
                         cfg, &th);
    t.unknowns = Eigen::VectorXd(0);
    t.residual = std::abs(t.final.n(0) - n_f(0));
    return t;
  }
  auto res = newton(phase_guess, evaluate, cfg);
  if (!res.converged) return std::nullopt;
  const ClassicalField psi0 = fock_initial_field(n_i, res.x, global_phase);
  const Eigen::VectorXd th = canonical_phases(psi0, global_phase);
  Trajectory t = build(model, psi0, span, TrajectoryKind::fock, cfg, &th);
  t.unknowns = res.x.unaryExpr([](double a) { return wrap_to_two_pi(a); });
  t.residual = res.eval->residual.cwiseAbs().maxCoeff();
  t.newton_iterations = res.iterations;
  return t;
}

ShootingResult shoot_fock(const BoseHubbardModel& model, const Eigen::VectorXd& n_i, const Eigen::VectorXd& n_f,
                          TimeSpan span, const ShootingConfig& cfg) {
  check_shooting_config(cfg);
  const int L = model.sites();
  if (n_i.size() != L || n_f.size() != L)
    throw std::invalid_argument("occupation vectors must have one entry per site");
  ShootingDiagnostics diag;
  if (std::abs(n_i.sum() - n_f.sum()) > 1e-9) {
    std::ostringstream msg;
    msg << "particle number not conserved: sum n_i = " << n_i.sum() << ", sum n_f = " << n_f.sum();
    diag.message = msg.str();
    return {{}, diag};
  }
  if (L == 1) {
    diag.seeds = 1;
    std::vector<std::optional<Trajectory>> found(1);
    found[0] = shoot_fock_from(model, n_i, n_f, span, Eigen::VectorXd(0), cfg);
    diag.converged = found[0] ? 1 : 0;
    if (!found[0]) diag.message = "single site: occupation must be conserved";
    return collect(found, TrajectoryKind::fock, cfg, diag);
  }

  Eigen::VectorXd offset = Eigen::VectorXd::Zero(L - 1);
  if (cfg.seed != 0) {
    Stream rng(substream_seed(cfg.seed, stream_tag::multistart, 0));
    for (int j = 0; j < L - 1; ++j) offset(j) = rng.uniform();
  }
  std::vector<std::optional<Trajectory>> found(cfg.multistart_count);
  std::vector<int> status(cfg.multistart_count, 0);
  parallel_for(cfg.multistart_count, cfg.threads, [&](std::int64_t k) {
    Eigen::VectorXd u = kronecker_point(L - 1, k) + offset;
    const Eigen::VectorXd guess = kTwoPi * u.unaryExpr([](double v) { return v - std::floor(v); });
    try {
      found[k] = shoot_fock_from(model, n_i, n_f, span, guess, cfg);
      status[k] = found[k] ? 1 : 2;
    } catch (const IntegrationError&) {
      status[k] = 3;
    }
  });
  diag.seeds = cfg.multistart_count;
  for (int s : status) {
    diag.converged += s == 1;
    diag.diverged += s == 2;
    diag.integration_failures += s == 3;
  }
  return collect(found, TrajectoryKind::fock, cfg, diag);
}

ShootingResult shoot_fock(const BoseHubbardModel& model, const std::vector<int>& n_i, const std::vector<int>& n_f,
                          TimeSpan span, const ShootingConfig& cfg) {
  Eigen::VectorXd a(n_i.size()), b(n_f.size());
  for (std::size_t l = 0; l < n_i.size(); ++l) a(l) = n_i[l];
  for (std::size_t l = 0; l < n_f.size(); ++l) b(l) = n_f[l];
  return shoot_fock(model, a, b, span, cfg);
}

Trajectory time_reverse(const BoseHubbardModel& model, const Trajectory& traj, const ShootingConfig& cfg) {
  const GaugeReport gauge = analyze_time_reversal(model);
  if (!gauge.is_trs) throw std::invalid_argument("time_reverse needs a time-reversal symmetric model");
  const int L = model.sites();
  const Eigen::VectorXd& chi = gauge.phases;
  if (traj.kind == TrajectoryKind::quadrature && chi.cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("quadrature time reversal needs the model in its real gauge");

  // z' = K z with K = rotation by -2 chi after complex conjugation
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2 * L, 2 * L);
  for (int l = 0; l < L; ++l) {
    const double c = std::cos(-2.0 * chi(l)), s = std::sin(-2.0 * chi(l));
    k(l, l) = c;
    k(l, L + l) = s;  // x' = c x - s (-y)
    k(L + l, l) = s;
    k(L + l, L + l) = -c;
  }
  const Eigen::MatrixXd k_inv = k.inverse();
  const MeanFieldPath& src = traj.path;
  const double t0 = src.t_initial(), t1 = src.t_final();
  const Eigen::MatrixXd m_total_inv = src.back().monodromy.fullPivLu().inverse();
  const PathSample& last = src.back();
  const cplx unit(0.0, 1.0);

  Trajectory out;
  out.kind = traj.kind;
  out.hbar = traj.hbar;
  MeanFieldPath& path = out.path;
  path.energy = src.energy;
  path.norm = src.norm;
  path.max_energy_drift = src.max_energy_drift;
  path.max_norm_drift = src.max_norm_drift;
  path.accepted_steps = src.accepted_steps;
  path.rejected_steps = src.rejected_steps;
  for (auto it = src.samples.rbegin(); it != src.samples.rend(); ++it) {
    PathSample s;
    s.t = t0 + t1 - it->t;
    s.psi.resize(L);
    for (int l = 0; l < L; ++l) s.psi(l) = std::exp(-2.0 * unit * chi(l)) * std::conj(it->psi(l));
    s.phase = -2.0 * chi - it->phase;
    s.kinetic = last.kinetic - it->kinetic;
    s.area = last.area - it->area;
    s.energy_integral = last.energy_integral - it->energy_integral;
    s.monodromy = k * it->monodromy * m_total_inv * k_inv;
    path.samples.push_back(std::move(s));
  }
  path.samples.front().t = t0;
  path.samples.back().t = t1;
  ShootingConfig same_scale = cfg;
  same_scale.quadrature.b = traj.b;
  assemble(out, same_scale);
  out.unknowns = traj.kind == TrajectoryKind::fock ? fock_unknowns(path.front().psi)
                                                   : Eigen::VectorXd(2.0 * traj.b * path.front().psi.imag());
  out.residual = traj.residual;
  out.newton_iterations = 0;
  return out;
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  const int L = static_cast<int>(traj.path.front().psi.size());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "# fockscatter trajectory v1\n";
  out << "# kind " << to_string(traj.kind) << '\n';
  out << "# sites " << L << '\n';
  out << "# t_initial " << traj.path.t_initial() << '\n';
  out << "# t_final " << traj.path.t_final() << '\n';
  out << "# action " << traj.action << '\n';
  out << "# energy " << traj.energy << '\n';
  out << "# prefactor_re " << traj.prefactor.real() << '\n';
  out << "# prefactor_im " << traj.prefactor.imag() << '\n';
  out << "# residual " << traj.residual << '\n';
  out << "# caustic " << (traj.caustic ? 1 : 0) << '\n';
  out << "# maslov " << traj.maslov << '\n';
  out << "# columns t";
  for (int l = 1; l <= L; ++l) out << " re_psi_" << l << " im_psi_" << l;
  out << '\n';
  for (const auto& s : traj.path.samples) {
    out << s.t;
    for (int l = 0; l < L; ++l) out << ' ' << s.psi(l).real() << ' ' << s.psi(l).imag();
    out << '\n';
  }
}

TrajectoryRecord read_trajectory(std::istream& in) {
  TrajectoryRecord rec;
  std::map<std::string, std::string> header;
  std::string line;
  bool magic = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "fockscatter") {
        magic = true;
        continue;
      }
      std::string rest;
      std::getline(ls, rest);
      header[key] = rest.empty() ? rest : rest.substr(rest.find_first_not_of(' '));
      continue;
    }
    if (!magic) throw std::runtime_error("trajectory dump: missing header");
    if (rec.sites == 0) {
      if (!header.count("sites")) throw std::runtime_error("trajectory dump: missing 'sites'");
      rec.sites = std::stoi(header.at("sites"));
      if (rec.sites < 1) throw std::runtime_error("trajectory dump: bad site count");
    }
    std::istringstream ls(line);
    double t;
    if (!(ls >> t)) throw std::runtime_error("trajectory dump: bad sample line '" + line + "'");
    ClassicalField psi(rec.sites);
    for (int l = 0; l < rec.sites; ++l) {
      double re, im;
      if (!(ls >> re >> im)) throw std::runtime_error("trajectory dump: short sample line '" + line + "'");
      psi(l) = cplx(re, im);
    }
    std::string extra;
    if (ls >> extra) throw std::runtime_error("trajectory dump: trailing data in '" + line + "'");
    rec.times.push_back(t);
    rec.psi.push_back(std::move(psi));
  }
  if (!magic) throw std::runtime_error("trajectory dump: missing header");
  auto get = [&](const char* key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw std::runtime_error(std::string("trajectory dump: missing '") + key + "'");
    return it->second;
  };
  try {
    rec.kind = trajectory_kind_from_string(get("kind"));
    rec.sites = std::stoi(get("sites"));
    rec.t_initial = std::stod(get("t_initial"));
    rec.t_final = std::stod(get("t_final"));
    rec.action = std::stod(get("action"));
    rec.energy = std::stod(get("energy"));
    rec.prefactor = cplx(std::stod(get("prefactor_re")), std::stod(get("prefactor_im")));
    rec.residual = std::stod(get("residual"));
    rec.caustic = std::stoi(get("caustic")) != 0;
    rec.maslov = std::stoi(get("maslov"));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("trajectory dump: bad header value (") + e.what() + ")");
  }
  return rec;
}

}  // namespace fockscatter
