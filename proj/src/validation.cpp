#include "fockscatter/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fockscatter/meanfield.hpp"
#include "fockscatter/random.hpp"

namespace fockscatter {

namespace {

CheckResult below(std::string name, double value, double threshold, std::string note = {}) {
  return {std::move(name), value, threshold, value < threshold, false, std::move(note)};
}

CheckResult skipped(std::string name, std::string note) { return {std::move(name), 0.0, 0.0, true, true, std::move(note)}; }

constexpr std::int64_t kDenseLimit = 1500;

}  // namespace

std::vector<CheckResult> run_validation_suite(const RunConfig& config) {
  std::vector<CheckResult> out;
  const BoseHubbardModel model = model_from_config(config);
  const FockState& n_i = config.transition.initial;
  if (static_cast<int>(n_i.size()) != model.sites())
    throw ConfigError("validate: [transition] initial has " + std::to_string(n_i.size()) + " entries for " +
                      std::to_string(model.sites()) + " sites");
  const double t_max = config.transition.times.empty() ? 1.0 : config.transition.times.back();
  const int L = model.sites();

  const FockBasis basis(L, total_particles(n_i));
  const SparseHamiltonian h = build_hamiltonian(model, basis);
  const Eigen::MatrixXcd dense_h = Eigen::MatrixXcd(h);
  const double hnorm = std::max(1.0, dense_h.cwiseAbs().maxCoeff());
  out.push_back(below("hamiltonian_hermitian", (dense_h - dense_h.adjoint()).cwiseAbs().maxCoeff() / hnorm, 1e-12));

  if (basis.size() <= kDenseLimit) {
    const Eigen::MatrixXcd u = dense_propagator(h, model.hbar(), t_max);
    const Eigen::MatrixXcd defect = u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols());
    out.push_back(below("propagator_unitarity", defect.cwiseAbs().maxCoeff(), 1e-10));
  } else {
    out.push_back(skipped("propagator_unitarity", "dimension above dense limit"));
  }

  const QuantumState psi0 = fock_state_vector(basis, n_i);
  const QuantumState psi_t = evolve(psi0, h, model.hbar(), t_max);
  const double e0 = energy_expectation(h, psi0), e1 = energy_expectation(h, psi_t);
  out.push_back(below("exact_energy_conservation", std::abs(e1 - e0) / std::max(1.0, std::abs(e0)), 1e-9));
  out.push_back(below("exact_norm", std::abs(psi_t.norm() - 1.0), 1e-10));

  // mean-field field on the Fock torus of n_i with fixed pseudo-random phases
  Stream rng(substream_seed(config.run.seed, stream_tag::monte_carlo, 0xfeed));
  ClassicalField field(L);
  for (int l = 0; l < L; ++l)
    field(l) = std::polar(std::sqrt(n_i[static_cast<std::size_t>(l)] + 0.5), 2.0 * std::numbers::pi * rng.uniform());

  IntegratorConfig tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  tight.dense_output_stride = config.validate.horizon;
  const MeanFieldPath path = integrate(model, field, TimeSpan{0.0, config.validate.horizon}, tight);
  out.push_back(below("meanfield_energy_drift", path.max_energy_drift, 1e-8));
  out.push_back(below("meanfield_norm_drift", path.max_norm_drift, 1e-8));

  {
    // eom_rhs against central differences of H_cl in (Re psi, Im psi)
    const Eigen::VectorXd z = to_real(field);
    const ClassicalField rhs = eom_rhs(model, field);
    double err = 0.0, scale = 0.0;
    for (int l = 0; l < L; ++l) {
      const double step = 1e-6 * std::max(1.0, std::abs(field(l)));
      auto h_at = [&](int comp, double d) {
        Eigen::VectorXd zz = z;
        zz(comp) += d;
        return classical_hamiltonian(model, from_real(zz, L));
      };
      const double dx = (h_at(l, step) - h_at(l, -step)) / (2 * step);
      const double dy = (h_at(L + l, step) - h_at(L + l, -step)) / (2 * step);
      // i hbar psi' = dH/dpsi*, with dH/dpsi* = (dH/dx + i dH/dy) / 2
      const cplx expected = cplx(dx, dy) / (2.0 * cplx(0.0, model.hbar()));
      err = std::max(err, std::abs(rhs(l) - expected));
      scale = std::max(scale, std::abs(expected));
    }
    out.push_back(below("eom_gradient", err / std::max(1.0, scale), 1e-7));
  }

  {
    IntegratorConfig cfg = tight;
    cfg.dense_output_stride = 10.0;
    const TangentPath tp = integrate_with_tangent(model, field, TimeSpan{0.0, std::min(10.0, config.validate.horizon)}, cfg);
    out.push_back(below("tangent_symplectic", tp.monodromy.symplectic_defect(), 1e-8));
  }

  const GaugeReport gauge = analyze_time_reversal(model);
  if (gauge.is_trs) {
    const double T = 5.0;
    IntegratorConfig cfg = tight;
    cfg.dense_output_stride = T;
    const ClassicalField end = integrate(model, field, TimeSpan{0.0, T}, cfg).back().psi;
    Eigen::VectorXcd rot(L);
    for (int l = 0; l < L; ++l) rot(l) = std::polar(1.0, -2.0 * gauge.phases(l));
    const ClassicalField reversed0 = rot.cwiseProduct(end.conjugate());
    const ClassicalField reversed_end = integrate(model, reversed0, TimeSpan{0.0, T}, cfg).back().psi;
    const ClassicalField expected = rot.cwiseProduct(field.conjugate());
    out.push_back(below("time_reversal", (reversed_end - expected).norm() / expected.norm(), 1e-8));
  } else {
    out.push_back(skipped("time_reversal", "model breaks time reversal"));
  }

  {
    ClassicalSamplingOptions opts = sampling_from_config(config);
    const ClassicalDistribution d =
        classical_distribution(model, n_i, {0.0, t_max}, config.validate.samples, config.run.seed, opts);
    const double start = std::abs(d.probabilities[0](basis.index(n_i)) - 1.0);
    out.push_back(below("classical_start", start, 1e-15));
    const double total = std::abs(d.probabilities[1].sum() + d.out_of_basis[1] - 1.0);
    out.push_back(below("classical_normalization", total, 1e-12,
                        "out_of_basis=" + std::to_string(d.out_of_basis[1])));
  }

  {
    Eigen::MatrixXcd h1(1, 1);
    h1(0, 0) = model.hopping()(0, 0);
    const BoseHubbardModel single(h1, Interaction(Eigen::VectorXd::Constant(1, model.interaction().onsite()(0))),
                                  model.hbar());
    const auto shot = shoot_fock(single, std::vector<int>{n_i[0]}, std::vector<int>{n_i[0]}, TimeSpan{0.0, t_max},
                                 shooting_from_config(config));
    if (shot.trajectories.size() != 1) {
      out.push_back({"single_site_prefactor", 0.0, 0.0, false, false, "no single-site trajectory"});
    } else {
      const cplx a = shot.trajectories.front().prefactor;
      out.push_back({"single_site_prefactor", std::abs(a - 1.0), 0.0, a == cplx(1.0), false, "must equal 1 exactly"});
    }
  }
  return out;
}

}  // namespace fockscatter
