#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "fockscatter/meanfield.hpp"
#include "support.hpp"

using namespace fockscatter;

namespace {

ClassicalField random_field(int sites, std::uint64_t seed, double scale = 1.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  ClassicalField psi(sites);
  for (int l = 0; l < sites; ++l) psi(l) = cplx(g(rng), g(rng));
  return psi;
}

BoseHubbardModel chaotic_trimer() {
  ModelConfig cfg;
  cfg.sites = 3;
  cfg.geometry = Geometry::ring;
  cfg.interaction = 0.6;
  cfg.onsite = {0.2, -0.1, 0.0};
  return build_model(cfg);
}

ClassicalField trimer_start() {
  ClassicalField psi(3);
  psi << std::polar(std::sqrt(4.5), 0.0), std::polar(std::sqrt(1.5), 1.3), std::polar(std::sqrt(0.5), -2.2);
  return psi;
}

Eigen::MatrixXd real_rotation(const Eigen::MatrixXcd& u) {
  const auto L = u.rows();
  Eigen::MatrixXd m(2 * L, 2 * L);
  m << u.real(), -u.imag(), u.imag(), u.real();
  return m;
}

}  // namespace

TEST_CASE("classical Hamiltonian closed forms") {
  SUBCASE("empty field, no interaction") {
    const auto base = testing::random_model(3, 2, false);
    const BoseHubbardModel model(base.hopping(), Interaction(Eigen::VectorXd::Zero(3)));
    CHECK(classical_hamiltonian(model, ClassicalField::Zero(3)) ==
          doctest::Approx(-0.5 * model.hopping().trace().real()));
  }
  SUBCASE("single site reproduces the Fock energy at |psi|^2 = n + 1/2") {
    Eigen::MatrixXcd h(1, 1);
    h(0, 0) = 0.7;
    const BoseHubbardModel model(h, Interaction(Eigen::VectorXd::Constant(1, 0.4)));
    for (int n = 0; n < 6; ++n) {
      ClassicalField psi(1);
      psi(0) = std::polar(std::sqrt(n + 0.5), 0.4 * n);
      CHECK(classical_hamiltonian(model, psi) == doctest::Approx(0.7 * n + 0.2 * n * (n - 1)));
    }
  }
  SUBCASE("Hermitian models give real energies") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto model = testing::random_model(4, seed);
      CHECK(std::abs(classical_hamiltonian_complex(model, random_field(4, seed + 10)).imag()) < 1e-12);
    }
  }
  CHECK_THROWS_AS(classical_hamiltonian(build_model({}), ClassicalField::Zero(3)), std::invalid_argument);
}

TEST_CASE("equations of motion are the analytic gradient") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto model = testing::random_model(3, seed);
    const ClassicalField psi = random_field(3, 100 + seed);
    const ClassicalField g = field_gradient(model, psi);
    const double h = 1e-5;
    for (int l = 0; l < 3; ++l) {
      ClassicalField p = psi, m = psi;
      p(l) += h;
      m(l) -= h;
      const double dx = (classical_hamiltonian(model, p) - classical_hamiltonian(model, m)) / (2 * h);
      p = psi;
      m = psi;
      p(l) += cplx(0.0, h);
      m(l) -= cplx(0.0, h);
      const double dy = (classical_hamiltonian(model, p) - classical_hamiltonian(model, m)) / (2 * h);
      // dH/dpsi* = (dH/dx + i dH/dy) / 2
      const cplx fd(0.5 * dx, 0.5 * dy);
      CHECK(std::abs(g(l) - fd) < 1e-7 * std::max(1.0, std::abs(fd)));
    }
    CHECK((eom_rhs(model, psi) - cplx(0.0, -1.0) * g).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("flow Jacobian matches finite differences") {
  const auto model = testing::random_model(3, 9);
  const ClassicalField psi = random_field(3, 77);
  const Eigen::MatrixXd jac = eom_jacobian(model, psi);
  const double h = 1e-6;
  auto flow = [&](const Eigen::VectorXd& z) { return to_real(eom_rhs(model, from_real(z, 3))); };
  const Eigen::VectorXd z = to_real(psi);
  for (int k = 0; k < 6; ++k) {
    Eigen::VectorXd zp = z, zm = z;
    zp(k) += h;
    zm(k) -= h;
    const Eigen::VectorXd col = (flow(zp) - flow(zm)) / (2 * h);
    CHECK((col - jac.col(k)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("single site: phase rotation at the nonlinear frequency") {
  Eigen::MatrixXcd h(1, 1);
  h(0, 0) = 0.3;
  const double u = 0.8, hbar = 1.3;
  const BoseHubbardModel model(h, Interaction(Eigen::VectorXd::Constant(1, u)), hbar);
  ClassicalField psi0(1);
  psi0(0) = std::polar(2.0, 0.5);
  const double t = 7.0;
  const auto path = integrate(model, psi0, {0.0, t});
  const cplx expected = psi0(0) * std::polar(1.0, -t * (0.3 + u * (std::norm(psi0(0)) - 1.0)) / hbar);
  CHECK(std::abs(path.back().psi(0) - expected) < 1e-8);
  // the unwrapped phase keeps counting past pi
  const double omega = (0.3 + u * 3.0) / hbar;
  CHECK(path.back().phase(0) == doctest::Approx(0.5 - omega * t).epsilon(1e-9));
}

TEST_CASE("linear flow equals the matrix exponential") {
  const auto base = testing::random_model(4, 31, false);
  const BoseHubbardModel model(base.hopping(), Interaction(Eigen::VectorXd::Zero(4)), 0.9);
  const ClassicalField psi0 = random_field(4, 5);
  const double t = 6.0;
  const Eigen::MatrixXcd u = (model.hopping() * cplx(0.0, -t / 0.9)).exp();
  const auto res = integrate_with_tangent(model, psi0, {1.0, 1.0 + t});
  CHECK((res.path.back().psi - u * psi0).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((res.monodromy.matrix - real_rotation(u)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("invariants over a long chaotic run") {
  const auto model = chaotic_trimer();
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-14;
  const auto path = integrate(model, trimer_start(), {0.0, 100.0}, cfg);
  CHECK(path.max_energy_drift < 1e-8);
  CHECK(path.max_norm_drift < 1e-10);
  CHECK(path.energy == doctest::Approx(classical_hamiltonian(model, trimer_start())));
}

TEST_CASE("tangent dynamics") {
  const auto model = chaotic_trimer();
  SUBCASE("zero-length span gives the identity") {
    const auto res = integrate_with_tangent(model, trimer_start(), {2.0, 2.0});
    CHECK(res.monodromy.matrix.isIdentity(0.0));
    CHECK(res.path.samples.size() == 1);
  }
  SUBCASE("monodromy stays symplectic") {
    const auto res = integrate_with_tangent(model, trimer_start(), {0.0, 20.0});
    CHECK(res.monodromy.symplectic_defect() < 1e-8);
  }
  SUBCASE("linearization error is second order") {
    const double t = 5.0;
    const auto res = integrate_with_tangent(model, trimer_start(), {0.0, t});
    Eigen::VectorXd dz(6);
    dz << 0.3, -0.2, 0.1, 0.25, 0.05, -0.15;
    double previous = 0.0;
    for (double eps : {1e-3, 5e-4, 2.5e-4}) {
      const ClassicalField p0 = from_real(to_real(trimer_start()) + eps * dz, 3);
      const auto moved = integrate(model, p0, {0.0, t});
      const Eigen::VectorXd diff = to_real(moved.back().psi) - to_real(res.path.back().psi);
      const double err = (diff - res.monodromy.matrix * (eps * dz)).norm();
      if (previous > 0.0) CHECK(err / previous == doctest::Approx(0.25).epsilon(0.1));
      previous = err;
    }
  }
  SUBCASE("block accessors") {
    const auto res = integrate_with_tangent(model, trimer_start(), {0.0, 1.0});
    const auto& m = res.monodromy;
    CHECK((m.block(1, 0) - m.matrix.block(3, 0, 3, 3)).norm() == 0.0);
    const Eigen::MatrixXd x = m.x_ratio();
    CHECK((x * m.block(1, 1) + m.block(0, 1)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(m.caustic_indicator() > 0.0);
  }
}

TEST_CASE("conjugated reversed trajectory solves a real model") {
  ModelConfig cfg;
  cfg.sites = 4;
  cfg.onsite = {0.3, -0.2, 0.1, -0.4};
  const auto model = build_model(cfg);
  REQUIRE(model.is_real());
  const ClassicalField psi0 = random_field(4, 3, 1.0);
  const double t = 8.0;
  const auto forward = integrate(model, psi0, {0.0, t});
  const auto back = integrate(model, forward.back().psi.conjugate(), {0.0, t});
  CHECK((back.back().psi - psi0.conjugate()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("sampling options") {
  const auto model = chaotic_trimer();
  IntegratorConfig cfg;
  cfg.dense_output_stride = 0.5;
  const auto path = integrate(model, trimer_start(), {0.0, 3.2}, cfg);
  REQUIRE(path.samples.size() == 8);
  CHECK(path.samples[3].t == doctest::Approx(1.5));
  CHECK(path.back().t == 3.2);

  const std::vector<double> times{0.0, 0.7, 1.5, 3.2};
  const auto states = integrate_to_times(model, trimer_start(), 0.0, times);
  REQUIRE(states.size() == 4);
  CHECK((states[0] - trimer_start()).norm() == 0.0);
  CHECK((states[2] - path.samples[3].psi).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((states[3] - path.back().psi).cwiseAbs().maxCoeff() < 1e-8);

  CHECK_THROWS_AS(integrate(model, trimer_start(), {1.0, 0.0}), std::invalid_argument);
  IntegratorConfig bad;
  bad.rel_tol = 0.0;
  CHECK_THROWS_AS(integrate(model, trimer_start(), {0.0, 1.0}, bad), std::invalid_argument);
}

TEST_CASE("action accumulators") {
  // single site: n is constant, so the Fock action is -E t
  Eigen::MatrixXcd h(1, 1);
  h(0, 0) = 0.25;
  const BoseHubbardModel model(h, Interaction(Eigen::VectorXd::Constant(1, 0.5)));
  ClassicalField psi0(1);
  psi0(0) = std::sqrt(3.5);
  const auto path = integrate(model, psi0, {0.0, 4.0});
  CHECK(path.fock_action(1.0) == doctest::Approx(-path.energy * 4.0).epsilon(1e-10));
  // quadrature form: hbar int 2 y x' dt - E t, checked against trapezoid on a fine resampling
  IntegratorConfig fine;
  fine.dense_output_stride = 1e-4;
  const auto dense = integrate(model, psi0, {0.0, 4.0}, fine);
  double kin = 0.0;
  for (std::size_t k = 1; k < dense.samples.size(); ++k) {
    const auto& a = dense.samples[k - 1];
    const auto& b = dense.samples[k];
    const double ym = 0.5 * (a.psi(0).imag() + b.psi(0).imag());
    kin += 2.0 * ym * (b.psi(0).real() - a.psi(0).real());
  }
  CHECK(path.quadrature_action(1.0) == doctest::Approx(kin - path.energy * 4.0).epsilon(1e-6));
}
