#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "fockscatter/fock.hpp"
#include "support.hpp"

using namespace fockscatter;

namespace {

// Ladder operators on the truncated product space (cutoff occupations 0..c).
std::vector<Eigen::MatrixXcd> ladder_ops(int sites, int cutoff) {
  const int d = cutoff + 1;
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  std::vector<Eigen::MatrixXcd> ops;
  for (int l = 0; l < sites; ++l) {
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Identity(1, 1);
    for (int s = 0; s < sites; ++s) {
      const Eigen::MatrixXcd f = s == l ? a : Eigen::MatrixXcd::Identity(d, d);
      Eigen::MatrixXcd next(op.rows() * d, op.cols() * d);
      for (int i = 0; i < op.rows(); ++i)
        for (int j = 0; j < op.cols(); ++j) next.block(i * d, j * d, d, d) = op(i, j) * f;
      op = next;
    }
    ops.push_back(op);
  }
  return ops;
}

std::int64_t product_index(const FockState& n, int cutoff) {
  std::int64_t idx = 0;
  for (int v : n) idx = idx * (cutoff + 1) + v;
  return idx;
}

Eigen::MatrixXcd brute_force_hamiltonian(const BoseHubbardModel& model, const FockBasis& basis) {
  const int L = model.sites();
  const int c = basis.particles();
  const auto a = ladder_ops(L, c);
  const auto dim = a[0].rows();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (int l = 0; l < L; ++l)
    for (int m = 0; m < L; ++m)
      if (model.hopping()(l, m) != 0.0) h += model.hopping()(l, m) * a[l].adjoint() * a[m];
  for (int l = 0; l < L; ++l)
    h += 0.5 * model.interaction().onsite()(l) * a[l].adjoint() * a[l].adjoint() * a[l] * a[l];
  for (const auto& [idx, v] : model.interaction().general())
    h += 0.5 * v * a[idx[0]].adjoint() * a[idx[1]].adjoint() * a[idx[2]] * a[idx[3]];
  Eigen::MatrixXcd out(basis.size(), basis.size());
  for (std::int64_t i = 0; i < basis.size(); ++i)
    for (std::int64_t j = 0; j < basis.size(); ++j)
      out(i, j) = h(product_index(basis.state(i), c), product_index(basis.state(j), c));
  return out;
}

}  // namespace

TEST_CASE("basis enumeration and ranking") {
  const FockBasis b(2, 2);
  REQUIRE(b.size() == 3);
  CHECK(b.state(0) == FockState{2, 0});
  CHECK(b.state(1) == FockState{1, 1});
  CHECK(b.state(2) == FockState{0, 2});

  const FockBasis big(4, 8);
  CHECK(big.size() == 165);
  CHECK(FockBasis::dimension(4, 8) == 165);
  for (std::int64_t k = 0; k < big.size(); ++k) CHECK(big.index(big.state(k)) == k);
  CHECK_FALSE(big.find(FockState{2, 2, 2, 1}).has_value());
  CHECK_FALSE(big.find(FockState{2, 2, 2}).has_value());
  CHECK_THROWS_AS(big.index(FockState{9, 0, 0, -1}), BasisError);
  CHECK_THROWS_AS(FockBasis(6, 30, 1000), BasisError);
  CHECK(format_state(FockState{3, 0, 1}) == "(3,0,1)");
}

TEST_CASE("Hamiltonian matches the ladder-operator construction") {
  for (std::uint64_t seed : {3u, 4u}) {
    const auto model = testing::random_model(3, seed);
    const FockBasis basis(3, 3);
    const Eigen::MatrixXcd h = build_hamiltonian(model, basis);
    const Eigen::MatrixXcd ref = brute_force_hamiltonian(model, basis);
    CHECK((h - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("gauge-transformed model has the same spectrum") {
  ModelConfig cfg;
  cfg.flux_per_bond = 0.37;
  cfg.onsite = {0.1, -0.3, 0.2, 0.05};
  const auto model = build_model(cfg);
  Eigen::VectorXd chi(4);
  chi << 0.3, -1.2, 2.0, 0.7;
  const FockBasis basis(4, 5);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e1(Eigen::MatrixXcd(build_hamiltonian(model, basis)));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e2(
      Eigen::MatrixXcd(build_hamiltonian(model.gauge_transformed(chi), basis)));
  CHECK((e1.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("noninteracting transitions follow the permanent formula") {
  std::mt19937_64 rng(11);
  SUBCASE("dimer") {
    ModelConfig cfg;
    cfg.sites = 2;
    cfg.geometry = Geometry::chain;
    cfg.interaction = 0.0;
    cfg.onsite = {0.3, -0.2};
    const auto model = build_model(cfg);
    const double t = 1.7;
    const Eigen::MatrixXcd u = (model.hopping() * cplx(0.0, -t)).exp();
    const FockBasis basis(2, 6);
    const FockState n_i{4, 2};
    const auto probs = transition_probabilities_exact(model, basis, n_i, t);
    double total = 0.0;
    for (std::int64_t k = 0; k < basis.size(); ++k) {
      const double ref = std::norm(testing::boson_amplitude(u, n_i, basis.state(k)));
      CHECK(std::abs(probs(k) - ref) < 1e-9);
      total += probs(k);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("random trimer, Krylov path") {
    const auto base = testing::random_model(3, 21, false);
    const BoseHubbardModel model(base.hopping(), Interaction(Eigen::VectorXd::Zero(3)));
    const double t = 2.3;
    const Eigen::MatrixXcd u = (model.hopping() * cplx(0.0, -t)).exp();
    const FockBasis basis(3, 5);
    const FockState n_i{2, 0, 3};
    EvolveOptions opts;
    opts.dense_threshold = 0;
    const auto psi = evolve(fock_state_vector(basis, n_i), model, basis, t, opts);
    for (std::int64_t k = 0; k < basis.size(); ++k) {
      const cplx ref = testing::boson_amplitude(u, n_i, basis.state(k));
      CHECK(std::abs(psi(k) - ref) < 1e-9);
    }
  }
}

TEST_CASE("dense propagator is unitary and Krylov agrees with it") {
  const auto model = testing::random_model(3, 5);
  const FockBasis basis(3, 6);
  const auto h = build_hamiltonian(model, basis);
  const Eigen::MatrixXcd u = dense_propagator(h, model.hbar(), 3.1);
  const auto n = u.rows();
  CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);

  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(n);
  psi0(0) = 0.6;
  psi0(5) = cplx(0.0, 0.8);
  EvolveOptions krylov;
  krylov.dense_threshold = 0;
  const auto a = evolve(psi0, h, model.hbar(), 3.1, krylov);
  CHECK((a - u * psi0).cwiseAbs().maxCoeff() < 1e-10);
  const double e0 = energy_expectation(h, psi0);
  CHECK(std::abs(energy_expectation(h, a) - e0) < 1e-9 * std::abs(e0));
  CHECK(std::abs(a.norm() - 1.0) < 1e-12);

  const SpectralPropagator sp(h, model.hbar());
  CHECK((sp.evolve(psi0, 3.1) - u * psi0).cwiseAbs().maxCoeff() < 1e-10);
  const auto p = sp.probabilities_from(4, 3.1);
  CHECK(std::abs(p.sum() - 1.0) < 1e-12);
  CHECK(std::abs(p(7) - std::norm(u(7, 4))) < 1e-12);
}

TEST_CASE("hbar rescales time") {
  const auto m1 = testing::random_model(2, 8, false, 1.0);
  const BoseHubbardModel m2(m1.hopping(), m1.interaction(), 2.0);
  const FockBasis basis(2, 4);
  const FockState n_i{3, 1};
  const auto p1 = transition_probabilities_exact(m1, basis, n_i, 0.8);
  const auto p2 = transition_probabilities_exact(m2, basis, n_i, 1.6);
  CHECK((p1 - p2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero time is the identity") {
  const auto model = build_model({});
  const FockBasis basis(4, 8);
  const FockState n_i{2, 2, 2, 2};
  const auto p = transition_probabilities_exact(model, basis, n_i, 0.0);
  CHECK(p(basis.index(n_i)) == 1.0);
  CHECK(p.sum() == 1.0);
  CHECK(transition_probability_exact(model, n_i, n_i, 0.0) == 1.0);
}
