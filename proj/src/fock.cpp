#include "fockscatter/fock.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace fockscatter {

std::string format_state(std::span<const int> n) {
  std::ostringstream out;
  out << '(';
  for (std::size_t l = 0; l < n.size(); ++l) out << (l ? "," : "") << n[l];
  out << ')';
  return out.str();
}

int total_particles(std::span<const int> n) { return std::accumulate(n.begin(), n.end(), 0); }

std::int64_t FockBasis::dimension(int sites, int particles) {
  if (sites < 1 || particles < 0) return 0;
  // binomial(N + L - 1, L - 1), saturating
  const int k = sites - 1;
  long double result = 1.0L;
  for (int j = 1; j <= k; ++j) result = result * static_cast<long double>(particles + j) / j;
  if (result > 9.0e18L) return INT64_MAX;
  return static_cast<std::int64_t>(std::llround(result));
}

FockBasis::FockBasis(int sites, int particles, std::int64_t dimension_cap) : sites_(sites), particles_(particles) {
  if (sites < 1) throw BasisError("Fock basis needs at least one site");
  if (particles < 0) throw BasisError("particle number must be non-negative");
  const std::int64_t dim = dimension(sites, particles);
  if (dim > dimension_cap)
    throw BasisError("Fock basis dimension " + std::to_string(dim) + " for L=" + std::to_string(sites) +
                     ", N=" + std::to_string(particles) + " exceeds the cap " + std::to_string(dimension_cap));

  compositions_.assign(sites + 1, std::vector<std::int64_t>(particles + 1, 0));
  for (int m = 0; m <= particles; ++m) compositions_[1][m] = 1;
  for (int s = 2; s <= sites; ++s) {
    std::int64_t running = 0;
    for (int m = 0; m <= particles; ++m) {
      running += compositions_[s - 1][m];
      compositions_[s][m] = running;
    }
  }

  states_.reserve(static_cast<std::size_t>(dim));
  FockState current(sites, 0);
  auto fill = [&](auto&& self, int site, int remaining) -> void {
    if (site == sites - 1) {
      current[site] = remaining;
      states_.push_back(current);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      current[site] = v;
      self(self, site + 1, remaining - v);
    }
  };
  fill(fill, 0, particles);
}

std::optional<std::int64_t> FockBasis::find(std::span<const int> n) const {
  if (static_cast<int>(n.size()) != sites_) return std::nullopt;
  int remaining = particles_;
  std::int64_t rank = 0;
  for (int l = 0; l < sites_; ++l) {
    if (n[l] < 0 || n[l] > remaining) return std::nullopt;
    if (l == sites_ - 1) {
      if (n[l] != remaining) return std::nullopt;
      break;
    }
    // states with a larger occupation on site l come first
    const int tail = sites_ - l - 1;
    for (int v = n[l] + 1; v <= remaining; ++v) rank += compositions_[tail][remaining - v];
    remaining -= n[l];
  }
  return rank;
}

std::int64_t FockBasis::index(std::span<const int> n) const {
  auto k = find(n);
  if (!k)
    throw BasisError("state " + format_state(n) + " is not in the basis with L=" + std::to_string(sites_) +
                     ", N=" + std::to_string(particles_));
  return *k;
}

FockBasis enumerate_basis(int sites, int particles, std::int64_t dimension_cap) {
  return FockBasis(sites, particles, dimension_cap);
}

SparseHamiltonian build_hamiltonian(const BoseHubbardModel& model, const FockBasis& basis) {
  if (model.sites() != basis.sites())
    throw BasisError("model has " + std::to_string(model.sites()) + " sites but basis has " +
                     std::to_string(basis.sites()));
  const int L = model.sites();
  const Eigen::MatrixXcd& h = model.hopping();
  const Eigen::VectorXd& onsite = model.interaction().onsite();
  const auto& general = model.interaction().general();

  std::vector<Eigen::Triplet<cplx>> entries;
  FockState work(L);
  for (std::int64_t col = 0; col < basis.size(); ++col) {
    const FockState& n = basis.state(col);
    cplx diag = 0.0;
    for (int l = 0; l < L; ++l) diag += h(l, l) * static_cast<double>(n[l]) + 0.5 * onsite(l) * n[l] * (n[l] - 1.0);
    entries.emplace_back(col, col, diag);

    for (int to = 0; to < L; ++to)
      for (int from = 0; from < L; ++from) {
        if (to == from || n[from] == 0 || h(to, from) == cplx(0.0)) continue;
        work = n;
        const double amp = std::sqrt(static_cast<double>(n[from]) * (n[to] + 1));
        --work[from];
        ++work[to];
        entries.emplace_back(basis.index(work), col, h(to, from) * amp);
      }

    for (const auto& [idx, value] : general) {
      const auto [k, l, m, p] = idx;
      work = n;
      double amp = 1.0;
      for (int site : {p, m}) {
        if (work[site] == 0) {
          amp = 0.0;
          break;
        }
        amp *= std::sqrt(static_cast<double>(work[site]));
        --work[site];
      }
      if (amp == 0.0) continue;
      for (int site : {l, k}) {
        amp *= std::sqrt(static_cast<double>(work[site] + 1));
        ++work[site];
      }
      entries.emplace_back(basis.index(work), col, 0.5 * value * amp);
    }
  }
  SparseHamiltonian H(basis.size(), basis.size());
  H.setFromTriplets(entries.begin(), entries.end());
  H.makeCompressed();
  return H;
}

QuantumState fock_state_vector(const FockBasis& basis, std::span<const int> n) {
  QuantumState psi = QuantumState::Zero(basis.size());
  psi(basis.index(n)) = 1.0;
  return psi;
}

Eigen::MatrixXcd dense_propagator(const SparseHamiltonian& hamiltonian, double hbar, double t) {
  const Eigen::MatrixXcd generator = Eigen::MatrixXcd(hamiltonian) * cplx(0.0, -t / hbar);
  return generator.exp();
}

namespace {

QuantumState krylov_evolve(const QuantumState& state, const SparseHamiltonian& H, double hbar, double t,
                           const EvolveOptions& options) {
  const std::int64_t dim = H.rows();
  const int m_max = static_cast<int>(std::min<std::int64_t>(options.krylov_dimension, dim));
  double norm_estimate = 0.0;  // max column 1-norm
  for (int c = 0; c < H.outerSize(); ++c) {
    double s = 0.0;
    for (SparseHamiltonian::InnerIterator it(H, c); it; ++it) s += std::abs(it.value());
    norm_estimate = std::max(norm_estimate, s);
  }
  norm_estimate = std::max(norm_estimate, 1e-300);

  QuantumState v = state;
  double done = 0.0;
  double tau = std::min(t, 10.0 * hbar / norm_estimate);
  Eigen::MatrixXcd V(dim, m_max + 1);
  int guard = 0;

  while (done < t) {
    if (++guard > 10000000) throw EvolutionError("Krylov evolution exceeded the step budget");
    const double beta = v.norm();
    if (!std::isfinite(beta)) throw EvolutionError("non-finite state during Krylov evolution at t=" + std::to_string(done));
    if (beta == 0.0) return v;

    Eigen::VectorXd alpha(m_max), offdiag(m_max);
    V.col(0) = v / beta;
    int m = m_max;
    bool happy = false;
    for (int j = 0; j < m_max; ++j) {
      QuantumState w = H * V.col(j);
      alpha(j) = V.col(j).dot(w).real();
      w -= alpha(j) * V.col(j);
      if (j > 0) w -= offdiag(j - 1) * V.col(j - 1);
      // full reorthogonalization keeps the small basis unitary
      for (int r = 0; r <= j; ++r) w -= V.col(r).dot(w) * V.col(r);
      offdiag(j) = w.norm();
      if (offdiag(j) < 1e-13 * norm_estimate) {
        m = j + 1;
        happy = true;
        break;
      }
      V.col(j + 1) = w / offdiag(j);
    }

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      T(j, j) = alpha(j);
      if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = offdiag(j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const Eigen::MatrixXd& U = eig.eigenvectors();

    while (true) {
      const double step = std::min(tau, t - done);
      Eigen::VectorXcd phases(m);
      for (int k = 0; k < m; ++k) phases(k) = std::polar(1.0, -lambda(k) * step / hbar) * U(0, k);
      const Eigen::VectorXcd y = U.cast<cplx>() * phases;
      const double err = happy ? 0.0 : beta * offdiag(m - 1) * std::abs(y(m - 1));
      const double allowed = options.tol * step / t;
      if (err <= allowed || step <= 1e-14 * t) {
        if (err > allowed)
          throw EvolutionError("Krylov breakdown: error estimate " + std::to_string(err) +
                               " above tolerance with step " + std::to_string(step) + " at t=" + std::to_string(done));
        v = beta * (V.leftCols(m) * y);
        done += step;
        if (!happy) {
          const double grow = err > 0.0 ? std::pow(allowed / err, 1.0 / m) : 2.0;
          tau = step * std::clamp(0.9 * grow, 1.0, 2.0);
        } else {
          tau = t - done;
        }
        break;
      }
      tau = step * std::clamp(0.9 * std::pow(allowed / err, 1.0 / m), 0.1, 0.5);
    }
  }
  return v;
}

}  // namespace

QuantumState evolve(const QuantumState& state, const SparseHamiltonian& hamiltonian, double hbar, double t,
                    const EvolveOptions& options) {
  if (state.size() != hamiltonian.rows()) throw EvolutionError("state and Hamiltonian dimensions differ");
  if (!state.allFinite()) throw EvolutionError("non-finite entries in initial state");
  if (!(t >= 0.0) || !std::isfinite(t)) throw EvolutionError("evolution time must be finite and non-negative");
  if (!(options.tol > 0.0)) throw EvolutionError("tolerance must be positive");
  if (t == 0.0) return state;
  if (hamiltonian.rows() <= options.dense_threshold) return dense_propagator(hamiltonian, hbar, t) * state;
  return krylov_evolve(state, hamiltonian, hbar, t, options);
}

QuantumState evolve(const QuantumState& state, const BoseHubbardModel& model, const FockBasis& basis, double t,
                    const EvolveOptions& options) {
  return evolve(state, build_hamiltonian(model, basis), model.hbar(), t, options);
}

namespace {
FockBasis basis_for(const BoseHubbardModel& model, std::span<const int> n_i) {
  if (static_cast<int>(n_i.size()) != model.sites())
    throw BasisError("initial state " + format_state(n_i) + " does not match the model's site count");
  return FockBasis(model.sites(), total_particles(n_i));
}
}  // namespace

Eigen::VectorXd transition_probabilities_exact(const BoseHubbardModel& model, const FockBasis& basis,
                                               std::span<const int> n_i, double t, const EvolveOptions& options) {
  const QuantumState out = evolve(fock_state_vector(basis, n_i), model, basis, t, options);
  return out.cwiseAbs2();
}

double transition_probability_exact(const BoseHubbardModel& model, std::span<const int> n_i, std::span<const int> n_f,
                                    double t, const EvolveOptions& options) {
  const FockBasis basis = basis_for(model, n_i);
  const std::int64_t target = basis.index(n_f);
  const QuantumState out = evolve(fock_state_vector(basis, n_i), model, basis, t, options);
  return std::norm(out(target));
}

SpectralPropagator::SpectralPropagator(const SparseHamiltonian& hamiltonian, double hbar) : hbar_(hbar) {
  const Eigen::MatrixXcd dense(hamiltonian);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(dense);
  if (eig.info() != Eigen::Success) throw EvolutionError("Hamiltonian diagonalization failed");
  energies_ = eig.eigenvalues();
  vectors_ = eig.eigenvectors();
}

QuantumState SpectralPropagator::evolve(const QuantumState& state, double t) const {
  Eigen::VectorXcd coeff = vectors_.adjoint() * state;
  for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff(k) *= std::polar(1.0, -energies_(k) * t / hbar_);
  return vectors_ * coeff;
}

Eigen::VectorXd SpectralPropagator::probabilities_from(std::int64_t column, double t) const {
  Eigen::VectorXcd coeff = vectors_.row(column).adjoint();
  for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff(k) *= std::polar(1.0, -energies_(k) * t / hbar_);
  return (vectors_ * coeff).cwiseAbs2();
}

double energy_expectation(const SparseHamiltonian& hamiltonian, const QuantumState& psi) {
  return psi.dot(hamiltonian * psi).real();
}

}  // namespace fockscatter
