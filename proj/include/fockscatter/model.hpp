#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fockscatter {

using cplx = std::complex<double>;

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Index quadruple (k, l, m, n) of an interaction coefficient U_klmn,
/// multiplying a^dag_k a^dag_l a_m a_n.
using InteractionIndex = std::array<int, 4>;

/// Real two-body interaction tensor. On-site terms U_llll live in a dense
/// vector; every other coefficient is kept in a sparse map.
class Interaction {
 public:
  Interaction() = default;
  explicit Interaction(Eigen::VectorXd onsite);
  Interaction(Eigen::VectorXd onsite, std::map<InteractionIndex, double> general);

  const Eigen::VectorXd& onsite() const { return onsite_; }
  const std::map<InteractionIndex, double>& general() const { return general_; }
  bool onsite_only() const { return general_.empty(); }

  /// U_klmn, including the on-site fast path.
  double operator()(int k, int l, int m, int n) const;

  /// Checks U_klmn = U_mnkl = U_lkmn = U_klnm for every stored term.
  void validate(int sites) const;

 private:
  Eigen::VectorXd onsite_;
  std::map<InteractionIndex, double> general_;
};

/// Bose-Hubbard system: H = sum h_ll' a^dag_l a_l' + 1/2 sum U_klmn a^dag_k a^dag_l a_m a_n.
/// Immutable after construction.
class BoseHubbardModel {
 public:
  BoseHubbardModel(Eigen::MatrixXcd hopping, Interaction interaction, double hbar = 1.0);

  int sites() const { return static_cast<int>(hopping_.rows()); }
  const Eigen::MatrixXcd& hopping() const { return hopping_; }
  const Interaction& interaction() const { return interaction_; }
  double hbar() const { return hbar_; }

  Eigen::VectorXd onsite_energies() const { return hopping_.diagonal().real(); }

  /// Single-particle matrix that enters the classical Hamiltonian after
  /// reordering a^dag a^dag a a into (a^dag a)(a^dag a):
  /// h_ll' - 1/2 sum_m U_{l m m l'}.
  const Eigen::MatrixXcd& effective_hopping() const { return effective_hopping_; }

  BoseHubbardModel with_onsite_energies(const Eigen::VectorXd& energies) const;

  /// Model after psi_l -> exp(i chi_l) psi_l, i.e. h -> G h G^dag.
  BoseHubbardModel gauge_transformed(const Eigen::VectorXd& chi) const;

  bool is_real(double tol = 1e-12) const;

 private:
  Eigen::MatrixXcd hopping_;
  Interaction interaction_;
  double hbar_;
  Eigen::MatrixXcd effective_hopping_;
};

enum class Geometry { chain, ring };

std::string to_string(Geometry g);
Geometry geometry_from_string(const std::string& s);

/// Structured description of the shipped model family.
struct ModelConfig {
  int sites = 4;
  Geometry geometry = Geometry::ring;
  double hopping = 1.0;          // J >= 0
  double flux_per_bond = 0.0;    // h_{l,l+1} = -J exp(i phi)
  double interaction = 0.5;      // on-site U
  std::vector<double> onsite;    // empty means all zero
  double hbar = 1.0;
};

BoseHubbardModel build_model(const ModelConfig& config);

enum class DisorderDistribution { uniform };

struct DisorderSpec {
  double width = 0.0;  // W; epsilon_l uniform on [-W/2, W/2]
  DisorderDistribution distribution = DisorderDistribution::uniform;
  std::uint64_t master_seed = 0;
  int realization_count = 1;
};

/// Replaces the on-site energies with i.i.d. draws determined by
/// (spec.master_seed, index) alone.
BoseHubbardModel sample_disorder(const BoseHubbardModel& model, const DisorderSpec& spec, int index);

struct GaugeReport {
  bool is_trs = false;
  /// exp(i chi_l) h_ll' exp(-i chi_l') is real when is_trs.
  Eigen::VectorXd phases;
  /// Largest imaginary part left after gauging.
  double residual_imag = 0.0;
};

GaugeReport analyze_time_reversal(const BoseHubbardModel& model, double tol = 1e-10);

}  // namespace fockscatter
