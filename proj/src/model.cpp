#include "fockscatter/model.hpp"

#include <cmath>
#include <numbers>
#include <queue>

#include "fockscatter/random.hpp"

namespace fockscatter {

double Stream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Interaction::Interaction(Eigen::VectorXd onsite) : onsite_(std::move(onsite)) {}

Interaction::Interaction(Eigen::VectorXd onsite, std::map<InteractionIndex, double> general)
    : onsite_(std::move(onsite)), general_(std::move(general)) {
  for (const auto& [idx, value] : general_) {
    if (idx[0] == idx[1] && idx[1] == idx[2] && idx[2] == idx[3])
      throw ModelError("on-site coefficient U_llll must be given through the on-site vector");
  }
}

double Interaction::operator()(int k, int l, int m, int n) const {
  if (k == l && l == m && m == n) return onsite_.size() > k ? onsite_(k) : 0.0;
  auto it = general_.find({k, l, m, n});
  return it == general_.end() ? 0.0 : it->second;
}

void Interaction::validate(int sites) const {
  if (onsite_.size() != sites)
    throw ModelError("on-site interaction vector has " + std::to_string(onsite_.size()) +
                     " entries for " + std::to_string(sites) + " sites");
  if (!onsite_.allFinite()) throw ModelError("non-finite on-site interaction");
  for (const auto& [idx, value] : general_) {
    for (int i : idx)
      if (i < 0 || i >= sites) throw ModelError("interaction index out of range");
    if (!std::isfinite(value)) throw ModelError("non-finite interaction coefficient");
    const auto [k, l, m, n] = idx;
    const double partners[] = {(*this)(m, n, k, l), (*this)(l, k, m, n), (*this)(k, l, n, m)};
    for (double p : partners) {
      if (std::abs(p - value) > 1e-12 * std::max(1.0, std::abs(value)))
        throw ModelError("interaction tensor violates U_klmn = U_mnkl = U_lkmn = U_klnm at (" +
                         std::to_string(k) + "," + std::to_string(l) + "," + std::to_string(m) +
                         "," + std::to_string(n) + ")");
    }
  }
}

BoseHubbardModel::BoseHubbardModel(Eigen::MatrixXcd hopping, Interaction interaction, double hbar)
    : hopping_(std::move(hopping)), interaction_(std::move(interaction)), hbar_(hbar) {
  if (hopping_.rows() < 1 || hopping_.rows() != hopping_.cols())
    throw ModelError("hopping matrix must be square with at least one site");
  if (!hopping_.allFinite()) throw ModelError("non-finite hopping matrix");
  if (!(hbar_ > 0.0) || !std::isfinite(hbar_)) throw ModelError("hbar must be positive");
  const double defect = (hopping_ - hopping_.adjoint()).cwiseAbs().maxCoeff();
  if (defect > 1e-12) throw ModelError("hopping matrix is not Hermitian (defect " + std::to_string(defect) + ")");
  const int L = sites();
  if (interaction_.onsite().size() == 0) interaction_ = Interaction(Eigen::VectorXd::Zero(L), interaction_.general());
  interaction_.validate(L);

  effective_hopping_ = hopping_;
  for (int l = 0; l < L; ++l) effective_hopping_(l, l) -= 0.5 * interaction_.onsite()(l);
  for (const auto& [idx, value] : interaction_.general()) {
    // U_{l m m l'} contributes to entry (l, l').
    if (idx[1] == idx[2]) effective_hopping_(idx[0], idx[3]) -= 0.5 * value;
  }
}

BoseHubbardModel BoseHubbardModel::with_onsite_energies(const Eigen::VectorXd& energies) const {
  if (energies.size() != sites()) throw ModelError("on-site energy vector has wrong length");
  Eigen::MatrixXcd h = hopping_;
  for (int l = 0; l < sites(); ++l) h(l, l) = energies(l);
  return BoseHubbardModel(std::move(h), interaction_, hbar_);
}

BoseHubbardModel BoseHubbardModel::gauge_transformed(const Eigen::VectorXd& chi) const {
  if (chi.size() != sites()) throw ModelError("gauge phase vector has wrong length");
  const int L = sites();
  Eigen::MatrixXcd h(L, L);
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) h(a, b) = std::polar(1.0, chi(a) - chi(b)) * hopping_(a, b);
  // Real coefficients stay real only when the phase picked up is 0 or pi.
  std::map<InteractionIndex, double> general;
  for (const auto& [idx, value] : interaction_.general()) {
    const cplx phase = std::polar(1.0, chi(idx[0]) + chi(idx[1]) - chi(idx[2]) - chi(idx[3]));
    if (std::abs(phase.imag()) > 1e-10)
      throw ModelError("gauge transformation makes an interaction coefficient complex");
    general[idx] = value * phase.real();
  }
  return BoseHubbardModel(std::move(h), Interaction(interaction_.onsite(), std::move(general)), hbar_);
}

bool BoseHubbardModel::is_real(double tol) const { return hopping_.imag().cwiseAbs().maxCoeff() <= tol; }

std::string to_string(Geometry g) { return g == Geometry::chain ? "chain" : "ring"; }

Geometry geometry_from_string(const std::string& s) {
  if (s == "chain") return Geometry::chain;
  if (s == "ring") return Geometry::ring;
  throw ModelError("unknown geometry '" + s + "' (expected chain or ring)");
}

BoseHubbardModel build_model(const ModelConfig& config) {
  if (config.sites < 1) throw ModelError("site count must be at least 1");
  if (!(config.hopping >= 0.0)) throw ModelError("hopping amplitude J must be non-negative");
  if (!config.onsite.empty() && static_cast<int>(config.onsite.size()) != config.sites)
    throw ModelError("on-site energy list must have one entry per site");
  const int L = config.sites;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(L, L);
  const cplx bond = -config.hopping * std::polar(1.0, config.flux_per_bond);
  auto add_bond = [&](int a, int b) {
    h(a, b) += bond;
    h(b, a) += std::conj(bond);
  };
  for (int l = 0; l + 1 < L; ++l) add_bond(l, l + 1);
  if (config.geometry == Geometry::ring && L > 1) add_bond(L - 1, 0);
  for (int l = 0; l < L; ++l) h(l, l) = config.onsite.empty() ? 0.0 : config.onsite[l];
  return BoseHubbardModel(std::move(h), Interaction(Eigen::VectorXd::Constant(L, config.interaction)), config.hbar);
}

BoseHubbardModel sample_disorder(const BoseHubbardModel& model, const DisorderSpec& spec, int index) {
  if (spec.realization_count < 1) throw ModelError("realization_count must be at least 1");
  if (index < 0 || index >= spec.realization_count)
    throw ModelError("disorder realization index " + std::to_string(index) + " out of range [0, " +
                     std::to_string(spec.realization_count) + ")");
  if (!(spec.width >= 0.0)) throw ModelError("disorder width must be non-negative");
  Stream rng(substream_seed(spec.master_seed, stream_tag::disorder, static_cast<std::uint64_t>(index)));
  Eigen::VectorXd eps(model.sites());
  for (int l = 0; l < model.sites(); ++l) eps(l) = spec.width * (rng.uniform() - 0.5);
  return model.with_onsite_energies(eps);
}

GaugeReport analyze_time_reversal(const BoseHubbardModel& model, double tol) {
  const int L = model.sites();
  const Eigen::MatrixXcd& h = model.hopping();
  GaugeReport report;
  report.phases = Eigen::VectorXd::Zero(L);
  std::vector<bool> seen(L, false);

  // Spanning forest: along each tree bond choose chi so the gauged bond is -|h|.
  for (int root = 0; root < L; ++root) {
    if (seen[root]) continue;
    seen[root] = true;
    std::queue<int> todo;
    todo.push(root);
    while (!todo.empty()) {
      const int a = todo.front();
      todo.pop();
      for (int b = 0; b < L; ++b) {
        if (b == a || seen[b] || std::abs(h(a, b)) == 0.0) continue;
        report.phases(b) = report.phases(a) + std::arg(-h(a, b));
        seen[b] = true;
        todo.push(b);
      }
    }
  }

  double worst = 0.0;
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) {
      const cplx g = std::polar(1.0, report.phases(a) - report.phases(b)) * h(a, b);
      worst = std::max(worst, std::abs(g.imag()));
    }
  for (const auto& [idx, value] : model.interaction().general()) {
    const double ph = report.phases(idx[0]) + report.phases(idx[1]) - report.phases(idx[2]) - report.phases(idx[3]);
    worst = std::max(worst, std::abs(value * std::sin(ph)));
  }
  report.residual_imag = worst;
  report.is_trs = worst < tol;
  return report;
}

}  // namespace fockscatter
