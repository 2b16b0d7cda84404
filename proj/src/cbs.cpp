#include "fockscatter/cbs.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fockscatter/parallel.hpp"
#include "fockscatter/random.hpp"

namespace fockscatter {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMinRealizationsForCi = 10;

// Sum in ascending order so the mean does not depend on realization order.
double ordered_mean(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return kNaN;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct Realization {
  Eigen::MatrixXd exact;      // basis x times
  Eigen::MatrixXd classical;  // basis x times
  std::vector<double> out_of_basis;
  std::int64_t samples = 0;
  std::int64_t discarded = 0;
};

}  // namespace

void CbsExperimentConfig::validate() const {
  if (model.sites < 2) throw std::invalid_argument("cbs: need at least two sites");
  if (static_cast<int>(n_i.size()) != model.sites) throw std::invalid_argument("cbs: n_i length differs from sites");
  for (int n : n_i)
    if (n < 0) throw std::invalid_argument("cbs: negative occupation in n_i");
  if (times.empty()) throw std::invalid_argument("cbs: no times given");
  for (std::size_t k = 0; k < times.size(); ++k)
    if (!(times[k] >= 0.0) || (k > 0 && times[k] <= times[k - 1]))
      throw std::invalid_argument("cbs: times must be non-negative and strictly ascending");
  if (mc_samples < 1) throw std::invalid_argument("cbs: mc_samples must be positive");
  if (disorder.realization_count < 1) throw std::invalid_argument("cbs: realization_count must be positive");
  if (!(disorder.width >= 0.0)) throw std::invalid_argument("cbs: disorder width must be non-negative");
  if (bootstrap_resamples < 200) throw std::invalid_argument("cbs: bootstrap_resamples must be at least 200");
  if (transfer_states < 1) throw std::invalid_argument("cbs: transfer_states must be positive");
  if (threads < 1) throw std::invalid_argument("cbs: threads must be positive");
  if (trs_breaking && model.geometry != Geometry::ring) throw std::invalid_argument("cbs: flux requires a ring");
  const std::int64_t dim = FockBasis::dimension(model.sites, total_particles(n_i));
  if (dim > dimension_cap) {
    std::ostringstream msg;
    msg << "cbs: Hilbert dimension " << dim << " exceeds cap " << dimension_cap;
    throw BasisError(msg.str());
  }
}

BoseHubbardModel cbs_realization_model(const CbsExperimentConfig& config, int index) {
  ModelConfig mc = config.model;
  if (config.trs_breaking) mc.flux_per_bond = *config.trs_breaking;
  DisorderSpec spec = config.disorder;
  spec.master_seed = config.master_seed;
  return sample_disorder(build_model(mc), spec, index);
}

std::string to_string(CbsClass c) { return c == CbsClass::return_state ? "return" : "transfer"; }

CbsResult run_cbs_experiment(const CbsExperimentConfig& config) {
  config.validate();
  ModelConfig mc = config.model;
  if (config.trs_breaking) mc.flux_per_bond = *config.trs_breaking;
  const BoseHubbardModel tmpl = build_model(mc);
  const GaugeReport gauge = analyze_time_reversal(tmpl);

  const FockBasis basis(config.model.sites, total_particles(config.n_i), config.dimension_cap);
  const std::int64_t home = basis.index(config.n_i);
  const int R = config.disorder.realization_count;
  const auto T = static_cast<Eigen::Index>(config.times.size());
  const Eigen::Index D = basis.size();

  ClassicalSamplingOptions sampling = config.sampling;
  sampling.threads = 1;

  std::vector<Realization> reals(static_cast<std::size_t>(R));
  parallel_for(R, config.threads, [&](std::int64_t r) {
    const BoseHubbardModel model = cbs_realization_model(config, static_cast<int>(r));
    Realization& out = reals[static_cast<std::size_t>(r)];
    out.exact.resize(D, T);
    const SpectralPropagator prop(build_hamiltonian(model, basis), model.hbar());
    for (Eigen::Index k = 0; k < T; ++k) {
      const double t = config.times[static_cast<std::size_t>(k)];
      if (t == 0.0) {
        out.exact.col(k).setZero();
        out.exact(home, k) = 1.0;
      } else {
        out.exact.col(k) = prop.probabilities_from(home, t);
      }
    }
    const ClassicalDistribution dist =
        classical_distribution(model, config.n_i, config.times, config.mc_samples,
                               substream_seed(config.master_seed, stream_tag::monte_carlo, static_cast<std::uint64_t>(r)),
                               sampling);
    out.classical.resize(D, T);
    for (Eigen::Index k = 0; k < T; ++k) out.classical.col(k) = dist.probabilities[static_cast<std::size_t>(k)];
    out.out_of_basis = dist.out_of_basis;
    out.samples = dist.samples;
    out.discarded = dist.discarded;
  });

  CbsResult result;
  result.realizations = R;
  result.trs = gauge.is_trs;
  result.residual_imag = gauge.residual_imag;
  result.dimension = D;
  for (const Realization& re : reals) {
    result.classical_samples += re.samples;
    result.discarded += re.discarded;
  }
  const bool with_ci = R >= kMinRealizationsForCi;
  if (!with_ci) result.note = "fewer than 10 realizations: confidence intervals not computed";

  // resampled realization indices, shared by all times
  std::vector<std::vector<int>> draws;
  if (with_ci) {
    Stream rng(substream_seed(config.master_seed, stream_tag::bootstrap, 0));
    draws.assign(static_cast<std::size_t>(config.bootstrap_resamples), std::vector<int>(static_cast<std::size_t>(R)));
    for (auto& d : draws)
      for (int& idx : d) idx = static_cast<int>(rng.uniform() * R);
  }

  std::vector<double> buf(static_cast<std::size_t>(R));
  for (Eigen::Index k = 0; k < T; ++k) {
    CbsTimeResult tr;
    tr.t = config.times[static_cast<std::size_t>(k)];
    Eigen::VectorXd mean_exact(D), mean_classical(D);
    for (Eigen::Index j = 0; j < D; ++j) {
      for (int r = 0; r < R; ++r) buf[static_cast<std::size_t>(r)] = reals[static_cast<std::size_t>(r)].exact(j, k);
      mean_exact(j) = ordered_mean(buf);
      for (int r = 0; r < R; ++r) buf[static_cast<std::size_t>(r)] = reals[static_cast<std::size_t>(r)].classical(j, k);
      mean_classical(j) = ordered_mean(buf);
    }
    for (int r = 0; r < R; ++r) buf[static_cast<std::size_t>(r)] = reals[static_cast<std::size_t>(r)].out_of_basis[static_cast<std::size_t>(k)];
    tr.out_of_basis = ordered_mean(buf);

    double var = 0.0;
    for (const Realization& re : reals) var += std::pow(re.exact(home, k) - mean_exact(home), 2);
    tr.return_exact_spread = R > 1 ? std::sqrt(var / (R - 1)) : 0.0;

    std::vector<Eigen::Index> order;
    for (Eigen::Index j = 0; j < D; ++j)
      if (j != home && mean_classical(j) > 0.0) order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return mean_classical(a) > mean_classical(b); });
    if (static_cast<int>(order.size()) > config.transfer_states) order.resize(static_cast<std::size_t>(config.transfer_states));
    for (Eigen::Index j : order) tr.transfer_set.push_back(basis.state(j));

    auto transfer_of = [&](const Eigen::VectorXd& e, const Eigen::VectorXd& c, CbsClassResult& out) {
      if (order.empty()) {
        out.exact = out.classical = out.ratio = kNaN;
        return;
      }
      double se = 0.0, sc = 0.0, sr = 0.0;
      for (Eigen::Index j : order) {
        se += e(j);
        sc += c(j);
        sr += e(j) / c(j);
      }
      const double n = static_cast<double>(order.size());
      out.exact = se / n;
      out.classical = sc / n;
      out.ratio = sr / n;
    };

    tr.return_state.exact = mean_exact(home);
    tr.return_state.classical = mean_classical(home);
    tr.return_state.ratio = mean_classical(home) > 0.0 ? mean_exact(home) / mean_classical(home) : kNaN;
    transfer_of(mean_exact, mean_classical, tr.transfer);

    tr.return_state.ci_low = tr.return_state.ci_high = kNaN;
    tr.transfer.ci_low = tr.transfer.ci_high = kNaN;
    if (with_ci) {
      std::vector<double> ret, tra;
      std::vector<Eigen::Index> rows{home};
      rows.insert(rows.end(), order.begin(), order.end());
      Eigen::VectorXd e = Eigen::VectorXd::Zero(D), c = Eigen::VectorXd::Zero(D);
      for (const auto& d : draws) {
        for (Eigen::Index j : rows) e(j) = c(j) = 0.0;
        for (int idx : d) {
          const Realization& re = reals[static_cast<std::size_t>(idx)];
          for (Eigen::Index j : rows) {
            e(j) += re.exact(j, k);
            c(j) += re.classical(j, k);
          }
        }
        if (c(home) > 0.0) ret.push_back(e(home) / c(home));
        bool finite = !order.empty();
        for (Eigen::Index j : order) finite = finite && c(j) > 0.0;
        if (finite) {
          CbsClassResult b;
          transfer_of(e, c, b);
          tra.push_back(b.ratio);
        }
      }
      std::sort(ret.begin(), ret.end());
      std::sort(tra.begin(), tra.end());
      tr.return_state.ci_low = quantile(ret, 0.025);
      tr.return_state.ci_high = quantile(ret, 0.975);
      tr.transfer.ci_low = quantile(tra, 0.025);
      tr.transfer.ci_high = quantile(tra, 0.975);
    }
    result.times.push_back(std::move(tr));
  }
  return result;
}

OnsetScan onset_scan(const CbsExperimentConfig& config) {
  const double j = config.model.hopping;
  if (config.times.empty() || !(j > 0.0) || !(config.times.front() < 1.0 / j))
    throw std::invalid_argument("onset scan: times must include a value below 1/J");
  OnsetScan scan;
  scan.result = run_cbs_experiment(config);
  for (const CbsTimeResult& tr : scan.result.times) {
    scan.rows.push_back({tr.t, tr.return_state.ratio, tr.return_state.ci_low, tr.return_state.ci_high});
    if (!scan.crossing_time && tr.return_state.ratio > 1.5) scan.crossing_time = tr.t;
  }
  scan.rising = scan.rows.back().ratio - scan.rows.front().ratio > 0.5;
  return scan;
}

void write_cbs_results(std::ostream& out, const CbsResult& result) {
  out << "# t in units of hbar/J; probabilities and ratios are dimensionless\n";
  out << "# t\tclass\texact\tclassical\tratio\tci_low\tci_high\trealizations\n";
  out << std::setprecision(17);
  for (const CbsTimeResult& tr : result.times) {
    for (CbsClass c : {CbsClass::return_state, CbsClass::transfer}) {
      const CbsClassResult& r = c == CbsClass::return_state ? tr.return_state : tr.transfer;
      out << tr.t << '\t' << to_string(c) << '\t' << r.exact << '\t' << r.classical << '\t' << r.ratio << '\t'
          << r.ci_low << '\t' << r.ci_high << '\t' << result.realizations << '\n';
    }
  }
}

}  // namespace fockscatter
