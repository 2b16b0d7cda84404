#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fockscatter/fock.hpp"
#include "fockscatter/model.hpp"
#include "fockscatter/semiclassics.hpp"

namespace fockscatter {

struct CbsExperimentConfig {
  ModelConfig model{};  // template; on-site energies are replaced per realization
  DisorderSpec disorder{1.0, DisorderDistribution::uniform, 0, 1000};
  FockState n_i{3, 2, 2, 1};
  std::vector<double> times{15.0};
  std::int64_t mc_samples = 400;  // classical samples per realization
  /// Flux per ring bond replacing model.flux_per_bond when set.
  std::optional<double> trs_breaking;
  /// Drives disorder, Monte Carlo and bootstrap streams; disorder.master_seed is ignored.
  std::uint64_t master_seed = 2024;
  int threads = 1;
  int bootstrap_resamples = 200;
  int transfer_states = 10;
  std::int64_t dimension_cap = kDefaultDimensionCap;
  ClassicalSamplingOptions sampling{256, 1, 0.01, 0.0, IntegratorConfig{1e-8, 1e-10}};

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

/// Model used for realization `index` (flux override applied, disorder drawn).
BoseHubbardModel cbs_realization_model(const CbsExperimentConfig& config, int index);

enum class CbsClass { return_state, transfer };

std::string to_string(CbsClass c);

struct CbsClassResult {
  double exact = 0.0;      // disorder-averaged exact probability
  double classical = 0.0;  // disorder-averaged classical probability
  double ratio = 0.0;
  double ci_low = 0.0;     // 95% percentile bootstrap; NaN below 10 realizations
  double ci_high = 0.0;
};

struct CbsTimeResult {
  double t = 0.0;
  CbsClassResult return_state;
  /// Mean over the chosen transfer states of the per-state quantities.
  CbsClassResult transfer;
  /// Most probable n_f != n_i under the averaged classical distribution,
  /// restricted to states with nonzero classical weight.
  std::vector<FockState> transfer_set;
  /// Realization-to-realization standard deviation of exact P(n_i -> n_i).
  double return_exact_spread = 0.0;
  /// Averaged fraction of classical samples binned outside the basis.
  double out_of_basis = 0.0;
};

struct CbsResult {
  std::vector<CbsTimeResult> times;
  int realizations = 0;
  bool trs = false;  // from analyze_time_reversal on the template
  double residual_imag = 0.0;
  std::int64_t dimension = 0;
  std::int64_t classical_samples = 0;  // successful samples, all realizations
  std::int64_t discarded = 0;
  std::string note;
};

/// Paired per-realization exact and classical probabilities, averaged with
/// order-independent summation, ratios with bootstrap intervals.
CbsResult run_cbs_experiment(const CbsExperimentConfig& config);

struct OnsetRow {
  double t = 0.0;
  double ratio = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct OnsetScan {
  std::vector<OnsetRow> rows;
  /// First scanned time whose return ratio exceeds 1.5.
  std::optional<double> crossing_time;
  bool rising = false;  // ratio at the largest time exceeds the smallest by > 0.5
  CbsResult result;
};

OnsetScan onset_scan(const CbsExperimentConfig& config);

/// One row per (time, class): t, class, exact, classical, ratio, ci_low, ci_high, realizations.
void write_cbs_results(std::ostream& out, const CbsResult& result);

}  // namespace fockscatter
