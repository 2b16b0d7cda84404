#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fockscatter/cbs.hpp"
#include "fockscatter/fock.hpp"
#include "fockscatter/model.hpp"
#include "fockscatter/semiclassics.hpp"
#include "fockscatter/trajectory.hpp"

namespace fockscatter {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DisorderSection {
  double width = 1.0;
  DisorderDistribution distribution = DisorderDistribution::uniform;
  int realizations = 1000;
};

struct RunSection {
  std::uint64_t seed = 2024;
  int threads = 1;  // never changes results
};

struct TransitionSection {
  FockState initial{3, 2, 2, 1};
  std::vector<FockState> final;  // empty: every state of the basis
  std::vector<double> times{1.0};
  std::optional<int> realization;  // disorder realization applied to the model, none = clean model
};

struct ClassicalSection {
  std::int64_t samples = 20000;
  std::int64_t chunk_size = 256;
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
};

struct ShootingSection {
  double residual_tol = 1e-9;
  int max_newton_iter = 50;
  int multistart_count = 64;
  double damping = 0.5;
  double dedup_distance = 1e-6;
  double caustic_tolerance = 1e-7;
};

struct IntegratorSection {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.0;  // 0 = unlimited
  std::int64_t max_steps = 50000000;
  double sample_stride = 0.0;  // 0 = every accepted step
};

struct TrajectorySection {
  TrajectoryKind kind = TrajectoryKind::fock;
  double t = 1.0;
  double b = 0.70710678118654752;
  std::vector<double> q_initial;
  std::vector<double> q_final;
};

struct CbsSection {
  FockState initial{3, 2, 2, 1};
  std::vector<double> times{0.01, 15.0};
  std::int64_t mc_samples = 400;
  std::optional<double> flux;
  int bootstrap = 200;
  int transfer_states = 10;
  std::int64_t dimension_cap = kDefaultDimensionCap;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
};

struct ValidateSection {
  double horizon = 100.0;  // mean-field integration time for drift checks
  std::int64_t samples = 2000;
};

/// Fully resolved configuration. Every key has a default; files may override any subset.
struct RunConfig {
  ModelConfig model{};
  DisorderSection disorder;
  RunSection run;
  TransitionSection transition;
  ClassicalSection classical;
  ShootingSection shooting;
  IntegratorSection integrator;
  TrajectorySection trajectory;
  CbsSection cbs;
  ValidateSection validate;
};

/// INI text: [section] headers, key = value lines, '#' or ';' comments.
/// Unknown sections or keys, duplicates and malformed values throw ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical INI text listing every key; parse_config(to_ini(c)) reproduces c.
std::string to_ini(const RunConfig& config);

struct ConfigKey {
  std::string section;
  std::string key;
  std::string type;
  std::string description;
};

/// Every accepted key, in output order.
const std::vector<ConfigKey>& config_schema();

// Builders from a resolved config.
BoseHubbardModel model_from_config(const RunConfig& config);  // applies transition.realization
ShootingConfig shooting_from_config(const RunConfig& config);
ClassicalSamplingOptions sampling_from_config(const RunConfig& config);
CbsExperimentConfig cbs_from_config(const RunConfig& config);

}  // namespace fockscatter
