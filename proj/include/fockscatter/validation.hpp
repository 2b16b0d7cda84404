#pragma once

#include <string>
#include <vector>

#include "fockscatter/config.hpp"

namespace fockscatter {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
  bool skipped = false;
  std::string note;
};

/// Invariant checks on the configured model: Hermiticity, unitarity and
/// conservation laws of the exact evolution, mean-field drift, gradient and
/// symplectic structure, time reversal, classical normalization and the
/// single-site prefactor. Skipped checks count as passed.
std::vector<CheckResult> run_validation_suite(const RunConfig& config);

}  // namespace fockscatter
