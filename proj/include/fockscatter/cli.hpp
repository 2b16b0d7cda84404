#pragma once

#include <iosfwd>
#include <string>

#include "fockscatter/fock.hpp"
#include "fockscatter/model.hpp"

namespace fockscatter {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitValidationFailed = 2;

/// Entry point of the `fockscatter` tool; messages go to `out` and `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a byte string or of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Checksum of everything that determines the Hamiltonian matrix.
std::string model_checksum(const BoseHubbardModel& model, const FockBasis& basis);

/// build_hamiltonian with an on-disk cache in $FOCKSCATTER_CACHE when set.
/// Unreadable or mismatched cache files are rebuilt.
SparseHamiltonian cached_hamiltonian(const BoseHubbardModel& model, const FockBasis& basis);

}  // namespace fockscatter
