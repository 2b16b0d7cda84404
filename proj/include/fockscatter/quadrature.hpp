#pragma once

#include <numbers>
#include <span>
#include <stdexcept>

namespace fockscatter::quadrature {

/// q = b (a + a^dag), p = -i b (a - a^dag). Any b > 0 is admissible.
struct QuadratureConfig {
  double b = 1.0 / std::numbers::sqrt2;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr int kMaxOccupation = 10000;

/// Turning point 2 b sqrt(n + 1/2) of the classical orbit with action n.
double turning_point(double n, const QuadratureConfig& cfg = {});

/// Single-mode <n|q> from the Hermite-function recurrence with a separately
/// tracked exponent, so large |q| underflows gracefully instead of producing NaN.
double overlap_exact(int n, double q, const QuadratureConfig& cfg = {});

/// Multi-mode <n|q> as a product of single-mode factors.
double overlap_exact(std::span<const int> n, std::span<const double> q, const QuadratureConfig& cfg = {});

/// WKB form sqrt(2 / (pi sqrt(4 b^2 (n+1/2) - q^2))) cos(F(q,n) + pi/4);
/// zero outside the oscillatory region.
double overlap_wkb(int n, double q, const QuadratureConfig& cfg = {});

/// Local amplitude of the WKB form (the cosine's prefactor).
double wkb_envelope(int n, double q, const QuadratureConfig& cfg = {});

struct GeneratingFunction {
  double value;  // F(q, n)
  double dq;     // dF/dq = |p| / (2 b^2)
  double dn;     // dF/dn = -theta, theta in [0, pi]
};

/// Generating function of (q, p) -> (n, theta) with q = 2b sqrt(n+1/2) cos(theta).
/// n is continuous here; throws DomainError outside |q| <= 2b sqrt(n+1/2).
GeneratingFunction generating_function(double q, double n, const QuadratureConfig& cfg = {});

}  // namespace fockscatter::quadrature
