#include "fockscatter/quadrature.hpp"

#include <cmath>
#include <string>

namespace fockscatter::quadrature {

namespace {
void check_config(const QuadratureConfig& cfg) {
  if (!(cfg.b > 0.0)) throw DomainError("quadrature scale b must be positive");
}
}  // namespace

double turning_point(double n, const QuadratureConfig& cfg) { return 2.0 * cfg.b * std::sqrt(n + 0.5); }

double overlap_exact(int n, double q, const QuadratureConfig& cfg) {
  check_config(cfg);
  if (n < 0) throw DomainError("occupation must be non-negative");
  if (n > kMaxOccupation)
    throw DomainError("occupation " + std::to_string(n) + " above " + std::to_string(kMaxOccupation) +
                      ": Hermite recurrence would overflow");
  const double x = q / (std::numbers::sqrt2 * cfg.b);
  // normalized Hermite functions phi_k(x) without the Gaussian, rescaled on the fly
  double prev = 0.0;
  double cur = 1.0;
  double log_scale = 0.0;
  for (int k = 0; k < n; ++k) {
    const double next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
    prev = cur;
    cur = next;
    const double mag = std::max(std::abs(cur), std::abs(prev));
    if (mag > 1e100 || (mag < 1e-100 && mag > 0.0)) {
      log_scale += std::log(mag);
      prev /= mag;
      cur /= mag;
    }
  }
  const double log_norm = -0.25 * std::log(std::numbers::pi) - 0.5 * x * x + log_scale -
                          0.5 * std::log(std::numbers::sqrt2 * cfg.b);
  return cur * std::exp(log_norm);
}

double overlap_exact(std::span<const int> n, std::span<const double> q, const QuadratureConfig& cfg) {
  if (n.size() != q.size()) throw DomainError("occupation and quadrature vectors differ in length");
  double result = 1.0;
  for (std::size_t l = 0; l < n.size(); ++l) result *= overlap_exact(n[l], q[l], cfg);
  return result;
}

GeneratingFunction generating_function(double q, double n, const QuadratureConfig& cfg) {
  check_config(cfg);
  const double q_turn = turning_point(n, cfg);
  if (!(n > -0.5) || std::abs(q) > q_turn * (1.0 + 1e-14))
    throw DomainError("q outside the oscillatory region |q| <= 2b sqrt(n+1/2)");
  const double b2 = cfg.b * cfg.b;
  const double radicand = std::max(0.0, 4.0 * b2 * (n + 0.5) - q * q);
  const double theta = std::acos(std::clamp(q / q_turn, -1.0, 1.0));
  GeneratingFunction g;
  g.value = q / (4.0 * b2) * std::sqrt(radicand) - (n + 0.5) * theta;
  g.dq = std::sqrt(radicand) / (2.0 * b2);
  g.dn = -theta;
  return g;
}

double wkb_envelope(int n, double q, const QuadratureConfig& cfg) {
  check_config(cfg);
  const double radicand = 4.0 * cfg.b * cfg.b * (n + 0.5) - q * q;
  if (radicand <= 0.0) return 0.0;
  return std::sqrt(2.0 / (std::numbers::pi * std::sqrt(radicand)));
}

double overlap_wkb(int n, double q, const QuadratureConfig& cfg) {
  check_config(cfg);
  if (n < 0) throw DomainError("occupation must be non-negative");
  if (std::abs(q) >= turning_point(n, cfg)) return 0.0;
  return wkb_envelope(n, q, cfg) * std::cos(generating_function(q, n, cfg).value + std::numbers::pi / 4.0);
}

}  // namespace fockscatter::quadrature
