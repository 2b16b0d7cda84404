#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fockscatter::ode {

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time)
      : std::runtime_error(what + " at t=" + std::to_string(time)), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct StepControl {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  std::int64_t max_steps = 50'000'000;
};

/// Dormand-Prince 5(4) with FSAL and the 4th-order continuous extension.
/// `Rhs` is callable as rhs(t, y, dydt) writing into a preallocated vector.
template <class Rhs>
class DormandPrince {
 public:
  using Vector = Eigen::VectorXd;

  DormandPrince(Rhs rhs, Vector y0, double t0, StepControl control)
      : rhs_(std::move(rhs)), control_(control), t_(t0), t_prev_(t0), y_(std::move(y0)) {
    if (!(control_.rel_tol > 0.0) || !(control_.abs_tol > 0.0))
      throw std::invalid_argument("integrator tolerances must be positive");
    if (!y_.allFinite()) throw IntegrationError("non-finite initial state", t0);
    const Eigen::Index n = y_.size();
    for (Vector* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &y_new_, &r2_, &r3_, &r4_, &r5_})
      v->resize(n);
    y_prev_ = y_;
    rhs_(t_, y_, k1_);
  }

  double t() const { return t_; }
  double t_prev() const { return t_prev_; }
  const Vector& y() const { return y_; }
  const Vector& y_prev() const { return y_prev_; }
  std::int64_t accepted() const { return accepted_; }
  std::int64_t rejected() const { return rejected_; }

  /// Advances by one accepted step without passing t_end.
  void step(double t_end) {
    const double span = t_end - t_;
    if (span <= 0.0) return;
    if (h_ <= 0.0) h_ = initial_step(span);
    while (true) {
      if (accepted_ + rejected_ >= control_.max_steps) throw IntegrationError("step budget exhausted", t_);
      double h = std::min({h_, control_.max_step, span});
      const bool last = h >= span;
      if (last) h = span;
      if (h < 1e-14 * std::max(1.0, std::abs(t_))) throw IntegrationError("step size underflow", t_);

      attempt(h);
      const double err = error_norm();
      if (err <= 1.0 && std::isfinite(err)) {
        const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        // continuous extension coefficients
        r2_ = y_new_ - y_;
        r3_ = h * k1_ - r2_;
        r4_ = r2_ - h * k7_ - r3_;
        r5_ = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
        y_prev_.swap(y_);
        y_.swap(y_new_);
        k1_.swap(k7_);
        t_prev_ = t_;
        t_ = last ? t_end : t_ + h;
        h_last_ = t_ - t_prev_;
        h_ = h * factor;
        ++accepted_;
        return;
      }
      ++rejected_;
      h_ = h * (std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0) : 0.1);
    }
  }

  /// State at time s in [t_prev, t].
  void dense(double s, Vector& out) const {
    const double theta = h_last_ > 0.0 ? (s - t_prev_) / h_last_ : 1.0;
    const double theta1 = 1.0 - theta;
    out = y_prev_ + theta * (r2_ + theta1 * (r3_ + theta * (r4_ + theta1 * r5_)));
  }

 private:
  void attempt(double h) {
    const Vector& y = y_;
    tmp_ = y + h * (a21 * k1_);
    rhs_(t_ + c2 * h, tmp_, k2_);
    tmp_ = y + h * (a31 * k1_ + a32 * k2_);
    rhs_(t_ + c3 * h, tmp_, k3_);
    tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    rhs_(t_ + c4 * h, tmp_, k4_);
    tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    rhs_(t_ + c5 * h, tmp_, k5_);
    tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    rhs_(t_ + h, tmp_, k6_);
    y_new_ = y + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
    rhs_(t_ + h, y_new_, k7_);
    tmp_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
  }

  double error_norm() const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const double sc = control_.abs_tol + control_.rel_tol * std::max(std::abs(y_(i)), std::abs(y_new_(i)));
      const double r = tmp_(i) / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(y_.size()));
  }

  double initial_step(double span) {
    double d0 = 0.0, d1n = 0.0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const double sc = control_.abs_tol + control_.rel_tol * std::abs(y_(i));
      d0 += (y_(i) / sc) * (y_(i) / sc);
      d1n += (k1_(i) / sc) * (k1_(i) / sc);
    }
    d0 = std::sqrt(d0 / y_.size());
    d1n = std::sqrt(d1n / y_.size());
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, span);
    tmp_ = y_ + h0 * k1_;
    rhs_(t_ + h0, tmp_, k2_);
    double d2 = 0.0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const double sc = control_.abs_tol + control_.rel_tol * std::abs(y_(i));
      const double r = (k2_(i) - k1_(i)) / sc;
      d2 += r * r;
    }
    d2 = std::sqrt(d2 / y_.size()) / h0;
    const double dmax = std::max(d1n, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, span, control_.max_step});
  }

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  Rhs rhs_;
  StepControl control_;
  double t_;
  double t_prev_;
  double h_ = 0.0;
  double h_last_ = 0.0;
  Vector y_, y_prev_, y_new_, tmp_;
  Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_;
  Vector r2_, r3_, r4_, r5_;
  std::int64_t accepted_ = 0;
  std::int64_t rejected_ = 0;
};

}  // namespace fockscatter::ode
