#pragma once

#include <functional>
#include <vector>

#include "perturb/oscillator.hpp"

namespace perturb {

/// Reference value with an estimated numerical error bound and a work
/// counter (integrand or right-hand-side evaluations).
struct OracleResult {
  double value = 0.0;
  double est_error = 0.0;
  long evaluations = 0;
};

/// Frequency from the energy integral T = 4 int_0^1 dx / sqrt(2(V(1)-V(x)))
/// with the x = sin phi substitution, which cancels the inverse-square-root
/// endpoint singularity analytically:
///   T = 4 int_0^{pi/2} dphi / sqrt(1 + (mu/N) sum_{i=0}^{N-1} sin^{2i} phi).
/// Gauss-Legendre with node doubling until successive estimates agree to
/// 1e-12 relative.
OracleResult exact_frequency_quadrature(const OscillatorSpec& spec);

/// Second, independent oracle for N=2:
///   Omega = pi sqrt(1+mu) / (2 K(m)),  m = mu / (2(1+mu)),
/// with K evaluated by the arithmetic-geometric mean
/// K(m) = pi / (2 AGM(1, sqrt(1-m))), valid for all m < 1 (so all mu > -1).
OracleResult duffing_exact_elliptic(double mu);

/// Limit-cycle period of x'' + x = mu (1-x^2) x' from (2, 0): adaptive
/// integration at local tolerance tol/100, Poincare section x'=0 (x>0)
/// crossings refined to 1e-13 in time, accepted once successive periods
/// differ by less than tol relative.
OracleResult vdp_limit_cycle_period(double mu, double tol);

using OdeRhs = std::function<void(double t, const double* y, double* dydt)>;

struct TrajectoryPoint {
  double t;
  std::vector<double> y;
};

/// Adaptive embedded Runge-Kutta (Hairer's 8(5,3) pair) from t0 to t1.
/// Returns the accepted step points including both endpoints.  Throws
/// std::runtime_error on step-size underflow.
std::vector<TrajectoryPoint> integrate_ivp(const OdeRhs& rhs, int dim,
                                           std::vector<double> y0, double t0,
                                           double t1, double tol);

namespace detail {

/// Single-stepper interface used by the event-detection loops.
class Dop853 {
 public:
  Dop853(OdeRhs rhs, int dim, double tol);

  void start(double t0, std::vector<double> y0);
  /// Advance one accepted step, clamped so t never passes t_limit.
  /// Returns false once t == t_limit.
  bool step(double t_limit);

  double t() const { return t_; }
  double t_prev() const { return t_prev_; }
  const std::vector<double>& y() const { return y_; }
  const std::vector<double>& y_prev() const { return y_prev_; }
  long evaluations() const { return n_eval_; }

 private:
  bool attempt(double h, double& err);

  OdeRhs rhs_;
  int dim_;
  double tol_;
  double t_ = 0, t_prev_ = 0, h_ = 0;
  std::vector<double> y_, y_prev_, k_[12], y_stage_, y_new_;
  long n_eval_ = 0;
};

}  // namespace detail

}  // namespace perturb
