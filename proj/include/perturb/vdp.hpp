#pragma once

#include <string>
#include <utility>
#include <vector>

#include "perturb/oscillator.hpp"
#include "perturb/trig_poly.hpp"

namespace perturb {

/// Per-order ledger of a Van der Pol run.  solutions[n] carries both cos
/// and sin harmonics (2j+1, j<=n); amplitudes[n] is the initial-condition
/// correction A_n = x_n(0).  The final order's homogeneous amplitude is
/// undetermined at truncation and recorded as 0.
struct VdpOrderState {
  Method method = Method::lplde;
  int order = 0;
  std::vector<TrigPoly<double>> solutions;
  std::vector<double> alphas;      // lplde: expansion of Omega (alpha_0 = sqrt(1+lambda^2));
                                   // alpt: expansion of Omega^2 with alphas[0] = 1
  std::vector<double> amplitudes;  // A_0..A_order
  // per order: max |fundamental| left in the forcing after the
  // (alpha_n, A_{n-1}) elimination, normalized by the forcing scale
  std::vector<double> resonance_residuals;
};

struct VdpResult {
  Method method = Method::lplde;
  double omega = 0.0;
  double period = 0.0;      // 2 pi / omega, by construction
  double amplitude = 0.0;   // sum of A_n
  bool converged = false;
  double lambda_used = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool coupling_warning = false;  // alpt outside its trusted mu range
  std::string failure_reason;
};

/// Delta-expansion treatment of x'' + x = mu (1 - x^2) x': Omega itself is
/// expanded and the pair (alpha_n, A_{n-1}) removes both fundamental
/// resonances at each order.  The order-1 conditions determine the
/// limit-cycle amplitude A_0.
std::pair<VdpOrderState, VdpResult>
vdp_lplde_run_lambda_sq(double mu, int order, double lambda_sq);

std::pair<VdpOrderState, VdpResult>
vdp_lplde_run(double mu, int order, double lambda);

/// Alternative recursion in physical time with trial Omega and the outer
/// self-consistent frequency solve.  converged=false is reported when the
/// truncated frequency equation has no real solution (which is how the
/// method fails for mu beyond about 2).
std::pair<VdpOrderState, VdpResult>
vdp_alpt_run(double mu, int order, const SelfConsistentConfig& cfg = {});

/// Least-sensitivity scan: lambda^2 in [0, s_max] minimizing
/// |d Omega_(order) / d lambda^2| (stationary point when one exists).
double vdp_scan_lambda_sq(double mu, int order);

}  // namespace perturb
