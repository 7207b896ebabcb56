#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perturb/oscillator.hpp"

namespace perturb {

inline constexpr const char* kArtifactVersion = "perturb-osc 1.0.0";

enum class System { duffing, sextic, octic, vdp };

const char* system_name(System s);
System parse_system(const std::string& name);  // throws invalid_argument
int system_power_index(System s);              // conservative systems only

enum class ArithMode { floating, rational };

enum class GridScale { linear, log };

struct MuGrid {
  double mu_min = 0.0;
  double mu_max = 1.0;
  int count = 1;
  GridScale scale = GridScale::linear;
};

std::vector<double> make_grid(const MuGrid& grid);

/// How lambda is chosen for lplde runs when not given explicitly:
/// conservative systems use the third-order PMS value (closed form for the
/// Duffing, including the negative-lambda^2 branch for mu < 0); the VdP
/// default is lambda = 0 with an optional least-sensitivity scan.
struct LambdaPolicy {
  std::optional<double> fixed_lambda_sq;
  bool vdp_scan = false;
};

double resolve_lambda_sq(System system, double mu, int order,
                         const LambdaPolicy& policy);

struct SweepConfig {
  System system = System::duffing;
  std::vector<Method> methods;  // emitted in enum order, deduplicated
  MuGrid grid;
  int order = 20;
  ArithMode arith = ArithMode::floating;
  LambdaPolicy lambda;
  double tol = 1e-9;  // vdp oracle tolerance
};

struct SweepRow {
  double mu = 0.0;
  Method method = Method::lpt;
  int order = 0;
  double omega = 0.0;
  double omega_oracle = 0.0;
  double delta = 0.0;
  bool converged = false;
  double lambda_used = 0.0;
};

/// One row per (mu, method), ascending mu then method name; points are
/// evaluated concurrently (capped by PERTURB_OSC_THREADS) and gathered in
/// deterministic order.  Failures land in-row with converged=false.
std::vector<SweepRow> run_sweep(const SweepConfig& config);

struct OrderScanRow {
  int order = 0;
  Method method = Method::lpt;
  double delta = 0.0;
};

std::vector<OrderScanRow> run_order_scan(System system, double mu,
                                         const std::vector<Method>& methods,
                                         int max_order,
                                         const LambdaPolicy& policy = {},
                                         double tol = 1e-9);

/// Reference frequency (conservative: quadrature, also elliptic for the
/// Duffing) or 2 pi / period (vdp).
double oracle_omega(System system, double mu, double tol = 1e-9);

/// 17-significant-digit CSV with a leading comment line recording the
/// invocation and artifact version; byte-identical for identical inputs.
std::string sweep_csv(const std::vector<SweepRow>& rows,
                      const std::string& invocation);
std::string order_scan_csv(const std::vector<OrderScanRow>& rows,
                           const std::string& invocation);

std::string format_double(double v);  // "%.17g"

}  // namespace perturb
