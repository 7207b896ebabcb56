#include "perturb/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <stdexcept>
#include <thread>

#include "perturb/conservative.hpp"
#include "perturb/oracle.hpp"
#include "perturb/vdp.hpp"

namespace perturb {

const char* system_name(System s) {
  switch (s) {
    case System::duffing: return "duffing";
    case System::sextic: return "sextic";
    case System::octic: return "octic";
    case System::vdp: return "vdp";
  }
  return "?";
}

System parse_system(const std::string& name) {
  if (name == "duffing") return System::duffing;
  if (name == "sextic") return System::sextic;
  if (name == "octic") return System::octic;
  if (name == "vdp") return System::vdp;
  throw std::invalid_argument("unknown system '" + name +
                              "' (expected duffing|sextic|octic|vdp)");
}

int system_power_index(System s) {
  switch (s) {
    case System::duffing: return 2;
    case System::sextic: return 3;
    case System::octic: return 4;
    case System::vdp: break;
  }
  throw std::invalid_argument("vdp has no power index");
}

std::vector<double> make_grid(const MuGrid& grid) {
  if (grid.count < 1) throw std::invalid_argument("grid count must be >= 1");
  std::vector<double> mus;
  if (grid.count == 1) {
    mus.push_back(grid.mu_min);
    return mus;
  }
  if (grid.scale == GridScale::log) {
    if (!(grid.mu_min > 0) || !(grid.mu_max > 0))
      throw std::invalid_argument("log grid requires positive mu bounds");
    const double l0 = std::log(grid.mu_min), l1 = std::log(grid.mu_max);
    for (int i = 0; i < grid.count; ++i)
      mus.push_back(std::exp(l0 + (l1 - l0) * i / (grid.count - 1)));
  } else {
    for (int i = 0; i < grid.count; ++i)
      mus.push_back(grid.mu_min +
                    (grid.mu_max - grid.mu_min) * i / (grid.count - 1));
  }
  return mus;
}

double resolve_lambda_sq(System system, double mu, int order,
                         const LambdaPolicy& policy) {
  if (policy.fixed_lambda_sq) return *policy.fixed_lambda_sq;
  if (system == System::vdp)
    return policy.vdp_scan ? vdp_scan_lambda_sq(mu, order) : 0.0;
  const int N = system_power_index(system);
  if (N == 2) return 0.75 * mu;  // third-order PMS, both signs of mu
  if (mu == 0.0) return 0.0;
  return pms_lambda_sq(OscillatorSpec{N, mu}, 3);
}

double oracle_omega(System system, double mu, double tol) {
  if (system == System::vdp)
    return 2.0 * std::numbers::pi / vdp_limit_cycle_period(mu, tol).value;
  return exact_frequency_quadrature(
             OscillatorSpec{system_power_index(system), mu})
      .value;
}

namespace {

std::vector<Method> normalize_methods(std::vector<Method> ms, System system) {
  if (ms.empty()) {
    ms = system == System::vdp
             ? std::vector<Method>{Method::lplde, Method::alpt}
             : std::vector<Method>{Method::lpt, Method::lplde, Method::alpt};
  }
  std::set<Method> seen(ms.begin(), ms.end());
  if (system == System::vdp && seen.count(Method::lpt))
    throw std::invalid_argument("vdp supports methods lplde and alpt only");
  return {seen.begin(), seen.end()};
}

int thread_cap(size_t points) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PERTURB_OSC_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return static_cast<int>(std::min<size_t>(hw, points));
}

template <class Fn>
void parallel_for(size_t n, Fn&& fn) {
  const int workers = thread_cap(n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

SweepRow evaluate_point(System system, double mu, Method method, int order,
                        const LambdaPolicy& policy, double oracle_val) {
  SweepRow row;
  row.mu = mu;
  row.method = method;
  row.order = order;
  row.omega = std::numeric_limits<double>::quiet_NaN();
  row.lambda_used = std::numeric_limits<double>::quiet_NaN();
  row.omega_oracle = oracle_val;
  try {
    if (system == System::vdp) {
      VdpResult res;
      if (method == Method::lplde) {
        const double s = resolve_lambda_sq(system, mu, order, policy);
        res = vdp_lplde_run_lambda_sq(mu, order, s).second;
      } else {
        res = vdp_alpt_run(mu, order).second;
      }
      row.omega = res.omega;
      row.converged = res.converged;
      row.lambda_used = res.lambda_used;
    } else {
      const OscillatorSpec spec{system_power_index(system), mu};
      FrequencyResult res;
      if (method == Method::lpt) {
        res = lpt_run(spec, order).second;
      } else if (method == Method::lplde) {
        const double s = resolve_lambda_sq(system, mu, order, policy);
        res = lplde_run_lambda_sq<double>(spec.power_index, mu, order, s).second;
      } else {
        res = alpt_run(spec, order).second;
      }
      row.omega = res.omega;
      row.converged = res.converged;
      row.lambda_used = res.lambda_used;
    }
  } catch (const std::exception&) {
    row.converged = false;
  }
  row.delta = std::fabs(row.omega_oracle - row.omega);  // NaN when unconverged
  return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepConfig& config) {
  const std::vector<double> mus = make_grid(config.grid);
  const std::vector<Method> methods =
      normalize_methods(config.methods, config.system);
  for (double mu : mus) {
    if (config.system == System::vdp) {
      if (!(mu >= 0)) throw std::invalid_argument("vdp sweep requires mu >= 0");
    } else if (!(mu > -1.0)) {
      throw std::invalid_argument("conservative sweep requires mu > -1");
    }
  }

  std::vector<double> oracles(mus.size());
  parallel_for(mus.size(), [&](size_t i) {
    oracles[i] = oracle_omega(config.system, mus[i], config.tol);
  });

  std::vector<SweepRow> rows(mus.size() * methods.size());
  parallel_for(rows.size(), [&](size_t idx) {
    const size_t i = idx / methods.size();
    const size_t j = idx % methods.size();
    rows[idx] = evaluate_point(config.system, mus[i], methods[j], config.order,
                               config.lambda, oracles[i]);
  });
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SweepRow& a, const SweepRow& b) {
                     if (a.mu != b.mu) return a.mu < b.mu;
                     return std::string(method_name(a.method)) <
                            std::string(method_name(b.method));
                   });
  return rows;
}

std::vector<OrderScanRow> run_order_scan(System system, double mu,
                                         const std::vector<Method>& methods_in,
                                         int max_order,
                                         const LambdaPolicy& policy,
                                         double tol) {
  if (max_order < 1 || max_order > kMaxOrder)
    throw std::invalid_argument("max_order must lie in [1, 24]");
  const std::vector<Method> methods = normalize_methods(methods_in, system);
  const double om_oracle = oracle_omega(system, mu, tol);

  std::vector<OrderScanRow> rows(static_cast<size_t>(max_order) *
                                 methods.size());
  parallel_for(rows.size(), [&](size_t idx) {
    const int order = static_cast<int>(idx / methods.size()) + 1;
    const Method method = methods[idx % methods.size()];
    SweepRow pt = evaluate_point(system, mu, method, order, policy, om_oracle);
    rows[idx] = OrderScanRow{order, method, pt.delta};
  });
  std::stable_sort(rows.begin(), rows.end(),
                   [](const OrderScanRow& a, const OrderScanRow& b) {
                     if (a.order != b.order) return a.order < b.order;
                     return std::string(method_name(a.method)) <
                            std::string(method_name(b.method));
                   });
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sweep_csv(const std::vector<SweepRow>& rows,
                      const std::string& invocation) {
  std::string out = "# " + std::string(kArtifactVersion) + " | " + invocation +
                    "\n"
                    "mu,method,order,omega,omega_oracle,delta,converged,"
                    "lambda_used\n";
  for (const auto& r : rows) {
    out += format_double(r.mu);
    out += ',';
    out += method_name(r.method);
    out += ',';
    out += std::to_string(r.order);
    out += ',';
    out += format_double(r.omega);
    out += ',';
    out += format_double(r.omega_oracle);
    out += ',';
    out += format_double(r.delta);
    out += ',';
    out += r.converged ? '1' : '0';
    out += ',';
    out += format_double(r.lambda_used);
    out += '\n';
  }
  return out;
}

std::string order_scan_csv(const std::vector<OrderScanRow>& rows,
                           const std::string& invocation) {
  std::string out = "# " + std::string(kArtifactVersion) + " | " + invocation +
                    "\norder,method,delta\n";
  for (const auto& r : rows) {
    out += std::to_string(r.order);
    out += ',';
    out += method_name(r.method);
    out += ',';
    out += format_double(r.delta);
    out += '\n';
  }
  return out;
}

}  // namespace perturb
