#include "perturb/conservative.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace perturb {

void validate(const OscillatorSpec& spec) {
  if (spec.power_index < 2 || spec.power_index > 4)
    throw std::invalid_argument("power index N must be 2, 3 or 4");
  if (!(spec.mu > -1.0) || !std::isfinite(spec.mu))
    throw std::invalid_argument("mu must satisfy mu > -1 (periodic motion)");
}

namespace detail {

void validate_order(int order) {
  if (order < 0 || order > kMaxOrder)
    throw std::invalid_argument("order must lie in [0, 24]");
}

}  // namespace detail

MethodOrderState<double> to_double_state(const MethodOrderState<Rational>& st) {
  MethodOrderState<double> out;
  out.method = st.method;
  out.power_index = st.power_index;
  out.order = st.order;
  for (const auto& p : st.solutions) {
    TrigPoly<double> q;
    for (const auto& [k, c] : p.cos_terms())
      q += TrigPoly<double>::cosine(k, ScalarTraits<Rational>::to_double(c));
    for (const auto& [k, c] : p.sin_terms())
      q += TrigPoly<double>::sine(k, ScalarTraits<Rational>::to_double(c));
    out.solutions.push_back(std::move(q));
  }
  for (const auto& a : st.alphas)
    out.alphas.push_back(ScalarTraits<Rational>::to_double(a));
  for (const auto& w : st.order_weights)
    out.order_weights.push_back(ScalarTraits<Rational>::to_double(w));
  return out;
}

std::pair<MethodOrderState<double>, FrequencyResult>
lpt_run(const OscillatorSpec& spec, int order) {
  return lpt_run<double>(spec.power_index, spec.mu, order);
}

std::pair<MethodOrderState<double>, FrequencyResult>
lplde_run(const OscillatorSpec& spec, int order, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0)
    throw std::invalid_argument("lambda must be finite and >= 0");
  return lplde_run_lambda_sq<double>(spec.power_index, spec.mu, order,
                                     lambda * lambda);
}

namespace {

/// One pass of the alternative recursion at a fixed trial W = Omega^2.
/// Forcing of order n is (alpha_n cos + R_n) / W with
///   R_n = sum_{j=1}^{n-1} alpha_j P_{n-j} - (P^(2N-1))_{n-1}
/// and alpha_n = -cos_1(R_n).
MethodOrderState<double> alpt_recursion(int power_index, int order, double W) {
  MethodOrderState<double> st;
  st.method = Method::alpt;
  st.power_index = power_index;
  st.order = order;
  st.solutions.push_back(TrigPoly<double>::cosine(1, 1.0));
  st.alphas.push_back(1.0);  // the constant term of Omega^2 = 1 + sum
  st.order_weights.push_back(1.0);

  detail::PowerTable<double> powers(2 * power_index - 1);
  for (int n = 1; n <= order; ++n) {
    powers.push(st.solutions[n - 1]);
    TrigPoly<double> R = -powers.top(n - 1);
    for (int j = 1; j <= n - 1; ++j)
      R += st.solutions[n - j] * st.alphas[j];
    detail::check_no_sine_resonance(R);
    const double alpha_n = -R.cos_coeff(1);
    TrigPoly<double> forcing = R.without_fundamental() * (1.0 / W);
    TrigPoly<double> Pn = invert_unit_oscillator(forcing);
    Pn += TrigPoly<double>::cosine(1, -Pn.value_at_zero());
    st.solutions.push_back(std::move(Pn));
    st.alphas.push_back(alpha_n);
    st.order_weights.push_back(1.0);  // mu powers are applied by the caller
  }
  return st;
}

double alpt_rhs(const MethodOrderState<double>& st, double mu) {
  double acc = 1.0, mu_pow = 1.0;
  for (size_t n = 1; n < st.alphas.size(); ++n) {
    mu_pow *= mu;
    acc += st.alphas[n] * mu_pow;
  }
  return acc;
}

void set_mu_weights(MethodOrderState<double>& st, double mu) {
  double mu_pow = 1.0;
  for (size_t n = 0; n < st.order_weights.size(); ++n) {
    st.order_weights[n] = mu_pow;
    mu_pow *= mu;
  }
}

}  // namespace

std::pair<MethodOrderState<double>, FrequencyResult>
alpt_run(const OscillatorSpec& spec, int order, const SelfConsistentConfig& cfg) {
  validate(spec);
  detail::validate_order(order);
  const int N = spec.power_index;
  const double mu = spec.mu;

  auto finish = [&](double omega, bool converged, int iterations,
                    std::string why = {}) {
    MethodOrderState<double> st =
        alpt_recursion(N, order, converged ? omega * omega : 1.0);
    set_mu_weights(st, mu);
    FrequencyResult r;
    r.method = Method::alpt;
    r.iterations = iterations;
    if (converged) {
      r.omega_sq_partials.clear();
      double acc = 0;
      for (size_t n = 0; n < st.alphas.size(); ++n) {
        acc += st.alphas[n] * st.order_weights[n];
        r.omega_sq_partials.push_back(acc);
      }
      r.omega = omega;
      r.converged = true;
    } else {
      r.converged = false;
      r.omega = std::numeric_limits<double>::quiet_NaN();
      r.failure_reason = std::move(why);
    }
    return std::make_pair(std::move(st), std::move(r));
  };

  if (order == 0 || mu == 0.0) return finish(1.0, true, 0);

  // warm start from the third-order Lindstedt-Poincare partial sum
  const double w_lpt3 =
      lpt_run<double>(N, mu, 3).second.omega_sq_partials.back();
  const double omega = (std::isfinite(w_lpt3) && w_lpt3 > 1e-4)
                           ? std::sqrt(w_lpt3)
                           : 1.0;

  auto rhs_at = [&](double om) {
    return alpt_rhs(alpt_recursion(N, order, om * om), mu);
  };

  // damped fixed-point iteration on Omega
  int it = 0;
  bool fp_ok = false;
  double om = omega;
  for (; it < cfg.max_iterations; ++it) {
    const double w_new = rhs_at(om);
    if (!std::isfinite(w_new) || w_new <= 0) break;
    const double om_new = std::sqrt(w_new);
    if (std::fabs(om_new - om) < cfg.tol * (1.0 + std::fabs(om_new))) {
      om = om_new;
      fp_ok = true;
      break;
    }
    om += cfg.damping * (om_new - om);
    if (!std::isfinite(om) || om <= 0) break;
  }
  if (fp_ok) return finish(om, true, it + 1);

  // bisection fallback on g(Omega) = Omega^2 - rhs(Omega)
  double lo = cfg.bracket_lo > 0
                  ? cfg.bracket_lo
                  : std::max(1e-3, std::min(0.5, 0.25 * omega));
  double hi = cfg.bracket_hi > 0 ? cfg.bracket_hi : 2.0 * std::max(omega, 1.0);
  auto g = [&](double x) { return x * x - rhs_at(x); };

  const int scan_points = 128;
  double a = 0, b = 0, ga = 0;
  bool have_bracket = false;
  double prev_x = lo, prev_g = g(lo);
  double best_dist = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= scan_points; ++i) {
    const double x = lo + (hi - lo) * i / scan_points;
    const double gx = g(x);
    if (std::isfinite(prev_g) && std::isfinite(gx) &&
        ((prev_g < 0) != (gx < 0))) {
      const double mid = 0.5 * (prev_x + x);
      const double dist = std::fabs(mid - omega);
      if (dist < best_dist) {
        best_dist = dist;
        a = prev_x;
        b = x;
        ga = prev_g;
        have_bracket = true;
      }
    }
    prev_x = x;
    prev_g = gx;
  }
  if (!have_bracket)
    return finish(0.0, false, it,
                  "no real solution: bisection bracket could not be "
                  "established in [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");

  int bis = 0;
  while (b - a > cfg.tol * (1.0 + b) && bis < 200) {
    const double m = 0.5 * (a + b);
    const double gm = g(m);
    if ((gm < 0) == (ga < 0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
    ++bis;
  }
  return finish(0.5 * (a + b), true, it + bis);
}

namespace {

double lplde_omega_at(const OscillatorSpec& spec, int order, double s) {
  auto [st, res] =
      lplde_run_lambda_sq<double>(spec.power_index, spec.mu, order, s);
  return res.omega;
}

/// Sign of d(Omega^2)/ds at rational s via exact centered differences.
/// Rational-mode evaluation makes the difference free of rounding, so the
/// sign is trustworthy down to the h^2 truncation error.
int exact_derivative_sign(const OscillatorSpec& spec, int order,
                          const Rational& s, const Rational& h) {
  // the double mu is carried as its exact dyadic value
  const Rational mu_exact(spec.mu);
  auto w = [&](const Rational& sv) {
    auto [st, res] = lplde_run_lambda_sq<Rational>(spec.power_index, mu_exact,
                                                   order, sv);
    return omega_sq_sum(st);
  };
  const Rational d = w(s + h) - w(s - h);
  if (d > 0) return 1;
  if (d < 0) return -1;
  return 0;
}

}  // namespace

double pms_lambda_sq(const OscillatorSpec& spec, int order) {
  validate(spec);
  if (order < 1 || order > kMaxOrder)
    throw std::invalid_argument("pms: order must lie in [1, 24]");
  if (spec.mu == 0.0) return 0.0;  // unperturbed problem is lambda-independent

  // Duffing third order has the analytic stationary point s = 3 mu / 4
  // (for either sign of mu).
  if (spec.power_index == 2 && order == 3) return 0.75 * spec.mu;

  const double s_min = spec.mu < 0 ? -0.9 : 0.0;
  double s_max = 3.0 * std::max(std::fabs(spec.mu), 1.0) + 2.0;

  auto omega_of = [&](double s) { return lplde_omega_at(spec, order, s); };

  // flat approximant: no lambda dependence to optimize
  {
    double w0 = omega_of(s_min + 1e-6), w1 = omega_of(0.5 * (s_min + s_max)),
           w2 = omega_of(s_max);
    const double spread = std::max({w0, w1, w2}) - std::min({w0, w1, w2});
    if (std::isfinite(spread) && spread < 1e-13 * (1.0 + std::fabs(w1)))
      return 0.0;
  }

  const double s_ref = 0.75 * spec.mu;  // third-order Duffing scale
  double best_a = 0, best_b = 0;
  bool found = false;
  for (int expansion = 0; expansion < 6 && !found; ++expansion) {
    const int pts = 256;
    const double fd_h = 1e-6 * (s_max - s_min);
    double prev_s = 0, prev_d = std::numeric_limits<double>::quiet_NaN();
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 1; i < pts; ++i) {
      const double s = s_min + (s_max - s_min) * i / pts;
      const double d = omega_of(s + fd_h) - omega_of(s - fd_h);
      if (std::isfinite(prev_d) && std::isfinite(d) &&
          ((prev_d < 0) != (d < 0))) {
        const double mid = 0.5 * (prev_s + s);
        const double dist = std::fabs(mid - s_ref);
        if (dist < best_dist) {
          best_dist = dist;
          best_a = prev_s;
          best_b = s;
          found = true;
        }
      }
      prev_s = s;
      prev_d = d;
    }
    if (!found) s_max *= 4.0;
    if (s_max > 1e6) break;
  }
  if (!found)
    throw std::runtime_error(
        "pms: no stationary point of Omega(lambda^2) found in the scan range");

  // refine by bisection on the derivative sign
  if (order <= 10) {
    // exact rational differences: h far below the bracket width keeps the
    // truncation bias negligible while the sign stays noise-free
    Rational a(best_a), b(best_b);
    const Rational h = Rational(b - a) / 1000000;
    const Rational tol_s(1, 10000000000000LL);  // 1e-13
    int sign_a = exact_derivative_sign(spec, order, a, h);
    for (int i = 0; i < 80 && Rational(b - a) > tol_s; ++i) {
      const Rational m = Rational((a + b) / 2);
      const int sm = exact_derivative_sign(spec, order, m, h);
      if (sm == 0) return ScalarTraits<Rational>::to_double(m);
      if (sm == sign_a)
        a = m;
      else
        b = m;
      if (Rational(b - a) < Rational(h * 4)) break;
    }
    return ScalarTraits<Rational>::to_double(Rational((a + b) / 2));
  }

  double a = best_a, b = best_b;
  const double fd_h = 1e-7 * (1.0 + std::fabs(b));
  auto dsign = [&](double s) {
    const double d = omega_of(s + fd_h) - omega_of(s - fd_h);
    return d < 0 ? -1 : 1;
  };
  int sign_a = dsign(a);
  for (int i = 0; i < 60 && (b - a) > 1e-10 * (1.0 + std::fabs(b)); ++i) {
    const double m = 0.5 * (a + b);
    if (dsign(m) == sign_a)
      a = m;
    else
      b = m;
  }
  return 0.5 * (a + b);
}

double pms_lambda(const OscillatorSpec& spec, int order) {
  const double s = pms_lambda_sq(spec, order);
  if (s < 0)
    throw std::domain_error(
        "pms: stationary lambda^2 is negative (mu < 0); use pms_lambda_sq");
  return std::sqrt(s);
}

double residual_norm(const OscillatorSpec& spec,
                     const MethodOrderState<double>& st, double omega) {
  validate(spec);
  const TrigPoly<double> x = reconstruct_trajectory(st);
  const TrigPoly<double> xdd = x.derivative(2);
  const double w = omega * omega;
  const int grid = 512;
  double worst = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / grid;
    const double xv = x.eval(theta);
    double pow_term = xv;
    for (int p = 1; p < 2 * spec.power_index - 1; ++p) pow_term *= xv;
    const double r = w * xdd.eval(theta) + xv + spec.mu * pow_term;
    worst = std::max(worst, std::fabs(r));
  }
  return worst;
}

}  // namespace perturb
