#include "perturb/vdp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace perturb {

namespace {

using Poly = TrigPoly<double>;

void validate_vdp(double mu, int order) {
  if (!(mu >= 0.0) || !std::isfinite(mu))
    throw std::invalid_argument("vdp: mu must be finite and >= 0");
  if (order < 1 || order > kMaxOrder)
    throw std::invalid_argument("vdp: order must lie in [1, 24]");
}

/// Shared order-by-order machinery.  Engines differ only in how the
/// order-n forcing is assembled; x_0 starts as the zero polynomial with
/// A_0 supplied by the order-1 amplitude condition, and every x_{n-1}
/// receives its homogeneous cos amplitude A_{n-1} during order n.
struct VdpRecursion {
  std::vector<Poly> x;        // finalized solutions
  std::vector<double> al;     // engine-specific expansion coefficients
  std::vector<double> A;      // resolved amplitudes

  // Engine hook: order-n forcing with trial alpha_n and trial A_{n-1}
  // (added on the cos fundamental of x_{n-1}).
  virtual Poly forcing(int n, double alpha_n, double a_prev) const = 0;
  virtual ~VdpRecursion() = default;

  std::vector<Poly> with_amplitude(int idx, double a_prev) const {
    std::vector<Poly> xs = x;
    if (a_prev != 0.0) xs[idx] += Poly::cosine(1, a_prev);
    return xs;
  }

  /// The order-1 sin-fundamental condition is an odd cubic c1*A + c3*A^3
  /// in the amplitude (one linear drive factor, one cubic damping term);
  /// two probes recover c1, c3 exactly and the attracting-cycle root is
  /// sqrt(-c1/c3).
  double solve_order1_amplitude() {
    const double h1 = forcing(1, 0.0, 1.0).sin_coeff(1);
    const double h2 = forcing(1, 0.0, 2.0).sin_coeff(1);
    const double c3 = (h2 - 2.0 * h1) / 6.0;
    const double c1 = h1 - c3;
    if (c3 == 0.0 || -c1 / c3 <= 0.0)
      throw std::runtime_error(
          "vdp: degenerate order-1 amplitude condition (no limit cycle)");
    return std::sqrt(-c1 / c3);
  }

  /// Affine solve of {cos_1 = 0, sin_1 = 0} for (alpha_n, A_{n-1}).
  /// Exact for n >= 2, where both unknowns enter the forcing linearly.
  std::pair<double, double> solve_pair(int n) const {
    const Poly f00 = forcing(n, 0.0, 0.0);
    const Poly f10 = forcing(n, 1.0, 0.0);
    const Poly f01 = forcing(n, 0.0, 1.0);
    const double m00 = f10.cos_coeff(1) - f00.cos_coeff(1);
    const double m01 = f01.cos_coeff(1) - f00.cos_coeff(1);
    const double m10 = f10.sin_coeff(1) - f00.sin_coeff(1);
    const double m11 = f01.sin_coeff(1) - f00.sin_coeff(1);
    const double det = m00 * m11 - m01 * m10;
    const double scale = std::max({std::fabs(m00), std::fabs(m01),
                                   std::fabs(m10), std::fabs(m11), 1e-300});
    if (std::fabs(det) < 1e-12 * scale * scale)
      throw std::runtime_error(
          "vdp: singular 2x2 resonance-elimination system at order " +
          std::to_string(n));
    const double r0 = -f00.cos_coeff(1);
    const double r1 = -f00.sin_coeff(1);
    return {(r0 * m11 - m01 * r1) / det, (m00 * r1 - r0 * m10) / det};
  }

  void append_solution(int n, double alpha_n) {
    Poly f = forcing(n, alpha_n, 0.0).without_fundamental();
    Poly xn = invert_unit_oscillator(f);
    xn += Poly::sine(1, -xn.slope_at_zero());    // x'_n(0) = 0
    xn += Poly::cosine(1, -xn.value_at_zero());  // x_n(0) = 0 until A_n lands
    x.push_back(std::move(xn));
  }

  void run(int order) {
    const double a0 = solve_order1_amplitude();
    const double r0 = forcing(1, 0.0, a0).cos_coeff(1);
    const double r1 = forcing(1, 1.0, a0).cos_coeff(1);
    if (r1 == r0)
      throw std::runtime_error("vdp: order-1 frequency condition degenerate");
    const double alpha_1 = -r0 / (r1 - r0);
    x[0] += Poly::cosine(1, a0);
    A.push_back(a0);
    al.push_back(alpha_1);
    append_solution(1, alpha_1);

    for (int n = 2; n <= order; ++n) {
      const auto [alpha_n, a_prev] = solve_pair(n);
      x[n - 1] += Poly::cosine(1, a_prev);
      A.push_back(a_prev);
      al.push_back(alpha_n);
      append_solution(n, alpha_n);
    }
    A.push_back(0.0);  // A_order: undetermined at truncation
  }
};

/// Forcing of the Omega-expanded delta recursion, divided by 1+lambda^2:
///   mu sum_{j<n} alpha_j x'_{n-1-j}
///   - mu sum_{i+j+k+l=n-1} alpha_i x_j x_k x'_l
///   - sum_{m=1..n} (Omega^2)_m x''_{n-m}
///   + lambda^2 x_{n-1}
/// with (Omega^2)_m the pair convolution of the alpha's.
struct LpldeRecursion final : VdpRecursion {
  double mu, s, a0;

  LpldeRecursion(double mu_, double s_) : mu(mu_), s(s_), a0(std::sqrt(1 + s_)) {
    if (!(1.0 + s_ > 0.0))
      throw std::invalid_argument("vdp lplde: 1 + lambda^2 must be positive");
    x.push_back(Poly{});
    al.push_back(a0);
  }

  Poly forcing(int n, double alpha_n, double a_prev) const override {
    const std::vector<Poly> xs = with_amplitude(n - 1, a_prev);
    std::vector<double> als = al;
    als.push_back(alpha_n);
    als.resize(n + 1);

    std::vector<Poly> xd, xdd;
    xd.reserve(n);
    xdd.reserve(n);
    for (int i = 0; i < n; ++i) {
      xd.push_back(xs[i].derivative());
      xdd.push_back(xs[i].derivative(2));
    }

    Poly f;
    for (int j = 0; j < n; ++j) f += xd[n - 1 - j] * (mu * als[j]);
    for (int i = 0; i < n; ++i) {
      if (als[i] == 0.0) continue;
      for (int j = 0; j < n - i; ++j)
        for (int k = 0; k < n - i - j; ++k)
          f -= xs[j] * xs[k] * xd[n - 1 - i - j - k] * (mu * als[i]);
    }
    for (int m = 1; m <= n; ++m) {
      double om2_m = 0.0;
      for (int a = 0; a <= m; ++a) om2_m += als[a] * als[m - a];
      f -= xdd[n - m] * om2_m;
    }
    f += xs[n - 1] * s;
    return f * (1.0 / (1.0 + s));
  }
};

/// Forcing of the alternative recursion in the phase theta = Omega t:
///   ( sum_{j=1..n} alpha_j x_{n-j}
///     + Omega ( x'_{n-1} - sum_{j1+j2+j3=n-1} x_j1 x_j2 x'_j3 ) ) / Omega^2
struct AlptRecursion final : VdpRecursion {
  double omega, w;

  explicit AlptRecursion(double omega_) : omega(omega_), w(omega_ * omega_) {
    x.push_back(Poly{});
    al.push_back(1.0);  // constant term of Omega^2 = 1 + sum alpha_n mu^n
  }

  Poly forcing(int n, double alpha_n, double a_prev) const override {
    const std::vector<Poly> xs = with_amplitude(n - 1, a_prev);
    std::vector<double> als = al;
    als.push_back(alpha_n);
    als.resize(n + 1);

    std::vector<Poly> xd;
    xd.reserve(n);
    for (int i = 0; i < n; ++i) xd.push_back(xs[i].derivative());

    Poly f;
    for (int j = 1; j <= n; ++j) f += xs[n - j] * als[j];
    Poly damp = xd[n - 1];
    for (int j1 = 0; j1 < n; ++j1)
      for (int j2 = 0; j2 < n - j1; ++j2)
        damp -= xs[j1] * xs[j2] * xd[n - 1 - j1 - j2];
    f += damp * omega;
    return f * (1.0 / w);
  }
};

std::pair<VdpOrderState, VdpResult> harmonic_limit(Method method, int order,
                                                   double lambda_sq) {
  // mu = 0: no damping term; the limit-cycle amplitude tends to 2
  VdpOrderState st;
  st.method = method;
  st.order = order;
  st.solutions.assign(order + 1, Poly{});
  st.solutions[0] = Poly::cosine(1, 2.0);
  st.alphas.assign(order + 1, 0.0);
  st.alphas[0] = method == Method::lplde ? std::sqrt(1.0 + lambda_sq) : 1.0;
  if (method == Method::lplde && order >= 1)
    st.alphas[1] = 1.0 - st.alphas[0];  // delta sum restores Omega = 1
  st.amplitudes.assign(order + 1, 0.0);
  st.amplitudes[0] = 2.0;
  VdpResult r;
  r.method = method;
  r.omega = 1.0;
  r.period = 2.0 * std::numbers::pi;
  r.amplitude = 2.0;
  r.converged = true;
  if (method == Method::lplde) r.lambda_used = encode_lambda(lambda_sq);
  return {std::move(st), std::move(r)};
}

VdpOrderState pack_state(Method method, int order, VdpRecursion&& rec) {
  VdpOrderState st;
  st.method = method;
  st.order = order;
  st.solutions = std::move(rec.x);
  st.alphas = std::move(rec.al);
  st.amplitudes = std::move(rec.A);
  return st;
}

}  // namespace

std::pair<VdpOrderState, VdpResult>
vdp_lplde_run_lambda_sq(double mu, int order, double lambda_sq) {
  validate_vdp(mu, order);
  if (mu == 0.0) return harmonic_limit(Method::lplde, order, lambda_sq);

  LpldeRecursion rec(mu, lambda_sq);
  VdpResult r;
  r.method = Method::lplde;
  r.lambda_used = encode_lambda(lambda_sq);
  try {
    rec.run(order);
  } catch (const std::runtime_error& e) {
    r.converged = false;
    r.failure_reason = e.what();
    r.omega = std::numeric_limits<double>::quiet_NaN();
    r.period = std::numeric_limits<double>::quiet_NaN();
    r.amplitude = std::numeric_limits<double>::quiet_NaN();
    return {pack_state(Method::lplde, order, std::move(rec)), std::move(r)};
  }
  double omega = 0.0;
  for (double a : rec.al) omega += a;  // delta = 1
  double amp = 0.0;
  for (double a : rec.A) amp += a;
  r.omega = omega;
  r.period = 2.0 * std::numbers::pi / omega;
  r.amplitude = amp;
  r.converged = std::isfinite(omega) && omega > 0;
  if (!r.converged) r.failure_reason = "non-positive frequency sum";
  return {pack_state(Method::lplde, order, std::move(rec)), std::move(r)};
}

std::pair<VdpOrderState, VdpResult>
vdp_lplde_run(double mu, int order, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0)
    throw std::invalid_argument("vdp lplde: lambda must be finite and >= 0");
  return vdp_lplde_run_lambda_sq(mu, order, lambda * lambda);
}

std::pair<VdpOrderState, VdpResult>
vdp_alpt_run(double mu, int order, const SelfConsistentConfig& cfg) {
  validate_vdp(mu, order);
  if (mu == 0.0) return harmonic_limit(Method::alpt, order, 0.0);

  const bool warn = mu > 2.0;  // the mu-dependence of the method goes wrong here

  auto recursion_at = [&](double omega) {
    AlptRecursion rec(omega);
    rec.run(order);
    return rec;
  };
  auto rhs = [&](const AlptRecursion& rec) {
    double acc = 1.0, mu_pow = 1.0;
    for (size_t n = 1; n < rec.al.size(); ++n) {
      mu_pow *= mu;
      acc += rec.al[n] * mu_pow;
    }
    return acc;
  };

  auto fail = [&](int iterations, std::string why) {
    AlptRecursion rec(1.0);
    try {
      rec.run(order);
    } catch (...) {
    }
    VdpResult r;
    r.method = Method::alpt;
    r.iterations = iterations;
    r.converged = false;
    r.coupling_warning = warn;
    r.failure_reason = std::move(why);
    r.omega = std::numeric_limits<double>::quiet_NaN();
    r.period = std::numeric_limits<double>::quiet_NaN();
    r.amplitude = std::numeric_limits<double>::quiet_NaN();
    return std::make_pair(pack_state(Method::alpt, order, std::move(rec)),
                          std::move(r));
  };

  auto succeed = [&](double omega, int iterations) {
    AlptRecursion rec = recursion_at(omega);
    VdpResult r;
    r.method = Method::alpt;
    r.iterations = iterations;
    r.omega = omega;
    r.period = 2.0 * std::numbers::pi / omega;
    double amp = 0.0;
    for (double a : rec.A) amp += a;
    r.amplitude = amp;
    r.converged = omega > 0 && std::isfinite(omega);
    r.coupling_warning = warn;
    return std::make_pair(pack_state(Method::alpt, order, std::move(rec)),
                          std::move(r));
  };

  // damped fixed point from the harmonic start
  double om = 1.0;
  int it = 0;
  try {
    for (; it < cfg.max_iterations; ++it) {
      const double w_new = rhs(recursion_at(om));
      if (!std::isfinite(w_new) || w_new <= 0) break;
      const double om_new = std::sqrt(w_new);
      if (std::fabs(om_new - om) < cfg.tol * (1.0 + std::fabs(om_new)))
        return succeed(om_new, it + 1);
      om += cfg.damping * (om_new - om);
      if (!std::isfinite(om) || om <= 0) break;
    }
  } catch (const std::runtime_error&) {
    // fall through to the bracketed search
  }

  // bisection fallback on g(Omega) = Omega^2 - rhs(Omega); root nearest
  // the harmonic frequency is taken
  const double lo = cfg.bracket_lo > 0 ? cfg.bracket_lo : 0.05;
  const double hi = cfg.bracket_hi > 0 ? cfg.bracket_hi : 2.5;
  auto g = [&](double x) -> double {
    try {
      return x * x - rhs(recursion_at(x));
    } catch (const std::runtime_error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  const int scan_points = 96;
  double a = 0, b = 0, ga = 0;
  bool have = false;
  double best_dist = std::numeric_limits<double>::infinity();
  double prev_x = lo, prev_g = g(lo);
  for (int i = 1; i <= scan_points; ++i) {
    const double xx = lo + (hi - lo) * i / scan_points;
    const double gx = g(xx);
    if (std::isfinite(prev_g) && std::isfinite(gx) &&
        ((prev_g < 0) != (gx < 0))) {
      const double mid = 0.5 * (prev_x + xx);
      if (std::fabs(mid - 1.0) < best_dist) {
        best_dist = std::fabs(mid - 1.0);
        a = prev_x;
        b = xx;
        ga = prev_g;
        have = true;
      }
    }
    prev_x = xx;
    prev_g = gx;
  }
  if (!have)
    return fail(it,
                "no real solution: the truncated frequency equation has no "
                "root in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                    "]");
  int bis = 0;
  while (b - a > cfg.tol * (1.0 + b) && bis < 200) {
    const double m = 0.5 * (a + b);
    const double gm = g(m);
    if (!std::isfinite(gm)) break;
    if ((gm < 0) == (ga < 0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
    ++bis;
  }
  return succeed(0.5 * (a + b), it + bis);
}

double vdp_scan_lambda_sq(double mu, int order) {
  validate_vdp(mu, order);
  if (mu == 0.0) return 0.0;
  auto omega_of = [&](double s) {
    return vdp_lplde_run_lambda_sq(mu, order, s).second.omega;
  };
  // coarse-to-fine grid search for the least-sensitive lambda^2
  double lo = 0.0, hi = 10.0 * std::max(mu, 1.0);
  double best_s = 0.0;
  for (int pass = 0; pass < 3; ++pass) {
    const int pts = 120;
    const double h = (hi - lo) / pts;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 1; i < pts; ++i) {
      const double s = lo + i * h;
      const double d = std::fabs(omega_of(s + 0.5 * h) - omega_of(s - 0.5 * h));
      if (d < best) {
        best = d;
        best_s = s;
      }
    }
    lo = std::max(0.0, best_s - 2.0 * h);
    hi = best_s + 2.0 * h;
  }
  return best_s;
}

}  // namespace perturb
