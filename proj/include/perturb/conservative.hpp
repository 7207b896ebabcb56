#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "perturb/oscillator.hpp"
#include "perturb/trig_poly.hpp"

namespace perturb {

namespace detail {

/// Truncated powers of X = sum_m X_m d^m, extended one order at a time.
/// After push()-ing X_0..X_m, top(m) is the order-m coefficient of
/// X^power, which is all the (2N-1)-fold convolutions the recursions need.
template <class S>
class PowerTable {
 public:
  explicit PowerTable(int power) : pows_(power) {
    if (power < 1) throw std::invalid_argument("PowerTable: power must be >= 1");
  }

  void push(const TrigPoly<S>& Xm) {
    pows_[0].push_back(Xm);
    const size_t m = pows_[0].size() - 1;
    for (size_t p = 1; p < pows_.size(); ++p) {
      TrigPoly<S> acc;
      for (size_t i = 0; i <= m; ++i) acc += pows_[p - 1][i] * pows_[0][m - i];
      pows_[p].push_back(std::move(acc));
    }
  }

  const TrigPoly<S>& top(size_t m) const { return pows_.back().at(m); }

 private:
  std::vector<std::vector<TrigPoly<S>>> pows_;
};

template <class S>
void check_no_sine_resonance(const TrigPoly<S>& R) {
  const S s1 = R.sin_coeff(1);
  bool bad;
  if constexpr (ScalarTraits<S>::exact) {
    bad = (s1 != 0);
  } else {
    bad = std::fabs(ScalarTraits<S>::to_double(s1)) >
          1e-12 * (1.0 + R.max_abs_coeff());
  }
  if (bad)
    throw std::logic_error(
        "conservative recursion produced a sine resonance; "
        "this cannot happen for the symmetric restoring force");
}

/// Shared order-by-order body of the lpt/lplde recursions.
///
/// Per order n >= 1 the bracket is
///   R_n = conv_factor * (X^(2N-1))_{n-1}
///         + sum_{j=1}^{n-1} alpha_j * X''_{n-j}  -  lambda_sq * X_{n-1}
/// and the forcing (alpha_n cos - R_n) / alpha0 with alpha_n = cos_1(R_n),
/// which removes the resonance exactly.  lpt: conv_factor=1, lambda_sq=0,
/// alpha0=1, weights mu^n; lplde: conv_factor=mu, alpha0=1+lambda_sq,
/// weights 1 (delta set to one by summing).
template <class S>
MethodOrderState<S> delta_recursion(Method method, int power_index,
                                    const S& mu, int order, const S& lambda_sq) {
  const bool lplde = (method == Method::lplde);
  const S alpha0 = lplde ? S(S(1) + lambda_sq) : S(1);
  if (lplde && !(ScalarTraits<S>::to_double(alpha0) > 0))
    throw std::invalid_argument("lplde: 1 + lambda^2 must be positive");

  MethodOrderState<S> st;
  st.method = method;
  st.power_index = power_index;
  st.order = order;
  st.solutions.push_back(TrigPoly<S>::cosine(1, S(1)));
  st.alphas.push_back(alpha0);
  st.order_weights.push_back(S(1));

  PowerTable<S> powers(2 * power_index - 1);
  S mu_pow(1);
  const S inv_alpha0 = S(S(1) / alpha0);

  for (int n = 1; n <= order; ++n) {
    powers.push(st.solutions[n - 1]);
    TrigPoly<S> R = lplde ? powers.top(n - 1) * mu : powers.top(n - 1);
    for (int j = 1; j <= n - 1; ++j)
      R += st.solutions[n - j].derivative(2) * st.alphas[j];
    if (lplde) R -= st.solutions[n - 1] * lambda_sq;

    check_no_sine_resonance(R);
    const S alpha_n = R.cos_coeff(1);
    TrigPoly<S> forcing = R.without_fundamental() * S(-inv_alpha0);

    TrigPoly<S> Xn = invert_unit_oscillator(forcing);
    Xn += TrigPoly<S>::cosine(1, S(-Xn.value_at_zero()));

    st.solutions.push_back(std::move(Xn));
    st.alphas.push_back(alpha_n);
    mu_pow = S(mu_pow * mu);
    st.order_weights.push_back(lplde ? S(1) : mu_pow);
  }
  return st;
}

void validate_order(int order);

}  // namespace detail

template <class S>
FrequencyResult summarize_frequency(const MethodOrderState<S>& st,
                                    double lambda_used) {
  FrequencyResult r;
  r.method = st.method;
  r.lambda_used = lambda_used;
  S acc(0);
  for (size_t n = 0; n < st.alphas.size(); ++n) {
    acc += S(st.alphas[n] * st.order_weights[n]);
    r.omega_sq_partials.push_back(ScalarTraits<S>::to_double(acc));
  }
  const double w = r.omega_sq_partials.back();
  r.converged = std::isfinite(w) && w > 0;
  r.omega = r.converged ? std::sqrt(w)
                        : std::numeric_limits<double>::quiet_NaN();
  if (!r.converged) r.failure_reason = "omega^2 partial sum is not positive";
  return r;
}

/// Lindstedt-Poincare recursion for x'' + x = -mu x^(2N-1).
/// The alphas are pure numbers (mu enters only the frequency sums), so a
/// rational-mode run reproduces the series coefficients exactly.
template <class S>
std::pair<MethodOrderState<S>, FrequencyResult>
lpt_run(int power_index, const S& mu, int order) {
  validate(OscillatorSpec{power_index, ScalarTraits<S>::to_double(mu)});
  detail::validate_order(order);
  auto st = detail::delta_recursion<S>(Method::lpt, power_index, mu, order, S(0));
  auto res = summarize_frequency(st, std::numeric_limits<double>::quiet_NaN());
  return {std::move(st), std::move(res)};
}

std::pair<MethodOrderState<double>, FrequencyResult>
lpt_run(const OscillatorSpec& spec, int order);

/// Linear-delta-expansion variant; lambda_sq may be negative (mu < 0
/// branch), the recursion only ever sees lambda^2.
template <class S>
std::pair<MethodOrderState<S>, FrequencyResult>
lplde_run_lambda_sq(int power_index, const S& mu, int order, const S& lambda_sq) {
  validate(OscillatorSpec{power_index, ScalarTraits<S>::to_double(mu)});
  detail::validate_order(order);
  auto st = detail::delta_recursion<S>(Method::lplde, power_index, mu, order,
                                       lambda_sq);
  auto res = summarize_frequency(
      st, encode_lambda(ScalarTraits<S>::to_double(lambda_sq)));
  return {std::move(st), std::move(res)};
}

std::pair<MethodOrderState<double>, FrequencyResult>
lplde_run(const OscillatorSpec& spec, int order, double lambda);

/// Self-consistent alternative recursion: the fundamental is cos(Omega t)
/// and each order inverts against Omega^2, so the truncated frequency
/// relation Omega^2 = 1 + sum alpha_n(Omega) mu^n is solved by damped
/// fixed-point iteration with a bisection fallback.  Floating mode only.
std::pair<MethodOrderState<double>, FrequencyResult>
alpt_run(const OscillatorSpec& spec, int order,
         const SelfConsistentConfig& cfg = {});

/// Stationary lambda^2 of the order-N lplde frequency approximant
/// Omega_(order)(lambda).  Scans in s = lambda^2 (Omega depends on lambda
/// only through lambda^2).  Throws std::runtime_error when no stationary
/// point is found.
double pms_lambda_sq(const OscillatorSpec& spec, int order);

/// sqrt of pms_lambda_sq; requires the stationary lambda^2 >= 0
/// (always the case for mu >= 0).
double pms_lambda(const OscillatorSpec& spec, int order);

/// Max ODE residual |Omega^2 x'' + x + mu x^(2N-1)| of the reconstructed
/// trajectory over a uniform 512-point phase grid.
double residual_norm(const OscillatorSpec& spec,
                     const MethodOrderState<double>& st, double omega);

}  // namespace perturb
