#pragma once

#include <limits>
#include <string>
#include <vector>

#include "perturb/trig_poly.hpp"

namespace perturb {

enum class Method { lpt, lplde, alpt };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::lpt: return "lpt";
    case Method::lplde: return "lplde";
    case Method::alpt: return "alpt";
  }
  return "?";
}

/// Highest expansion order any engine accepts.
inline constexpr int kMaxOrder = 24;

/// Conservative oscillator x'' + x = -mu x^(2N-1), x(0)=1, x'(0)=0.
/// power_index is N; N=2 is the Duffing oscillator.
struct OscillatorSpec {
  int power_index = 2;
  double mu = 0.0;
};

/// Throws std::invalid_argument unless N in {2,3,4} and mu > -1
/// (periodic motion with the fixed initial conditions requires mu > -1).
void validate(const OscillatorSpec& spec);

/// Per-order ledger of a conservative-engine run.
///
/// solutions[n] is the order-n trig polynomial in the phase variable
/// (dilated time tau for lpt/lplde, Omega*t for alpt); alphas[n] the
/// frequency-expansion coefficient; order_weights[n] the factor applied to
/// term n when reconstructing sums (mu^n for the mu-power expansions,
/// 1 for the delta expansion evaluated at delta=1).
template <class S>
struct MethodOrderState {
  Method method = Method::lpt;
  int power_index = 2;
  int order = 0;
  std::vector<TrigPoly<S>> solutions;
  std::vector<S> alphas;
  std::vector<S> order_weights;
};

template <class S>
S omega_sq_sum(const MethodOrderState<S>& st) {
  S acc(0);
  for (size_t n = 0; n < st.alphas.size(); ++n)
    acc += S(st.alphas[n] * st.order_weights[n]);
  return acc;
}

template <class S>
TrigPoly<S> reconstruct_trajectory(const MethodOrderState<S>& st) {
  TrigPoly<S> x;
  for (size_t n = 0; n < st.solutions.size(); ++n)
    x += st.solutions[n] * st.order_weights[n];
  return x;
}

MethodOrderState<double> to_double_state(const MethodOrderState<Rational>& st);

/// Final frequency approximant plus per-order partial sums of Omega^2.
struct FrequencyResult {
  Method method = Method::lpt;
  double omega = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> omega_sq_partials;
  bool converged = false;
  double lambda_used = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::string failure_reason;
};

/// Controls for the self-consistent frequency solve (alpt engines).
struct SelfConsistentConfig {
  double tol = 1e-13;          // on Omega, relative to 1+|Omega|
  int max_iterations = 200;    // fixed-point iterations before fallback
  double damping = 0.5;        // Omega <- Omega + damping*(Omega_new - Omega)
  double bracket_lo = 0.0;     // <= 0: automatic
  double bracket_hi = 0.0;     // <= 0: automatic
};

/// lambda encoded for reporting: sqrt(s) for s>=0, -sqrt(-s) for s<0
/// (negative lambda^2 arises for mu<0; the sign marks that branch).
inline double encode_lambda(double lambda_sq) {
  return lambda_sq >= 0 ? std::sqrt(lambda_sq) : -std::sqrt(-lambda_sq);
}

}  // namespace perturb
