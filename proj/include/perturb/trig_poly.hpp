#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "perturb/rational.hpp"

namespace perturb {

/// Finite trigonometric polynomial sum_k (c_k cos k*theta + s_k sin k*theta).
///
/// Sparse representation keyed by the non-negative harmonic index k; an
/// absent key is a zero coefficient.  k=0 lives only on the cosine side
/// (sin 0 is identically zero and never stored).  Values are immutable in
/// use: all operations return new polynomials, so sharing across threads
/// needs no synchronization.
template <class S>
class TrigPoly {
 public:
  using Terms = std::map<int, S>;

  TrigPoly() = default;

  static TrigPoly cosine(int k, S c) {
    TrigPoly p;
    p.accumulate_cos(k, c);
    p.prune();
    return p;
  }
  static TrigPoly sine(int k, S c) {
    TrigPoly p;
    p.accumulate_sin(k, c);
    p.prune();
    return p;
  }
  static TrigPoly constant(S c) { return cosine(0, std::move(c)); }

  const Terms& cos_terms() const { return cos_; }
  const Terms& sin_terms() const { return sin_; }

  S cos_coeff(int k) const {
    auto it = cos_.find(k);
    return it == cos_.end() ? S(0) : it->second;
  }
  S sin_coeff(int k) const {
    auto it = sin_.find(k);
    return it == sin_.end() ? S(0) : it->second;
  }

  bool is_zero() const { return cos_.empty() && sin_.empty(); }

  int max_harmonic() const {
    int m = 0;
    if (!cos_.empty()) m = cos_.rbegin()->first;
    if (!sin_.empty() && sin_.rbegin()->first > m) m = sin_.rbegin()->first;
    return m;
  }

  /// Value at theta=0: the sum of all cosine coefficients (exact in S).
  S value_at_zero() const {
    S v(0);
    for (const auto& [k, c] : cos_) v += c;
    return v;
  }

  /// d/dtheta at theta=0: sum of k * s_k (exact in S).
  S slope_at_zero() const {
    S v(0);
    for (const auto& [k, c] : sin_) v += S(k) * c;
    return v;
  }

  TrigPoly& operator+=(const TrigPoly& o) {
    for (const auto& [k, c] : o.cos_) accumulate_cos(k, c);
    for (const auto& [k, c] : o.sin_) accumulate_sin(k, c);
    prune();
    return *this;
  }
  TrigPoly& operator-=(const TrigPoly& o) {
    for (const auto& [k, c] : o.cos_) accumulate_cos(k, S(-c));
    for (const auto& [k, c] : o.sin_) accumulate_sin(k, S(-c));
    prune();
    return *this;
  }
  friend TrigPoly operator+(TrigPoly a, const TrigPoly& b) { return a += b; }
  friend TrigPoly operator-(TrigPoly a, const TrigPoly& b) { return a -= b; }
  TrigPoly operator-() const { return *this * S(-1); }

  TrigPoly operator*(const S& f) const {
    TrigPoly r;
    for (const auto& [k, c] : cos_) r.accumulate_cos(k, S(c * f));
    for (const auto& [k, c] : sin_) r.accumulate_sin(k, S(c * f));
    r.prune();
    return r;
  }

  /// Exact product via product-to-sum identities.
  TrigPoly operator*(const TrigPoly& o) const {
    TrigPoly r;
    const S half = ScalarTraits<S>::ratio(1, 2);
    for (const auto& [i, ci] : cos_) {
      for (const auto& [j, cj] : o.cos_) {
        // cos i cos j = 1/2 cos(i-j) + 1/2 cos(i+j)
        const S h = S(ci * cj) * half;
        r.accumulate_cos(std::abs(i - j), h);
        r.accumulate_cos(i + j, h);
      }
      for (const auto& [j, sj] : o.sin_) {
        // cos i sin j = 1/2 sin(i+j) + 1/2 sin(j-i)
        const S h = S(ci * sj) * half;
        r.accumulate_sin(i + j, h);
        r.accumulate_signed_sin(j - i, h);
      }
    }
    for (const auto& [i, si] : sin_) {
      for (const auto& [j, cj] : o.cos_) {
        // sin i cos j = 1/2 sin(i+j) + 1/2 sin(i-j)
        const S h = S(si * cj) * half;
        r.accumulate_sin(i + j, h);
        r.accumulate_signed_sin(i - j, h);
      }
      for (const auto& [j, sj] : o.sin_) {
        // sin i sin j = 1/2 cos(i-j) - 1/2 cos(i+j)
        const S h = S(si * sj) * half;
        r.accumulate_cos(std::abs(i - j), h);
        r.accumulate_cos(i + j, S(-h));
      }
    }
    r.prune();
    return r;
  }

  /// Term-wise derivative: d/dtheta cos k = -k sin k, d/dtheta sin k = k cos k.
  TrigPoly derivative(int times = 1) const {
    if (times < 1) throw std::invalid_argument("derivative: times must be >= 1");
    TrigPoly cur = *this;
    for (int t = 0; t < times; ++t) {
      TrigPoly next;
      for (const auto& [k, c] : cur.cos_)
        if (k != 0) next.accumulate_sin(k, S(S(-k) * c));
      for (const auto& [k, c] : cur.sin_)
        next.accumulate_cos(k, S(S(k) * c));
      next.prune();
      cur = std::move(next);
    }
    return cur;
  }

  /// Coefficients of cos theta and sin theta: the components whose
  /// particular solution under (d^2/dtheta^2 + 1) would be secular.
  std::pair<S, S> resonant_part() const {
    return {cos_coeff(1), sin_coeff(1)};
  }

  /// Copy with the fundamental (k=1) removed.  Engines call this after
  /// choosing the expansion coefficients that cancel it, so the removal is
  /// exact by construction rather than left as roundoff dust.
  TrigPoly without_fundamental() const {
    TrigPoly r = *this;
    r.cos_.erase(1);
    r.sin_.erase(1);
    return r;
  }

  double eval(double theta) const {
    double v = 0;
    for (const auto& [k, c] : cos_)
      v += ScalarTraits<S>::to_double(c) * std::cos(k * theta);
    for (const auto& [k, c] : sin_)
      v += ScalarTraits<S>::to_double(c) * std::sin(k * theta);
    return v;
  }

  double max_abs_coeff() const {
    double m = 0;
    for (const auto& [k, c] : cos_)
      m = std::max(m, std::fabs(ScalarTraits<S>::to_double(c)));
    for (const auto& [k, c] : sin_)
      m = std::max(m, std::fabs(ScalarTraits<S>::to_double(c)));
    return m;
  }

 private:
  void accumulate_cos(int k, S c) {
    if (k < 0) throw std::invalid_argument("cos harmonic index must be >= 0");
    auto [it, fresh] = cos_.try_emplace(k, c);
    if (!fresh) it->second += c;
  }
  void accumulate_sin(int k, S c) {
    if (k < 1) throw std::invalid_argument("sin harmonic index must be >= 1");
    auto [it, fresh] = sin_.try_emplace(k, c);
    if (!fresh) it->second += c;
  }
  // sin(-k) = -sin(k); sin(0) vanishes.
  void accumulate_signed_sin(int k, S c) {
    if (k > 0)
      accumulate_sin(k, std::move(c));
    else if (k < 0)
      accumulate_sin(-k, S(-c));
  }

  void prune() {
    if constexpr (ScalarTraits<S>::exact) {
      std::erase_if(cos_, [](const auto& kv) { return kv.second == 0; });
      std::erase_if(sin_, [](const auto& kv) { return kv.second == 0; });
    } else {
      const double floor = ScalarTraits<S>::prune_relative() * max_abs_coeff();
      std::erase_if(cos_, [floor](const auto& kv) {
        return std::fabs(kv.second) <= floor;
      });
      std::erase_if(sin_, [floor](const auto& kv) {
        return std::fabs(kv.second) <= floor;
      });
    }
  }

  Terms cos_, sin_;
};

/// Particular solution P of P'' + P = forcing, valid only when the forcing
/// carries no fundamental: cos/sin k maps to cos/sin k / (1 - k^2).  No
/// homogeneous part is added; the caller fixes initial conditions.
/// Throws if a fundamental component is present (an unremoved secular term
/// is a logic error in the calling engine).
template <class S>
TrigPoly<S> invert_unit_oscillator(const TrigPoly<S>& forcing) {
  const auto [c1, s1] = forcing.resonant_part();
  bool resonant;
  if constexpr (ScalarTraits<S>::exact) {
    resonant = (c1 != 0 || s1 != 0);
  } else {
    const double scale = 1.0 + forcing.max_abs_coeff();
    resonant = std::fabs(ScalarTraits<S>::to_double(c1)) > 1e-12 * scale ||
               std::fabs(ScalarTraits<S>::to_double(s1)) > 1e-12 * scale;
  }
  if (resonant)
    throw std::invalid_argument(
        "invert_unit_oscillator: forcing has an unremoved resonant term");

  TrigPoly<S> p;
  for (const auto& [k, c] : forcing.cos_terms()) {
    if (k == 1) continue;
    p += TrigPoly<S>::cosine(k, S(c / S(1 - k * k)));
  }
  for (const auto& [k, c] : forcing.sin_terms()) {
    if (k == 1) continue;
    p += TrigPoly<S>::sine(k, S(c / S(1 - k * k)));
  }
  return p;
}

}  // namespace perturb
