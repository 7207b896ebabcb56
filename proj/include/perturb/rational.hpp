#pragma once

#include <cmath>
#include <cstdint>

#include <boost/multiprecision/cpp_int.hpp>

namespace perturb {

/// Exact rational coefficient (arbitrary-precision integers).
using Rational = boost::multiprecision::cpp_rational;

/// What the trig-series algebra needs from a coefficient type.
///
/// Two modes are supported: exact rationals for symbolic-grade verification
/// of low-order series, and doubles for high-order sweeps.  In exact mode
/// pruning removes only true zeros; in floating mode coefficients below
/// prune_relative() times the largest magnitude are dropped after each
/// operation to stop roundoff dust from inflating the harmonic support.
template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static double ratio(long long num, long long den) {
    return static_cast<double>(num) / static_cast<double>(den);
  }
  static double to_double(double x) { return x; }
  static double abs(double x) { return std::fabs(x); }
  static constexpr double prune_relative() { return 1e-15; }
};

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static Rational ratio(long long num, long long den) {
    return Rational(num, den);
  }
  static double to_double(const Rational& x) {
    return x.template convert_to<double>();
  }
  static Rational abs(const Rational& x) { return x < 0 ? Rational(-x) : x; }
  static constexpr double prune_relative() { return 0.0; }
};

}  // namespace perturb
