#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "perturb/trig_poly.hpp"

using perturb::Rational;
using perturb::TrigPoly;
using perturb::invert_unit_oscillator;

namespace {

using QPoly = TrigPoly<Rational>;
using DPoly = TrigPoly<double>;

Rational q(long long n, long long d = 1) { return Rational(n, d); }

QPoly random_qpoly(std::mt19937& rng, int max_harmonic = 5, int terms = 4) {
  std::uniform_int_distribution<int> harm(0, max_harmonic);
  std::uniform_int_distribution<long long> num(-8, 8);
  std::uniform_int_distribution<long long> den(1, 8);
  QPoly p;
  for (int i = 0; i < terms; ++i) {
    const int k = harm(rng);
    const Rational c = q(num(rng), den(rng));
    if (k >= 1 && (num(rng) & 1))
      p += QPoly::sine(k, c);
    else
      p += QPoly::cosine(k, c);
  }
  return p;
}

DPoly random_dpoly(std::mt19937& rng, int max_harmonic = 5, int terms = 4) {
  std::uniform_int_distribution<int> harm(0, max_harmonic);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  DPoly p;
  for (int i = 0; i < terms; ++i) {
    const int k = harm(rng);
    if (k >= 1 && (harm(rng) & 1))
      p += DPoly::sine(k, coef(rng));
    else
      p += DPoly::cosine(k, coef(rng));
  }
  return p;
}

bool q_equal(const QPoly& a, const QPoly& b) {
  return (a - b).is_zero();
}

}  // namespace

TEST_CASE("addition is coefficient-wise") {
  const QPoly c1 = QPoly::cosine(1, q(1));
  CHECK(q_equal(c1 + c1, QPoly::cosine(1, q(2))));
  CHECK((c1 + QPoly::cosine(1, q(-1))).is_zero());
  // 3/4 cos + 1/4 cos3 is the expansion of cos^3
  const QPoly lhs = QPoly::cosine(1, q(3, 4)) + QPoly::cosine(3, q(1, 4));
  CHECK(q_equal(lhs, c1 * c1 * c1));
}

TEST_CASE("product-to-sum multiplication") {
  const QPoly a = QPoly::cosine(1, q(1)) * QPoly::cosine(3, q(1));
  CHECK(a.cos_coeff(2) == q(1, 2));
  CHECK(a.cos_coeff(4) == q(1, 2));
  CHECK(a.cos_terms().size() == 2);
  CHECK(a.sin_terms().empty());

  const QPoly c1 = QPoly::cosine(1, q(1));
  const QPoly cube = c1 * c1 * c1;
  CHECK(cube.cos_coeff(1) == q(3, 4));
  CHECK(cube.cos_coeff(3) == q(1, 4));

  const QPoly sc = QPoly::sine(1, q(1)) * c1;
  CHECK(sc.sin_coeff(2) == q(1, 2));
  CHECK(sc.cos_terms().empty());
  CHECK(sc.sin_terms().size() == 1);
}

TEST_CASE("term-wise differentiation") {
  CHECK(q_equal(QPoly::cosine(3, q(1)).derivative(2), QPoly::cosine(3, q(-9))));
  CHECK(q_equal(QPoly::sine(2, q(1)).derivative(), QPoly::cosine(2, q(2))));
  const QPoly c1 = QPoly::cosine(1, q(1));
  CHECK((c1.derivative(2) + c1).is_zero());
}

TEST_CASE("resonant part reads the fundamental") {
  const QPoly a = QPoly::cosine(1, q(3, 4)) + QPoly::cosine(3, q(1, 4));
  auto [c, s] = a.resonant_part();
  CHECK(c == q(3, 4));
  CHECK(s == 0);
  auto [c2, s2] = QPoly::sine(1, q(5)).resonant_part();
  CHECK(c2 == 0);
  CHECK(s2 == q(5));
  auto [c3, s3] = QPoly::cosine(2, q(1)).resonant_part();
  CHECK(c3 == 0);
  CHECK(s3 == 0);
}

TEST_CASE("unit-oscillator inversion") {
  const QPoly p = invert_unit_oscillator(QPoly::cosine(3, q(1, 4)));
  CHECK(p.cos_coeff(3) == q(-1, 32));
  CHECK(q_equal(invert_unit_oscillator(QPoly::constant(q(1))),
                QPoly::constant(q(1))));
  CHECK(invert_unit_oscillator(QPoly::sine(5, q(1))).sin_coeff(5) == q(-1, 24));
  CHECK_THROWS_AS((void)invert_unit_oscillator(QPoly::cosine(1, q(1))),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)invert_unit_oscillator(DPoly::sine(1, 0.5)),
                  std::invalid_argument);
}

TEST_CASE("evaluation") {
  CHECK(DPoly::cosine(1, 1.0).eval(0.0) == doctest::Approx(1.0));
  const DPoly a = DPoly::cosine(1, 0.75) + DPoly::cosine(3, 0.25);
  CHECK(a.eval(0.0) == doctest::Approx(1.0));
  CHECK(DPoly::sine(2, 1.0).eval(std::numbers::pi / 4) == doctest::Approx(1.0));
}

TEST_CASE("representation invariants") {
  // sin k=0 is never stored; k=0 lives on the cosine side only
  CHECK_THROWS_AS(QPoly::sine(0, q(1)), std::invalid_argument);
  const QPoly sc = QPoly::sine(2, q(1)) * QPoly::sine(2, q(1));
  CHECK(sc.sin_terms().empty());  // sin^2 = 1/2 - 1/2 cos4
  CHECK(sc.cos_coeff(0) == q(1, 2));
  // evaluation at 0 equals the cosine-coefficient sum
  std::mt19937 rng(7);
  for (int i = 0; i < 20; ++i) {
    const DPoly p = random_dpoly(rng);
    CHECK(p.eval(0.0) == doctest::Approx(p.value_at_zero()).epsilon(1e-12));
  }
}

TEST_CASE("floating prune drops roundoff dust, keeps small lone terms") {
  DPoly p = DPoly::cosine(2, 1.0) + DPoly::cosine(5, 1e-17);
  CHECK(p.cos_terms().size() == 1);  // below 1e-15 * max
  DPoly lone = DPoly::cosine(5, 1e-17);
  CHECK(lone.cos_terms().size() == 1);  // relative threshold keeps it
  const DPoly canceled = DPoly::cosine(1, 1.0) + DPoly::cosine(1, -1.0);
  CHECK(canceled.is_zero());
}

TEST_CASE("property: multiplication commutes and associates (exact)") {
  std::mt19937 rng(42);
  for (int i = 0; i < 40; ++i) {
    const QPoly a = random_qpoly(rng), b = random_qpoly(rng),
                c = random_qpoly(rng);
    CHECK(q_equal(a * b, b * a));
    CHECK(q_equal((a * b) * c, a * (b * c)));
  }
}

TEST_CASE("property: multiplication commutes and associates (float)") {
  std::mt19937 rng(43);
  for (int i = 0; i < 40; ++i) {
    const DPoly a = random_dpoly(rng), b = random_dpoly(rng),
                c = random_dpoly(rng);
    const DPoly ab = a * b, ba = b * a;
    const DPoly abc = (a * b) * c, acb = a * (b * c);
    const double scale = 1.0 + abc.max_abs_coeff();
    for (const auto& [k, v] : ab.cos_terms())
      CHECK(std::fabs(v - ba.cos_coeff(k)) < 1e-12 * scale);
    for (const auto& [k, v] : abc.cos_terms())
      CHECK(std::fabs(v - acb.cos_coeff(k)) < 1e-12 * scale);
    for (const auto& [k, v] : abc.sin_terms())
      CHECK(std::fabs(v - acb.sin_coeff(k)) < 1e-12 * scale);
  }
}

TEST_CASE("property: inversion is exact against the defining equation") {
  std::mt19937 rng(44);
  for (int i = 0; i < 40; ++i) {
    const QPoly f = random_qpoly(rng).without_fundamental();
    const QPoly p = invert_unit_oscillator(f);
    CHECK(q_equal(p.derivative(2) + p, f));
  }
}

TEST_CASE("property: evaluation is a ring homomorphism") {
  std::mt19937 rng(45);
  std::uniform_real_distribution<double> th(0.0, 2 * std::numbers::pi);
  for (int i = 0; i < 40; ++i) {
    const DPoly a = random_dpoly(rng), b = random_dpoly(rng);
    const double theta = th(rng);
    const double lhs = (a * b).eval(theta);
    const double rhs = a.eval(theta) * b.eval(theta);
    CHECK(std::fabs(lhs - rhs) <= 1e-12 * (1.0 + std::fabs(rhs)));
    CHECK(std::fabs((a + b).eval(theta) - (a.eval(theta) + b.eval(theta))) <=
          1e-12 * (1.0 + std::fabs(a.eval(theta) + b.eval(theta))));
  }
}

TEST_CASE("property: pure fundamentals solve the unit oscillator") {
  std::mt19937 rng(46);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int i = 0; i < 20; ++i) {
    const DPoly f = DPoly::cosine(1, coef(rng)) + DPoly::sine(1, coef(rng));
    CHECK((f.derivative(2) + f).is_zero());
  }
}
