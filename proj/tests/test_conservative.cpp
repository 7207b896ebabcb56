#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "perturb/conservative.hpp"

using namespace perturb;

namespace {

Rational q(long long n, long long d = 1) { return Rational(n, d); }

// Frozen series coefficients, derived beforehand with an independent
// symbolic implementation of the recursion (exact arithmetic end to end).
const std::vector<Rational> kQuarticAlphas = {
    q(1),           q(3, 4),          q(-3, 128),
    q(9, 512),      q(-1779, 131072), q(5643, 524288),
    q(-146661, 16777216)};
const std::vector<Rational> kSexticAlphas = {q(1), q(5, 8), q(-65, 1536),
                                             q(1055, 36864)};
const std::vector<Rational> kOcticAlphas = {q(1), q(35, 64), q(-3465, 65536),
                                            q(1142925, 33554432)};

double lplde_third_order_closed_form(double mu) {
  return (69.0 * mu * mu + 192.0 * mu + 128.0) / (32.0 * (3.0 * mu + 4.0));
}

double alpt_third_order_closed_form(double mu) {
  return (std::sqrt(30.0 * mu * mu + 96.0 * mu + 64.0) + 2.0 * (3.0 * mu + 4.0)) /
         16.0;
}

}  // namespace

TEST_CASE("lpt exact series coefficients") {
  auto [st2, r2] = lpt_run<Rational>(2, q(1), 6);
  REQUIRE(st2.alphas.size() == kQuarticAlphas.size());
  for (size_t n = 0; n < kQuarticAlphas.size(); ++n)
    CHECK(st2.alphas[n] == kQuarticAlphas[n]);

  auto [st3, r3] = lpt_run<Rational>(3, q(1), 3);
  for (size_t n = 0; n < kSexticAlphas.size(); ++n)
    CHECK(st3.alphas[n] == kSexticAlphas[n]);

  auto [st4, r4] = lpt_run<Rational>(4, q(1), 3);
  for (size_t n = 0; n < kOcticAlphas.size(); ++n)
    CHECK(st4.alphas[n] == kOcticAlphas[n]);
}

TEST_CASE("lpt float mode matches the exact coefficients") {
  auto [stq, rq] = lpt_run<Rational>(2, q(1), 10);
  auto [std_, rd] = lpt_run(OscillatorSpec{2, 1.0}, 10);
  for (size_t n = 0; n < std_.alphas.size(); ++n) {
    const double exact = ScalarTraits<Rational>::to_double(stq.alphas[n]);
    CHECK(std_.alphas[n] == doctest::Approx(exact).epsilon(1e-13));
  }
}

TEST_CASE("lpt unperturbed oscillator") {
  auto [st, res] = lpt_run(OscillatorSpec{2, 0.0}, 8);
  CHECK(res.omega == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(res.converged);
}

TEST_CASE("initial conditions hold at every order (exact)") {
  for (int N : {2, 3, 4}) {
    auto [st, res] = lpt_run<Rational>(N, q(1), 5);
    for (size_t n = 0; n < st.solutions.size(); ++n) {
      CHECK(st.solutions[n].value_at_zero() == (n == 0 ? q(1) : q(0)));
      CHECK(st.solutions[n].slope_at_zero() == 0);
    }
  }
  auto [st, res] = lplde_run_lambda_sq<Rational>(2, q(1, 2), 5, q(2, 5));
  for (size_t n = 0; n < st.solutions.size(); ++n) {
    CHECK(st.solutions[n].value_at_zero() == (n == 0 ? q(1) : q(0)));
    CHECK(st.solutions[n].slope_at_zero() == 0);
  }
}

TEST_CASE("initial conditions hold in float mode") {
  auto [st, res] = lpt_run(OscillatorSpec{3, 2.5}, 8);
  for (size_t n = 0; n < st.solutions.size(); ++n) {
    const double expect = n == 0 ? 1.0 : 0.0;
    CHECK(std::fabs(st.solutions[n].value_at_zero() - expect) < 1e-14);
    CHECK(std::fabs(st.solutions[n].slope_at_zero()) < 1e-14);
  }
}

TEST_CASE("parity: odd cosine harmonics only, bounded by 2Nn+1") {
  for (int N : {2, 3, 4}) {
    auto [st, res] = lpt_run(OscillatorSpec{N, 1.7}, 6);
    for (size_t n = 0; n < st.solutions.size(); ++n) {
      const auto& X = st.solutions[n];
      CHECK(X.sin_terms().empty());
      for (const auto& [k, c] : X.cos_terms()) CHECK(k % 2 == 1);
      CHECK(X.max_harmonic() <= 2 * N * static_cast<int>(n) + 1);
    }
  }
}

TEST_CASE("lplde with lambda = 0 collapses to lpt order by order") {
  const Rational mu = q(7, 10);
  auto [lp, lp_res] = lpt_run<Rational>(2, mu, 6);
  auto [ld, ld_res] = lplde_run_lambda_sq<Rational>(2, mu, 6, q(0));
  Rational mu_pow(1);
  for (size_t n = 0; n < lp.alphas.size(); ++n) {
    CHECK(ld.alphas[n] == Rational(lp.alphas[n] * mu_pow));
    CHECK((ld.solutions[n] - lp.solutions[n] * mu_pow).is_zero());
    mu_pow *= mu;
  }
  CHECK(omega_sq_sum(ld) == omega_sq_sum(lp));
}

TEST_CASE("lplde third-order values are exact at the pms point") {
  auto [st, res] = lplde_run_lambda_sq<Rational>(2, q(1), 3, q(3, 4));
  CHECK(omega_sq_sum(st) == q(389, 224));
  const std::vector<Rational> expect = {q(7, 4), q(0), q(-3, 224), q(0)};
  for (size_t n = 0; n < expect.size(); ++n) CHECK(st.alphas[n] == expect[n]);

  auto [st100, res100] = lplde_run_lambda_sq<Rational>(2, q(100), 3, q(75));
  CHECK(omega_sq_sum(st100) == q(44333, 608));  // == 709328/9728
}

TEST_CASE("lplde third order reproduces the closed form over mu") {
  for (double mu : {0.5, 1.0, 10.0, 100.0}) {
    const double lam = std::sqrt(3.0 * mu) / 2.0;
    auto [st, res] = lplde_run(OscillatorSpec{2, mu}, 3, lam);
    const double expect = lplde_third_order_closed_form(mu);
    CHECK(std::fabs(res.omega_sq_partials.back() - expect) <= 1e-12 * expect);
    CHECK(res.lambda_used == doctest::Approx(lam));
  }
}

TEST_CASE("pms lambda") {
  // Duffing third order: analytic stationary point sqrt(3 mu)/2
  CHECK(pms_lambda(OscillatorSpec{2, 1.0}, 3) ==
        doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
  CHECK(pms_lambda(OscillatorSpec{2, 0.37}, 3) ==
        doctest::Approx(std::sqrt(3.0 * 0.37) / 2.0).epsilon(1e-12));
  // unperturbed problem is lambda-independent
  CHECK(pms_lambda(OscillatorSpec{2, 0.0}, 3) == 0.0);
  // sextic third order: located numerically; 211/312 is the exact root of
  // d(Omega^2)/ds from the symbolic third-order form
  const double s_star = pms_lambda_sq(OscillatorSpec{3, 1.0}, 3);
  CHECK(s_star == doctest::Approx(211.0 / 312.0).epsilon(1e-9));
  CHECK(pms_lambda(OscillatorSpec{3, 1.0}, 3) ==
        doctest::Approx(0.82236369769223841).epsilon(1e-9));
  // the returned point is genuinely stationary
  auto omega_of = [&](double s) {
    return lplde_run_lambda_sq<double>(3, 1.0, 3, s).second.omega;
  };
  const double h = 1e-4;
  CHECK(std::fabs(omega_of(s_star + h) - omega_of(s_star - h)) < 1e-9);
  // no stationary point exists at second order (monotone in lambda^2)
  CHECK_THROWS_AS(pms_lambda(OscillatorSpec{2, 1.0}, 2), std::runtime_error);
}

TEST_CASE("alpt third order matches its closed form across the mu range") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const double mu = -0.9 + (100.0 + 0.9) * u(rng);  // (-0.9, 100]
    auto [st, res] = alpt_run(OscillatorSpec{2, mu}, 3);
    REQUIRE(res.converged);
    const double expect = alpt_third_order_closed_form(mu);
    CHECK(std::fabs(res.omega * res.omega - expect) <= 1e-10 * expect);
  }
}

TEST_CASE("alpt duffing: orders 2 and 3 coincide (zero cubic coefficient)") {
  auto [st2, r2] = alpt_run(OscillatorSpec{2, 1.0}, 2);
  auto [st3, r3] = alpt_run(OscillatorSpec{2, 1.0}, 3);
  CHECK(r2.omega == doctest::Approx(r3.omega).epsilon(1e-12));
  CHECK(r3.omega == doctest::Approx(1.3177644125584983).epsilon(1e-12));
}

TEST_CASE("alpt unperturbed and sextic second-order cross-checks") {
  auto [st0, r0] = alpt_run(OscillatorSpec{2, 0.0}, 5);
  CHECK(r0.omega == doctest::Approx(1.0).epsilon(1e-15));

  // sextic order 2: the recursion gives alpha_1 = 5/8, alpha_2 = -65/(1536 W),
  // so W solves W^2 - (1 + 5 mu / 8) W + 65 mu^2 / 1536 = 0 (larger root)
  const double mu = 1.0;
  auto [st, res] = alpt_run(OscillatorSpec{3, mu}, 2);
  REQUIRE(res.converged);
  const double bq = 1.0 + 5.0 * mu / 8.0;
  const double expect =
      0.5 * (bq + std::sqrt(bq * bq - 4.0 * 65.0 * mu * mu / 1536.0));
  CHECK(res.omega * res.omega == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("alpt reports no real solution rather than inventing one") {
  // at third order the discriminant 30 mu^2 + 96 mu + 64 goes negative
  // below mu ~ -0.947
  auto [st, res] = alpt_run(OscillatorSpec{2, -0.97}, 3);
  CHECK_FALSE(res.converged);
  CHECK(std::isnan(res.omega));
  CHECK_FALSE(res.failure_reason.empty());
}

TEST_CASE("residual: zeroth order sees only the nonlinearity") {
  const OscillatorSpec spec{2, 0.1};
  auto [st, res] = lpt_run(spec, 0);
  CHECK(residual_norm(spec, st, res.omega) ==
        doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("residual vanishes when mu = 0") {
  const OscillatorSpec spec{2, 0.0};
  for (int order : {0, 3, 7}) {
    auto [st, res] = lpt_run(spec, order);
    CHECK(residual_norm(spec, st, res.omega) < 1e-14);
  }
}

TEST_CASE("residual decays one mu-power per order") {
  const OscillatorSpec spec{2, 0.1};
  std::vector<double> log_r;
  for (int order = 1; order <= 6; ++order) {
    auto [st, res] = lpt_run(spec, order);
    log_r.push_back(std::log(residual_norm(spec, st, res.omega)));
  }
  const int n = static_cast<int>(log_r.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += i + 1;
    sy += log_r[i];
    sxx += (i + 1.0) * (i + 1.0);
    sxy += (i + 1.0) * log_r[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(std::fabs(slope - std::log(0.1)) < 0.15 * std::fabs(std::log(0.1)));
}

TEST_CASE("domain validation") {
  CHECK_THROWS_AS(validate(OscillatorSpec{5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate(OscillatorSpec{2, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(lpt_run(OscillatorSpec{2, 1.0}, 25), std::invalid_argument);
  CHECK_THROWS_AS(lplde_run(OscillatorSpec{2, 1.0}, 3, -0.5),
                  std::invalid_argument);
}
