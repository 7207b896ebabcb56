#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "perturb/conservative.hpp"
#include "perturb/oracle.hpp"
#include "perturb/sweep.hpp"
#include "perturb/vdp.hpp"

namespace {

using namespace perturb;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

Method parse_method(const std::string& m) {
  if (m == "lpt") return Method::lpt;
  if (m == "lplde") return Method::lplde;
  if (m == "alpt") return Method::alpt;
  throw CLI::ValidationError("--method", "expected lpt|lplde|alpt");
}

std::vector<Method> parse_methods(const std::vector<std::string>& ms) {
  std::vector<Method> out;
  for (const auto& m : ms) out.push_back(parse_method(m));
  return out;
}

/// Exact rational from a decimal string like "-0.125" or "3/4".
Rational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    return Rational(boost::multiprecision::cpp_int(text.substr(0, slash)),
                    boost::multiprecision::cpp_int(text.substr(slash + 1)));
  }
  std::string digits = text;
  bool negative = false;
  if (!digits.empty() && (digits[0] == '+' || digits[0] == '-')) {
    negative = digits[0] == '-';
    digits.erase(0, 1);
  }
  const auto dot = digits.find('.');
  long long scale_digits = 0;
  if (dot != std::string::npos) {
    scale_digits = static_cast<long long>(digits.size() - dot - 1);
    digits.erase(dot, 1);
  }
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
    throw CLI::ValidationError("rational", "cannot parse '" + text + "'");
  boost::multiprecision::cpp_int num(digits);
  boost::multiprecision::cpp_int den(1);
  for (long long i = 0; i < scale_digits; ++i) den *= 10;
  Rational r(num, den);
  return negative ? Rational(-r) : r;
}

std::string join_invocation(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file " + out_path);
  f << text;
}

struct CommonFlags {
  std::string system = "duffing";
  double mu = 1.0;
  std::string mu_text = "1";
  std::vector<std::string> methods;
  int order = 20;
  std::string arith = "float";
  std::optional<double> lambda;
  std::optional<std::string> lambda_sq_text;
  bool lambda_scan = false;
  double tol = 1e-9;
  std::string out;
};

LambdaPolicy lambda_policy(const CommonFlags& f) {
  LambdaPolicy p;
  if (f.lambda_sq_text)
    p.fixed_lambda_sq =
        ScalarTraits<Rational>::to_double(parse_rational(*f.lambda_sq_text));
  else if (f.lambda)
    p.fixed_lambda_sq = (*f.lambda) * (*f.lambda);
  p.vdp_scan = f.lambda_scan;
  return p;
}

int cmd_freq(const CommonFlags& f) {
  const System sys = parse_system(f.system);
  if (f.methods.size() != 1)
    throw CLI::ValidationError("--method", "freq needs exactly one method");
  const Method method = parse_methods(f.methods)[0];
  const bool rational = f.arith == "rational";
  if (rational && method == Method::alpt)
    throw CLI::ValidationError(
        "--arith", "alpt is self-consistent in Omega and runs in float only");
  if (rational && sys == System::vdp)
    throw CLI::ValidationError("--arith", "vdp engines run in float only");

  const double oracle = oracle_omega(sys, f.mu, f.tol);
  std::printf("system=%s mu=%s method=%s order=%d arith=%s\n",
              system_name(sys), format_double(f.mu).c_str(),
              method_name(method), f.order, rational ? "rational" : "float");

  double omega = 0.0;
  bool converged = false;
  std::string failure;
  if (sys == System::vdp) {
    VdpResult res;
    if (method == Method::lplde) {
      const double s = resolve_lambda_sq(sys, f.mu, f.order, lambda_policy(f));
      res = vdp_lplde_run_lambda_sq(f.mu, f.order, s).second;
    } else if (method == Method::alpt) {
      res = vdp_alpt_run(f.mu, f.order).second;
    } else {
      throw CLI::ValidationError("--method", "vdp supports lplde|alpt");
    }
    if (res.coupling_warning)
      std::fprintf(stderr,
                   "warning: vdp alpt is untrustworthy for mu > 2 "
                   "(wrong coupling dependence)\n");
    omega = res.omega;
    converged = res.converged;
    failure = res.failure_reason;
    std::printf("omega= %s\nperiod= %s\namplitude= %s\nlambda_used= %s\n",
                format_double(res.omega).c_str(),
                format_double(res.period).c_str(),
                format_double(res.amplitude).c_str(),
                format_double(res.lambda_used).c_str());
  } else {
    FrequencyResult res;
    std::string exact_note;
    if (method == Method::alpt) {
      res = alpt_run(OscillatorSpec{system_power_index(sys), f.mu}, f.order)
                .second;
    } else if (method == Method::lpt) {
      if (rational) {
        auto [st, r] = lpt_run<Rational>(system_power_index(sys),
                                         parse_rational(f.mu_text), f.order);
        res = r;
        exact_note = "alphas_exact=";
        for (size_t n = 0; n < st.alphas.size(); ++n) {
          if (n) exact_note += ' ';
          exact_note += st.alphas[n].str();
        }
        exact_note += "\nomega_sq_exact= " + omega_sq_sum(st).str();
      } else {
        res = lpt_run(OscillatorSpec{system_power_index(sys), f.mu}, f.order)
                  .second;
      }
    } else {  // lplde
      const LambdaPolicy pol = lambda_policy(f);
      if (rational) {
        const Rational mu_q = parse_rational(f.mu_text);
        Rational s_q;
        if (f.lambda_sq_text)
          s_q = parse_rational(*f.lambda_sq_text);
        else if (f.lambda)
          s_q = Rational(*f.lambda) * Rational(*f.lambda);
        else
          s_q = Rational(resolve_lambda_sq(sys, f.mu, f.order, pol));
        auto [st, r] = lplde_run_lambda_sq<Rational>(system_power_index(sys),
                                                     mu_q, f.order, s_q);
        res = r;
        exact_note = "omega_sq_exact= " + omega_sq_sum(st).str();
      } else {
        const double s = resolve_lambda_sq(sys, f.mu, f.order, pol);
        res = lplde_run_lambda_sq<double>(system_power_index(sys), f.mu,
                                          f.order, s)
                  .second;
      }
    }
    omega = res.omega;
    converged = res.converged;
    failure = res.failure_reason;
    std::printf("omega= %s\nperiod= %s\n", format_double(res.omega).c_str(),
                format_double(2.0 * std::numbers::pi / res.omega).c_str());
    std::printf("omega_sq_partials=");
    for (double w : res.omega_sq_partials)
      std::printf(" %s", format_double(w).c_str());
    std::printf("\nlambda_used= %s\n", format_double(res.lambda_used).c_str());
    if (!exact_note.empty()) std::printf("%s\n", exact_note.c_str());
  }
  std::printf("omega_oracle= %s\ndelta= %s\nconverged=%d\n",
              format_double(oracle).c_str(),
              format_double(std::fabs(oracle - omega)).c_str(),
              converged ? 1 : 0);
  if (!converged) {
    std::fprintf(stderr, "numerical failure: %s\n", failure.c_str());
    return kExitNumerical;
  }
  return 0;
}

int cmd_sweep(const CommonFlags& f, const MuGrid& grid,
              const std::string& invocation) {
  SweepConfig cfg;
  cfg.system = parse_system(f.system);
  cfg.methods = parse_methods(f.methods);
  cfg.grid = grid;
  cfg.order = f.order;
  cfg.lambda = lambda_policy(f);
  cfg.tol = f.tol;
  const auto rows = run_sweep(cfg);
  write_output(sweep_csv(rows, invocation), f.out);
  return 0;
}

int cmd_order_scan(const CommonFlags& f, int max_order,
                   const std::string& invocation) {
  const System sys = parse_system(f.system);
  const auto rows = run_order_scan(sys, f.mu, parse_methods(f.methods),
                                   max_order, lambda_policy(f), f.tol);
  write_output(order_scan_csv(rows, invocation), f.out);
  return 0;
}

int cmd_oracle(const CommonFlags& f) {
  const System sys = parse_system(f.system);
  if (sys == System::vdp) {
    const OracleResult r = vdp_limit_cycle_period(f.mu, f.tol);
    if (f.mu >= 20.0)
      std::fprintf(stderr, "warning: stiff regime (mu >= 20); consider a "
                           "tighter --tol\n");
    std::printf("period= %s\nest_error= %s\nomega= %s\nevaluations= %ld\n",
                format_double(r.value).c_str(),
                format_double(r.est_error).c_str(),
                format_double(2.0 * std::numbers::pi / r.value).c_str(),
                r.evaluations);
    return 0;
  }
  const OscillatorSpec spec{system_power_index(sys), f.mu};
  const OracleResult q = exact_frequency_quadrature(spec);
  std::printf("omega_quadrature= %s (est_error %s, evaluations %ld)\n",
              format_double(q.value).c_str(),
              format_double(q.est_error).c_str(), q.evaluations);
  if (sys == System::duffing) {
    const OracleResult e = duffing_exact_elliptic(f.mu);
    std::printf("omega_elliptic= %s (est_error %s)\n",
                format_double(e.value).c_str(),
                format_double(e.est_error).c_str());
    std::printf("discrepancy= %s\n",
                format_double(std::fabs(q.value - e.value)).c_str());
  }
  return 0;
}

void add_common(CLI::App* cmd, CommonFlags& f, bool with_mu) {
  cmd->add_option("--system", f.system, "duffing|sextic|octic|vdp")
      ->capture_default_str();
  if (with_mu)
    cmd->add_option("--mu", f.mu_text, "coupling strength")
        ->capture_default_str();
  cmd->add_option("--order", f.order, "expansion order (<= 24)")
      ->capture_default_str();
  cmd->add_option("--lambda", f.lambda, "lplde variational parameter");
  cmd->add_option("--lambda-sq", f.lambda_sq_text,
                  "lplde lambda^2 (decimal or p/q; may be negative)");
  cmd->add_flag("--lambda-scan", f.lambda_scan,
                "vdp lplde: least-sensitivity lambda scan at the run order");
  cmd->add_option("--tol", f.tol, "oracle tolerance")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secular-term-free perturbation methods for nonlinear "
               "oscillators: lpt, lplde and alpt frequency approximants "
               "with numerical reference oracles"};
  app.require_subcommand(1);
  const std::string invocation = join_invocation(argc, argv);

  CommonFlags freq_f, sweep_f, scan_f, oracle_f;
  MuGrid grid;
  std::string grid_scale = "linear";
  int max_order = 20;

  auto* freq = app.add_subcommand("freq", "single frequency/period query");
  add_common(freq, freq_f, true);
  freq->add_option("--method", freq_f.methods, "lpt|lplde|alpt")->required();
  freq->add_option("--arith", freq_f.arith, "float|rational")
      ->check(CLI::IsMember({"float", "rational"}))
      ->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "mu sweep to CSV");
  add_common(sweep, sweep_f, false);
  sweep->add_option("--method", sweep_f.methods, "repeatable");
  sweep->add_option("--mu-min", grid.mu_min)->required();
  sweep->add_option("--mu-max", grid.mu_max)->required();
  sweep->add_option("--mu-count", grid.count)->required();
  sweep->add_option("--mu-scale", grid_scale, "linear|log")
      ->check(CLI::IsMember({"linear", "log"}))
      ->capture_default_str();
  sweep->add_option("--out", sweep_f.out, "output CSV path (default stdout)");

  auto* scan = app.add_subcommand("order-scan", "error vs order to CSV");
  add_common(scan, scan_f, true);
  scan->add_option("--method", scan_f.methods, "repeatable");
  scan->add_option("--max-order", max_order, "scan orders 1..max")
      ->capture_default_str();
  scan->add_option("--out", scan_f.out, "output CSV path (default stdout)");

  auto* orc = app.add_subcommand("oracle", "reference value query");
  orc->add_option("--system", oracle_f.system, "duffing|sextic|octic|vdp")
      ->capture_default_str();
  orc->add_option("--mu", oracle_f.mu_text)->capture_default_str();
  orc->add_option("--tol", oracle_f.tol)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    for (CommonFlags* f : {&freq_f, &sweep_f, &scan_f, &oracle_f})
      if (!f->mu_text.empty())
        f->mu = ScalarTraits<Rational>::to_double(parse_rational(f->mu_text));
    if (freq->parsed()) return cmd_freq(freq_f);
    if (sweep->parsed()) {
      grid.scale = grid_scale == "log" ? GridScale::log : GridScale::linear;
      return cmd_sweep(sweep_f, grid, invocation);
    }
    if (scan->parsed()) return cmd_order_scan(scan_f, max_order, invocation);
    if (orc->parsed()) return cmd_oracle(oracle_f);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitUsage;
}
