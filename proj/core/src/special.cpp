#include "zlpf/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zlpf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double logaddexp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

double log1mexp(double a) {
  // ln(1 - e^{-a}); the 0.693 split keeps both branches well conditioned.
  if (!(a > 0)) return -kInf;
  if (a < M_LN2) return std::log(-std::expm1(-a));
  return std::log1p(-std::exp(-a));
}

double logexpm1(double a) {
  if (!(a > 0)) return -kInf;
  if (a > 36.8) return a;  // e^{-a} below double epsilon
  if (a < 1e-3) return std::log(std::expm1(a));
  return a + log1mexp(a);
}

double softplus(double x) {
  if (x > 36.8) return x;
  if (x < -745.0) return 0.0;
  return std::log1p(std::exp(x));
}

double logit(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return std::log(p) - std::log1p(-p);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

// Lentz continued fraction for the incomplete beta; converges for
// x < (a+1)/(a+b+2).
double beta_cf(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw NumericalError("reg_inc_beta: continued fraction did not converge");
}

double log_beta_small_side(double x, double a, double b) {
  // ln I_x(a,b) assuming x is on the continued-fraction side of the pivot.
  const double log_front = a * std::log(x) + b * std::log1p(-x) - std::log(a) -
                           (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  return log_front + std::log(beta_cf(x, a, b));
}

}  // namespace

double log_reg_inc_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw InputError("reg_inc_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw InputError("reg_inc_beta: x must lie in [0, 1]");
  if (x == 0.0) return -kInf;
  if (x == 1.0) return 0.0;
  if (x < (a + 1.0) / (a + b + 2.0)) return log_beta_small_side(x, a, b);
  // Complement side: I_x(a,b) = 1 - I_{1-x}(b,a), and the complement is the
  // small quantity, so the subtraction is benign.
  const double log_comp = log_beta_small_side(1.0 - x, b, a);
  return std::log1p(-std::exp(log_comp));
}

double reg_inc_beta(double x, double a, double b) { return std::exp(log_reg_inc_beta(x, a, b)); }

namespace {

// Ascending Kummer series with linear-space terms and periodic rescaling;
// the log offset absorbs growth, so arguments through x ~ 1e6 are fine.
double log_1f1_series(double a, double b, double x) {
  double term = 1.0;
  double sum = 1.0;
  double offset = 0.0;
  const long max_terms = 2'000'000;
  for (long k = 0; k < max_terms; ++k) {
    term *= (a + k) * x / ((b + k) * (k + 1.0));
    sum += term;
    if (sum > 1e250) {
      sum *= 1e-250;
      term *= 1e-250;
      offset += 250.0 * M_LN10;
    }
    if (term < sum * 1e-17 && k > x - b) return offset + std::log(sum);
  }
  throw NumericalError("log_kummer_1f1: series did not converge within the term cap");
}

// Large-x expansion: 1F1(a;b;x) ~ Gamma(b)/Gamma(a) e^x x^{a-b} sum_k
// (b-a)_k (1-a)_k / (k! x^k). Truncated at the smallest term; *achieved
// reports the relative size of that term, the intrinsic accuracy limit of
// the divergent expansion.
double log_1f1_asymptotic(double a, double b, double x, double* achieved) {
  double term = 1.0;
  double sum = 1.0;
  double smallest = 1.0;
  for (int k = 0; k < 600; ++k) {
    term *= (b - a + k) * (1.0 - a + k) / ((k + 1.0) * x);
    const double mag = std::abs(term);
    if (mag >= smallest) break;  // asymptotic tail started growing
    smallest = mag;
    sum += term;
    if (mag < std::abs(sum) * 1e-17) break;
  }
  if (!(sum > 0.0)) {
    *achieved = 1.0;
    return 0.0;
  }
  *achieved = smallest / std::abs(sum);
  return std::lgamma(b) - std::lgamma(a) + x + (a - b) * std::log(x) + std::log(sum);
}

}  // namespace

double log_kummer_1f1(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InputError("log_kummer_1f1: a and b must be positive");
  if (!(x >= 0.0)) throw InputError("log_kummer_1f1: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (a == b) return x;  // 1F1(a;a;x) = e^x
  if (x >= 40.0 * b) {
    // The expansion reaches full precision whenever b >= a (the range the
    // flow kernels use); for b < a its smallest term may still be large, in
    // which case the convergent series takes over.
    double achieved = 1.0;
    const double value = log_1f1_asymptotic(a, b, x, &achieved);
    if (achieved < 1e-14) return value;
  }
  return log_1f1_series(a, b, x);
}

double log_bessel_i(double nu, double kappa) {
  if (!(nu >= 0.0)) throw InputError("log_bessel_i: order must be nonnegative");
  if (!(kappa > 0.0)) throw InputError("log_bessel_i: argument must be positive");
  return nu * std::log(0.5 * kappa) - std::lgamma(nu + 1.0) - kappa +
         log_kummer_1f1(nu + 0.5, 2.0 * nu + 1.0, 2.0 * kappa);
}

namespace {

double xi_to_x(double xi) { return std::tanh(0.5 * xi); }

}  // namespace

double solve_logit_newton_xi(const std::function<LogitEval(double)>& eval_at_xi,
                             double target_logit, const LogitNewtonConfig& cfg,
                             double initial_xi) {
  if (cfg.max_iterations < 1 || !(cfg.tolerance > 0.0))
    throw InputError("invert_monotone_logit: bad config");
  if (std::isnan(target_logit)) throw InputError("invert_monotone_logit: target is NaN");
  if (target_logit == kInf) return kInf;
  if (target_logit == -kInf) return -kInf;

  // Expand a bracket [lo, hi] with G(lo) < 0 < G(hi) around the start; at
  // xi = +-40 the variable saturates to +-1 and the logit to +-inf, so a
  // bracket always exists.
  double lo = initial_xi, hi = initial_xi;
  double g0 = eval_at_xi(initial_xi).logit_value - target_logit;
  if (g0 == 0.0) return initial_xi;
  double step = 1.0;
  if (g0 > 0.0) {
    for (int i = 0; i < 80 && g0 > 0.0; ++i) {
      hi = lo;
      lo -= step;
      step *= 2.0;
      g0 = eval_at_xi(lo).logit_value - target_logit;
    }
    if (g0 > 0.0) return -kInf;  // target below the representable left tail
  } else {
    for (int i = 0; i < 80 && g0 < 0.0; ++i) {
      lo = hi;
      hi += step;
      step *= 2.0;
      g0 = eval_at_xi(hi).logit_value - target_logit;
    }
    if (g0 < 0.0) return kInf;
  }

  double xi = 0.5 * (lo + hi);
  double prev_abs_g = kInf;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const LogitEval e = eval_at_xi(xi);
    const double g = e.logit_value - target_logit;
    if (std::abs(g) < cfg.tolerance) return xi;

    if (g > 0.0)
      hi = xi;
    else
      lo = xi;
    if (hi - lo <= 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(xi)))
      return 0.5 * (lo + hi);  // bracket collapsed: converged in the variable

    // A residual that stopped shrinking means Newton is rattling on the
    // evaluation noise floor; force bisections so the bracket keeps halving.
    const bool stalled = !(std::abs(g) < 0.5 * prev_abs_g);
    prev_abs_g = std::abs(g);

    const double x = xi_to_x(xi);
    const double dg_dxi = e.dlogit_dx * 0.5 * (1.0 - x * x);
    double next;
    if (!stalled && std::isfinite(g) && std::isfinite(dg_dxi) && dg_dxi > 0.0) {
      next = xi - g / dg_dxi;
      if (!(next > lo && next < hi)) {
        if (!cfg.bisection_fallback)
          throw NumericalError("invert_monotone_logit: Newton step left the bracket");
        next = 0.5 * (lo + hi);
      }
    } else {
      if (!cfg.bisection_fallback && !stalled)
        throw NumericalError("invert_monotone_logit: non-finite Newton data");
      next = 0.5 * (lo + hi);
    }
    xi = next;
  }
  throw NumericalError("invert_monotone_logit: iteration cap exceeded");
}

double invert_monotone_logit_xi(const std::function<LogitEval(double)>& f, double target_logit,
                                const LogitNewtonConfig& cfg, double initial_xi) {
  return solve_logit_newton_xi([&f](double xi) { return f(xi_to_x(xi)); }, target_logit, cfg,
                               initial_xi);
}

double invert_monotone_logit(const std::function<LogitEval(double)>& f, double target_logit,
                             const LogitNewtonConfig& cfg, double initial_xi) {
  const double xi = invert_monotone_logit_xi(f, target_logit, cfg, initial_xi);
  if (xi == kInf) return 1.0;
  if (xi == -kInf) return -1.0;
  return xi_to_x(xi);
}

double invert_monotone_logit(const std::function<double(double)>& f, double target,
                             const LogitNewtonConfig& cfg) {
  if (!(target > 0.0 && target < 1.0))
    throw InputError("invert_monotone_logit: target must lie in (0, 1)");
  const auto eval = [&f](double x) {
    const double v = logit(f(x));
    // Central difference of the logit in xi, mapped back to an x derivative.
    const double xi = 2.0 * std::atanh(std::clamp(x, -1.0 + 1e-15, 1.0 - 1e-15));
    const double dxi = 1e-6 * (1.0 + std::abs(xi));
    const double up = logit(f(std::tanh(0.5 * (xi + dxi))));
    const double dn = logit(f(std::tanh(0.5 * (xi - dxi))));
    double dlogit_dxi = (up - dn) / (2.0 * dxi);
    const double dx_dxi = 0.5 * (1.0 - x * x);
    return LogitEval{v, dx_dxi > 0.0 ? dlogit_dxi / dx_dxi : kInf};
  };
  return invert_monotone_logit(eval, logit(target), cfg);
}

}  // namespace zlpf
