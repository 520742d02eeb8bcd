#pragma once

#include <functional>

#include "zlpf/errors.hpp"

namespace zlpf {

// ln(e^a + e^b), safe against overflow; -inf arguments are absorbing.
double logaddexp(double a, double b);

// ln(1 - e^{-a}) for a > 0.
double log1mexp(double a);

// ln(e^a - 1) for a > 0.
double logexpm1(double a);

// ln(1 + e^x).
double softplus(double x);

double logit(double p);
double sigmoid(double x);

// ln I_x(a, b), the log of the regularized incomplete beta function,
// via the Lentz continued fraction with the standard symmetry pivot at
// x = (a+1)/(a+b+2). Accurate to ~1e-14 relative through a = b = 60.
double log_reg_inc_beta(double x, double a, double b);
double reg_inc_beta(double x, double a, double b);

// ln 1F1(a; b; x) for a, b > 0 and x >= 0. Ascending series with term-ratio
// recursion (rescaled, overflow free) for x < 40 b; the large-x asymptotic
// expansion in log form otherwise. Throws NumericalError if the series does
// not converge within the term cap.
double log_kummer_1f1(double a, double b, double x);

// ln I_nu(kappa), nu >= 0, kappa > 0, without overflow through kappa = 1e8.
// Evaluated through the exponentially scaled Kummer representation
// I_nu(z) = (z/2)^nu e^{-z} 1F1(nu+1/2; 2nu+1; 2z) / Gamma(nu+1).
double log_bessel_i(double nu, double kappa);

struct LogitNewtonConfig {
  int max_iterations = 100;
  double tolerance = 1e-12;  // in logit space
  bool bisection_fallback = true;
};

// One evaluation of a monotone CDF-like map in logit form: the logit of the
// function value at x, and the derivative of that logit with respect to x.
// A non-finite derivative makes the solver fall back to bisection.
struct LogitEval {
  double logit_value;
  double dlogit_dx;
};

// Solves logit(f(x)) = target_logit for a strictly increasing f mapping
// [-1, 1] onto [0, 1]. Newton iterates on the logit-transformed variable
// xi = 2 atanh(x), where CDF tails become near-linear, with a maintained
// bracket and bisection fallback guaranteeing convergence. Returns x.
//
// Convergence: |logit(f(x)) - target| < cfg.tolerance, or the bracket has
// collapsed to machine width around the root (the residual can then sit
// above cfg.tolerance only by evaluation noise of f itself). Throws
// NumericalError if the iteration cap is exhausted without either, which
// only happens when f is numerically non-monotone.
double invert_monotone_logit(const std::function<LogitEval(double)>& f, double target_logit,
                             const LogitNewtonConfig& cfg = {}, double initial_xi = 0.0);

// Same solver, returning the logit-transformed variable xi = 2 atanh(x)
// (+-inf when the target saturates). Callers that need x's near-pole
// complement at full relative precision read it off as sigmoid(-+xi).
double invert_monotone_logit_xi(const std::function<LogitEval(double)>& f, double target_logit,
                                const LogitNewtonConfig& cfg = {}, double initial_xi = 0.0);

// Engine behind both: the callable is evaluated directly at xi, so
// implementations can form (1+x)/2 and (1-x)/2 as sigmoids of +-xi without
// the cancellation that reconstituting them from x costs. dlogit_dx in the
// returned evaluation is still with respect to x.
double solve_logit_newton_xi(const std::function<LogitEval(double)>& eval_at_xi,
                             double target_logit, const LogitNewtonConfig& cfg = {},
                             double initial_xi = 0.0);

// Convenience wrapper taking the map and target as plain probabilities; the
// logit and its derivative are formed from f directly (derivative by central
// difference in xi). Tail resolution is limited by double rounding of f.
double invert_monotone_logit(const std::function<double(double)>& f, double target,
                             const LogitNewtonConfig& cfg = {});

}  // namespace zlpf
