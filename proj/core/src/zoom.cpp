#include "zlpf/zoom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zlpf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 15-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr int kGlOrder = 15;
constexpr double kGlNode[kGlOrder] = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272, -0.7244177313601701,
    -0.5709721726085388, -0.3941513470775634, -0.2011940939974345, 0.0,
    0.2011940939974345,  0.3941513470775634,  0.5709721726085388,  0.7244177313601701,
    0.8482065834104272,  0.9372733924007060,  0.9879925180204854};
constexpr double kGlWeight[kGlOrder] = {
    0.0307532419961173, 0.0703660474881081, 0.1071592204671719, 0.1395706779261543,
    0.1662692058169939, 0.1861610000155622, 0.1984314853271116, 0.2025782419255613,
    0.1984314853271116, 0.1861610000155622, 0.1662692058169939, 0.1395706779261543,
    0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

struct ColatIntegrand {
  double kappa;
  double exponent;  // D - 2
  // Reference point the log integrand is shifted against. The kappa term is
  // formed as 2 kappa (sin^2(ref/2) - sin^2(phi/2)), which keeps the shifted
  // value at full precision even when kappa cos(phi) itself rounds at the
  // 1e-10 level; without this the adaptive refinement chases rounding noise.
  double sin_half_ref = 0.0;
  double log_sin_ref = 0.0;

  void set_reference(double phi_ref) {
    sin_half_ref = std::sin(0.5 * phi_ref);
    const double s = std::sin(phi_ref);
    log_sin_ref = s > 0.0 ? std::log(s) : 0.0;
  }

  // Log integrand minus its value at the reference point.
  double operator()(double phi) const {
    const double s = std::sin(phi);
    const double sh = std::sin(0.5 * phi);
    const double kappa_term =
        2.0 * kappa * (sin_half_ref - sh) * (sin_half_ref + sh);
    if (s <= 0.0) return exponent == 0.0 ? kappa_term : -kInf;
    return kappa_term + exponent * (std::log(s) - log_sin_ref);
  }

  // Unshifted value, for reporting the final log integral.
  double absolute(double phi) const {
    const double s = std::sin(phi);
    if (s <= 0.0) return exponent == 0.0 ? kappa * std::cos(phi) : -kInf;
    return kappa * std::cos(phi) + exponent * std::log(s);
  }
};

double gl15(const ColatIntegrand& g, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (int i = 0; i < kGlOrder; ++i) {
    const double v = g(mid + half * kGlNode[i]);
    if (v > -745.0) acc += kGlWeight[i] * std::exp(v);
  }
  return acc * half;
}

struct PanelTol {
  double rel;    // per-panel relative acceptance
  double noise;  // absolute acceptance against the whole-integral scale
};

double adaptive_panels(const ColatIntegrand& g, double a, double b, double whole, double scale,
                       const PanelTol& tol, int* budget) {
  if (--(*budget) < 0)
    throw NumericalError("log_colat_integral: quadrature did not converge (panel cap)");
  const double mid = 0.5 * (a + b);
  const double left = gl15(g, a, mid);
  const double right = gl15(g, mid, b);
  const double split = left + right;
  if (std::abs(split - whole) <= tol.rel * split + tol.noise * scale + 1e-305) return split;
  return adaptive_panels(g, a, mid, left, scale, tol, budget) +
         adaptive_panels(g, mid, b, right, scale, tol, budget);
}

// Colatitude of the log-integrand's peak: cos(phi*) solves
// kappa (1 - c^2) = (D - 2) c, single root in [-1, 1].
double peak_cos(double kappa, double m) {
  if (kappa == 0.0) return m > 0.0 ? 0.0 : 1.0;
  const double am = std::abs(kappa);
  const double c = 2.0 * am / (m + std::sqrt(m * m + 4.0 * am * am));
  return kappa > 0.0 ? c : -c;
}

}  // namespace

double log_colat_integral(double phi_hi, double kappa, int dim) {
  if (dim < 2) throw InputError("log_colat_integral: dimension must be at least 2");
  if (!(phi_hi >= 0.0)) return -kInf;
  phi_hi = std::min(phi_hi, M_PI);
  if (phi_hi == 0.0) return -kInf;

  const double m = static_cast<double>(dim) - 2.0;
  ColatIntegrand g{kappa, m};

  // Peak of the integrand on [0, phi_hi]; the integrand is unimodal, so the
  // clamped unconstrained peak is the max location.
  const double phi_star = std::acos(std::clamp(peak_cos(kappa, m), -1.0, 1.0));
  const double phi_peak = std::clamp(phi_star, 0.0, phi_hi);
  g.set_reference(phi_peak);
  if (!std::isfinite(g.absolute(phi_peak))) return -kInf;

  // Crop to the region within 45 nats of the peak; outside it the unimodal
  // integrand contributes below 1e-18 of the total.
  constexpr double kDrop = 45.0;
  const auto crop = [&](double inside, double outside) {
    if (g(outside) >= -kDrop) return outside;
    double a = inside, b = outside;  // g(a) >= -kDrop > g(b)
    for (int i = 0; i < 100 && std::abs(b - a) > 1e-16 * (1.0 + std::abs(a)); ++i) {
      const double c = 0.5 * (a + b);
      (g(c) >= -kDrop ? a : b) = c;
    }
    return a;
  };
  const double lo = crop(phi_peak, 0.0);
  const double hi = crop(phi_peak, phi_hi);
  if (!(hi > lo)) return -kInf;

  // Double angles resolve to ~2e-16, so the shifted log integrand carries an
  // irreducible noise of order |g'| eps; refining below that floor would
  // never converge. The reported log integral is accurate to about this
  // noise level (1e-15 at moderate kappa, ~kappa sin(phi0) eps at extreme
  // concentrations), which stays far inside every downstream tolerance.
  PanelTol tol;
  tol.noise = 1e-15 * (1.0 + m) + 2e-16 * std::abs(kappa) * std::sin(phi_peak);
  tol.rel = 1e-13 + 8.0 * tol.noise;

  int budget = 1 << 14;
  const double whole = gl15(g, lo, hi);
  const double integral = adaptive_panels(g, lo, hi, whole, std::max(whole, 0.0), tol, &budget);
  if (!(integral > 0.0)) return -kInf;
  return g.absolute(phi_peak) + std::log(integral);
}

ZoomParams::ZoomParams(double kappa_, int dim_) : kappa(kappa_), dim(dim_) {
  if (!(kappa > 0.0) || !std::isfinite(kappa))
    throw InputError("ZoomParams: kappa must be positive and finite");
  if (dim < 2) throw InputError("ZoomParams: dimension must be at least 2");
}

ZoomKernel::ZoomKernel(int dim, double kappa, bool force_generic_path)
    : dim_(dim), kappa_(kappa) {
  if (dim < 2) throw InputError("ZoomKernel: dimension must be at least 2");
  if (!(kappa > 0.0) || !std::isfinite(kappa))
    throw InputError("ZoomKernel: kappa must be positive and finite");
  closed3_ = (dim == 3) && !force_generic_path;
  odd_ = (dim % 2 == 1) && dim > 2;
  beta_ = 0.5 * (dim - 3.0);
  half_a_ = 0.5 * (dim - 1.0);

  // N_uniform = sqrt(pi) Gamma((D-1)/2) / Gamma(D/2); N_kappa relates to it
  // through the same Kummer value that normalizes the finite-sum weights.
  log_norm_uniform_ = 0.5 * std::log(M_PI) + std::lgamma(half_a_) - std::lgamma(0.5 * dim);
  log_norm_vmf_ =
      log_norm_uniform_ - kappa + log_kummer_1f1(half_a_, 2.0 * half_a_, 2.0 * kappa);

  if (odd_) {
    const int n = dim - 2;
    const int a = (dim - 1) / 2;
    log_binom_.resize(n - a + 1);
    for (int i = a; i <= n; ++i)
      log_binom_[i - a] =
          std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
  }
}

namespace {

// Split t in [-1, 1] into y = (1+t)/2 and its complement without losing the
// near-pole digits of whichever side is small.
struct YPair {
  double y;
  double ybar;
};

YPair split_t(double t) {
  const double y = 0.5 * (1.0 + t);
  const double ybar = 0.5 * (1.0 - t);
  return {y, ybar};
}

}  // namespace

double ZoomKernel::odd_sum_logit_u(double y, double ybar) const {
  // U = sum_{i=A}^{n} C(n,i) y^i (1-y)^{n-i}; the complement is the same sum
  // at y <-> 1-y. Both are all-positive, so the logit is exact in each tail.
  const int n = dim_ - 2;
  const int a = (dim_ - 1) / 2;
  const double ly = std::log(y), lybar = std::log(ybar);
  double log_num = -kInf, log_den = -kInf;
  for (int i = a; i <= n; ++i) {
    const double lb = log_binom_[i - a];
    log_num = logaddexp(log_num, lb + i * ly + (n - i) * lybar);
    log_den = logaddexp(log_den, lb + i * lybar + (n - i) * ly);
  }
  return log_num - log_den;
}

double ZoomKernel::odd_sum_logit_f(double y, double ybar) const {
  // F = sum_{i=A}^{n} C(n,i) y^i (1-y)^{n-i} w_i with
  // w_i = 1F1(A; i+1; 2 kappa y) / 1F1(A; 2A; 2 kappa); the complement sum
  // follows from the reflection F_kappa(t) + F_{-kappa}(-t) = 1 and the
  // Kummer transform, again with all-positive terms.
  const int n = dim_ - 2;
  const int a = (dim_ - 1) / 2;
  const double ly = std::log(y), lybar = std::log(ybar);
  const double x_num = 2.0 * kappa_ * y;
  const double x_comp = 2.0 * kappa_ * ybar;
  double log_num = -kInf, log_comp = -kInf;
  for (int i = a; i <= n; ++i) {
    const double lb = log_binom_[i - a];
    if (y > 0.0)
      log_num = logaddexp(log_num, lb + i * ly + (n - i) * lybar +
                                       log_kummer_1f1(a, i + 1.0, x_num));
    if (ybar > 0.0)
      log_comp = logaddexp(log_comp, lb + i * lybar + (n - i) * ly + 2.0 * kappa_ * y +
                                         log_kummer_1f1(i + 1.0 - a, i + 1.0, x_comp));
  }
  return log_num - log_comp;
}

double ZoomKernel::u_logit_pair(double y, double ybar) const {
  if (y <= 0.0) return -kInf;
  if (ybar <= 0.0) return kInf;
  if (closed3_) return std::log(y) - std::log(ybar);
  if (odd_) return odd_sum_logit_u(y, ybar);
  // Even D: both tails of the regularized incomplete beta, each from its own
  // continued-fraction side.
  return log_reg_inc_beta(y, half_a_, half_a_) - log_reg_inc_beta(ybar, half_a_, half_a_);
}

double ZoomKernel::u_logit(double t) const {
  const auto [y, ybar] = split_t(t);
  return u_logit_pair(y, ybar);
}

double ZoomKernel::u_cdf(double t) const { return sigmoid(u_logit(t)); }

double ZoomKernel::u_log_pdf_pair(double y, double ybar) const {
  if (y <= 0.0 || ybar <= 0.0) return beta_ == 0.0 ? -log_norm_uniform_ : -kInf;
  return beta_ * (std::log(y) + std::log(ybar) + 2.0 * M_LN2) - log_norm_uniform_;
}

double ZoomKernel::u_log_pdf(double t) const {
  const auto [y, ybar] = split_t(t);
  return u_log_pdf_pair(y, ybar);
}

double ZoomKernel::f_logit_pair(double y, double ybar) const {
  if (y <= 0.0) return -kInf;
  if (ybar <= 0.0) return kInf;
  if (closed3_) {
    // F = (e^{2 kappa y} - 1) / (e^{2 kappa} - 1).
    return logexpm1(2.0 * kappa_ * y) - 2.0 * kappa_ * y - logexpm1(2.0 * kappa_ * ybar);
  }
  if (odd_) return odd_sum_logit_f(y, ybar);
  const double phi_right = 2.0 * std::asin(std::sqrt(ybar));  // arccos(t)
  const double phi_left = 2.0 * std::asin(std::sqrt(y));      // pi - arccos(t)
  const double log_right = log_colat_integral(phi_right, kappa_, dim_);
  const double log_left = log_colat_integral(phi_left, -kappa_, dim_);
  return log_left - log_right;
}

double ZoomKernel::f_logit(double t) const {
  const auto [y, ybar] = split_t(t);
  return f_logit_pair(y, ybar);
}

double ZoomKernel::f_cdf(double t) const { return sigmoid(f_logit(t)); }

double ZoomKernel::f_log_pdf_pair(double y, double ybar) const {
  if (y <= 0.0 || ybar <= 0.0)
    return beta_ == 0.0 ? kappa_ * (y - ybar) - log_norm_vmf_ : -kInf;
  return kappa_ * (y - ybar) + beta_ * (std::log(y) + std::log(ybar) + 2.0 * M_LN2) -
         log_norm_vmf_;
}

double ZoomKernel::f_log_pdf(double t) const {
  const auto [y, ybar] = split_t(t);
  if (y <= 0.0 || ybar <= 0.0) return beta_ == 0.0 ? kappa_ * t - log_norm_vmf_ : -kInf;
  return kappa_ * t + beta_ * (std::log(y) + std::log(ybar) + 2.0 * M_LN2) - log_norm_vmf_;
}

namespace {

AxialImage image_from_xi(double xi) {
  if (xi == kInf) return {1.0, 1.0, 0.0};
  if (xi == -kInf) return {-1.0, 0.0, 1.0};
  return {std::tanh(0.5 * xi), sigmoid(xi), sigmoid(-xi)};
}

}  // namespace

double ZoomKernel::h_solve(double target_logit, bool invert) const {
  // Forward h solves logit F(h) = logit U(t); the inverse solves
  // logit U(z) = logit F(x). Evaluations run in the logit variable, where
  // the pole complements are exact sigmoids.
  const auto eval = [this, invert](double xi) {
    const double y = sigmoid(xi);
    const double ybar = sigmoid(-xi);
    const double l = invert ? u_logit_pair(y, ybar) : f_logit_pair(y, ybar);
    const double lpdf = invert ? u_log_pdf_pair(y, ybar) : f_log_pdf_pair(y, ybar);
    double dl;
    if (y <= 0.0 || ybar <= 0.0) {
      dl = kInf;
    } else {
      // d logit / dx = pdf / (F (1 - F)).
      dl = std::exp(lpdf + softplus(l) + softplus(-l));
    }
    return LogitEval{l, dl};
  };
  LogitNewtonConfig cfg;
  return solve_logit_newton_xi(eval, target_logit, cfg, 0.0);
}

AxialImage ZoomKernel::forward_image(double t) const {
  if (t <= -1.0) return {-1.0, 0.0, 1.0};
  if (t >= 1.0) return {1.0, 1.0, 0.0};
  const auto [y, ybar] = split_t(t);
  if (closed3_) {
    // h = 1 + L/kappa with L = ln(y + ybar e^{-2 kappa}); the complements
    // follow as (1-h)/2 = -L/(2 kappa) and (1+h)/2 = M/(2 kappa) with
    // M = L + 2 kappa = ln(y e^{2 kappa} + ybar), each formed from its own
    // log-sum so no tail digit is lost.
    const double log_y = std::log(y), log_ybar = std::log(ybar);
    const double l = logaddexp(log_y, log_ybar - 2.0 * kappa_);
    const double mm = logaddexp(log_y + 2.0 * kappa_, log_ybar);
    return {std::clamp(1.0 + l / kappa_, -1.0, 1.0), mm / (2.0 * kappa_), -l / (2.0 * kappa_)};
  }
  return image_from_xi(h_solve(u_logit(t), false));
}

AxialImage ZoomKernel::inverse_image(double t) const {
  if (t <= -1.0) return {-1.0, 0.0, 1.0};
  if (t >= 1.0) return {1.0, 1.0, 0.0};
  if (closed3_) return image_from_xi(f_logit(t));  // z = 2 F(t) - 1
  return image_from_xi(h_solve(f_logit(t), true));
}

double ZoomKernel::h_forward(double t) const { return forward_image(t).value; }

double ZoomKernel::h_inverse(double z) const { return inverse_image(z).value; }

double ZoomKernel::log_hprime(double t) const {
  // At the poles both marginal densities vanish (D > 3); the limit follows
  // from matching the leading powers of the two CDFs:
  //   h'(+-1) = [(N_kappa / N_uniform) e^{-+kappa}]^{2/(D-1)}.
  const double dnm = log_norm_vmf_ - log_norm_uniform_;
  if (t >= 1.0 - 1e-12) return (dnm - kappa_) / (beta_ + 1.0);
  if (t <= -1.0 + 1e-12) return (dnm + kappa_) / (beta_ + 1.0);
  return u_log_pdf(t) - f_log_pdf(h_forward(t));
}

double ZoomKernel::log_density_update_given_h(double h) const {
  return log_norm_vmf_ - log_norm_uniform_ - kappa_ * h;
}

double ZoomKernel::log_density_update(double t) const {
  return log_density_update_given_h(h_forward(t));
}

namespace {

// Rescale the off-axis block of a point whose last coordinate moves t to
// image.value. The scale ratio (1 - h^2)/(1 - t^2) is formed from the pole
// complements on both sides, so it stays exact arbitrarily close to the
// poles (where it equals the continuous h' limit automatically).
SpherePoint rescale_point(const Eigen::VectorXd& coords, double t, const AxialImage& image) {
  const int d = static_cast<int>(coords.size());
  const auto [ty, tybar] = split_t(t);
  const double denom = ty * tybar;
  double ratio = 0.0;  // at an exact pole the off-axis block is zero anyway
  if (denom > 0.0 && image.y > 0.0 && image.ybar > 0.0)
    ratio = (image.y / ty) * (image.ybar / tybar);
  const double scale = std::sqrt(ratio);
  Eigen::VectorXd out(d);
  for (int i = 0; i + 1 < d; ++i) out[i] = coords[i] * scale;
  out[d - 1] = image.value;
  if (out.norm() < 1e-12) out[d - 1] = image.value >= 0.0 ? 1.0 : -1.0;
  return SpherePoint(std::move(out));
}

}  // namespace

SpherePoint ZoomKernel::apply_forward(const SpherePoint& x) const {
  if (x.dim() != dim_) throw InputError("zoom: dimension mismatch");
  const double t = x.last();
  return rescale_point(x.coords(), t, forward_image(t));
}

SpherePoint ZoomKernel::apply_inverse(const SpherePoint& x) const {
  if (x.dim() != dim_) throw InputError("zoom: dimension mismatch");
  const double t = x.last();
  return rescale_point(x.coords(), t, inverse_image(t));
}

double u_cdf(double t, int dim) { return ZoomKernel(dim, 1.0).u_cdf(t); }

double f_cdf(double t, double kappa, int dim) { return ZoomKernel(dim, kappa).f_cdf(t); }

double h_forward(double t, double kappa, int dim) { return ZoomKernel(dim, kappa).h_forward(t); }

double h_inverse(double z, double kappa, int dim) { return ZoomKernel(dim, kappa).h_inverse(z); }

double zoom_log_density_update(double t, double kappa, int dim) {
  return ZoomKernel(dim, kappa).log_density_update(t);
}

SpherePoint zoom_forward(const SpherePoint& x, const ZoomParams& p) {
  return ZoomKernel(p.dim, p.kappa).apply_forward(x);
}

SpherePoint zoom_inverse(const SpherePoint& x, const ZoomParams& p) {
  return ZoomKernel(p.dim, p.kappa).apply_inverse(x);
}

double pole_scale_factor(int dim, double kappa) {
  if (dim < 2) throw InputError("pole_scale_factor: dimension must be at least 2");
  if (!(kappa > 0.0)) throw InputError("pole_scale_factor: kappa must be positive");
  const double log_c =
      (0.5 * (dim - 1.0) * std::log(2.0 * M_PI) - log_surface_volume(dim)) / (dim - 1.0);
  return std::exp(log_c - 0.5 * std::log(kappa));
}

}  // namespace zlpf
