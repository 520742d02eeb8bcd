#pragma once

#include <vector>

#include "zlpf/sphere.hpp"
#include "zlpf/special.hpp"

namespace zlpf {

struct ZoomParams {
  double kappa = 1.0;  // concentration, > 0
  int dim = 3;         // embedding dimension D, >= 2

  ZoomParams(double kappa_, int dim_);
};

// Image of the axial map carried together with (1 + value)/2 and
// (1 - value)/2. The complements stay at full relative precision next to
// the poles, where the plain double value saturates; the point maps consume
// them to form the off-axis scale ratio without cancellation.
struct AxialImage {
  double value;
  double y;
  double ybar;
};

// Evaluation kernel for one (D, kappa) pair. Precomputes the marginal
// normalizers and the shared 1F1 denominator once, so per-point calls are
// cheap. The kernel realizes the axial diffeomorphism h = F^{-1} o U,
// where U is the CDF of the last coordinate under the uniform distribution
// and F the CDF under the von Mises-Fisher distribution with mean e_D:
//
//   U(t) = I_{(t+1)/2}((D-1)/2, (D-1)/2)
//   F(t) = int_{-1}^{t} e^{kappa s} (1-s^2)^{(D-3)/2} ds / N_kappa
//
// Evaluation routes:
//   D = 3       closed forms for U, F and h (unless force_generic_path)
//   D odd       finite binomial sums with 1F1 weights held as log ratios
//   D even      adaptive Gauss-Legendre quadrature of the log integrand in
//               colatitude, U through the regularized incomplete beta
// All CDF values are produced and inverted in logit form, which keeps both
// tails at full relative precision; this is what makes the construction
// stable through at least D = 100 and kappa > 1e6.
class ZoomKernel {
 public:
  ZoomKernel(int dim, double kappa, bool force_generic_path = false);

  int dim() const { return dim_; }
  double kappa() const { return kappa_; }

  double u_cdf(double t) const;
  double u_logit(double t) const;
  double u_log_pdf(double t) const;  // log marginal density of the last coordinate, uniform

  double f_cdf(double t) const;
  double f_logit(double t) const;
  double f_log_pdf(double t) const;  // log marginal density, von Mises-Fisher

  // Pair forms taking y = (1+t)/2 and ybar = (1-t)/2 separately; callers
  // that know the complements exactly (the Newton machinery works in the
  // logit variable, where both are sigmoids) avoid the 1+-t cancellation.
  double u_logit_pair(double y, double ybar) const;
  double f_logit_pair(double y, double ybar) const;
  double u_log_pdf_pair(double y, double ybar) const;
  double f_log_pdf_pair(double y, double ybar) const;

  // h and its inverse; both fix -1 and +1 exactly and are strictly
  // increasing in between.
  double h_forward(double t) const;
  double h_inverse(double z) const;

  // Same maps with the pole complements of the image.
  AxialImage forward_image(double t) const;
  AxialImage inverse_image(double t) const;

  // ln h'(t), from the ratio of the two marginal densities (never from
  // differentiating the Newton inverse).
  double log_hprime(double t) const;

  // Log tangent-volume factor of the forward sphere map at a point with
  // last coordinate t. The textbook form
  //   ln h'(t) + (D-3)/2 ln[(1-h^2)/(1-t^2)]
  // collapses algebraically to ln(N_kappa/N_uniform) - kappa h(t) once h'
  // is written as the marginal-density ratio; the collapsed form is exact,
  // costs one h evaluation, and is finite through t = +-1 (it equals the
  // continuous limit there).
  double log_density_update(double t) const;
  double log_density_update_given_h(double h) const;

  // Point maps on the sphere: last coordinate becomes h(t) (resp. its
  // inverse), the remaining ones are rescaled to stay on the sphere.
  SpherePoint apply_forward(const SpherePoint& x) const;
  SpherePoint apply_inverse(const SpherePoint& x) const;

  double log_norm_uniform() const { return log_norm_uniform_; }
  double log_norm_vmf() const { return log_norm_vmf_; }

 private:
  double h_solve(double target_logit, bool invert) const;
  double odd_sum_logit_u(double y, double ybar) const;
  double odd_sum_logit_f(double y, double ybar) const;

  int dim_;
  double kappa_;
  bool closed3_;             // D == 3 closed-form route
  bool odd_;                 // finite-sum route (odd D > 3)
  double beta_;              // (D-3)/2
  double half_a_;            // A = (D-1)/2
  double log_norm_uniform_;  // ln N_uniform
  double log_norm_vmf_;      // ln N_kappa
  std::vector<double> log_binom_;  // ln C(D-2, i) for i = A..D-2 (odd route)
};

// ln of the integral over colatitude phi in [0, phi_hi] of
// exp(kappa cos phi) sin^{D-2} phi. The integrand is unimodal in phi for
// every real kappa; the evaluation crops to the region within 45 nats of
// the peak and applies adaptive 15-point Gauss-Legendre panels (cap 2^14).
// This one routine serves every even-D CDF query in both tails.
double log_colat_integral(double phi_hi, double kappa, int dim);

// Free-function forms (construct a kernel per call; prefer ZoomKernel in
// loops).
double u_cdf(double t, int dim);
double f_cdf(double t, double kappa, int dim);
double h_forward(double t, double kappa, int dim);
double h_inverse(double z, double kappa, int dim);
double zoom_log_density_update(double t, double kappa, int dim);

SpherePoint zoom_forward(const SpherePoint& x, const ZoomParams& p);
SpherePoint zoom_inverse(const SpherePoint& x, const ZoomParams& p);

// Leading-order tangent scale factor of the zoom at the pole: C / sqrt(kappa)
// with C = ((2 pi)^{(D-1)/2} / S_{D-1})^{1/(D-1)}.
double pole_scale_factor(int dim, double kappa);

}  // namespace zlpf
