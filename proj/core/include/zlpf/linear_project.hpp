#pragma once

#include <utility>

#include <Eigen/Core>

#include "zlpf/sphere.hpp"

namespace zlpf {

enum class LPVariant { Full, DiagonalS, ConstrainedSc };

// Parameters of the linear-project layer x -> A x / |A x|. The map only
// depends on A up to scale, so Full and DiagonalS are gauge-fixed to
// |det A| = 1 at construction. ConstrainedSc is the Kent-admissible
// diagonal diag(sigma_1..sigma_{D-1}, 1) whose scales must lie in the open
// interval (sqrt(D/(kappa+D)), sqrt((kappa+D)/D)) set by the concentration
// of the adjacent zoom layer.
class LPParams {
 public:
  static LPParams full(Eigen::MatrixXd a);
  static LPParams diagonal(Eigen::VectorXd scales);
  static LPParams constrained(Eigen::VectorXd sigmas, double kappa);

  LPVariant variant() const { return variant_; }
  int dim() const { return static_cast<int>(a_.rows()); }
  const Eigen::MatrixXd& matrix() const { return a_; }
  const Eigen::MatrixXd& inverse_matrix() const { return a_inv_; }
  double log_abs_det() const { return log_abs_det_; }

  // Concentration the ConstrainedSc interval was validated against.
  double kappa() const { return kappa_; }

 private:
  LPParams(LPVariant variant, Eigen::MatrixXd a, double kappa);

  LPVariant variant_;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd a_inv_;
  double log_abs_det_;
  double kappa_ = 0.0;
};

SpherePoint lp_forward(const SpherePoint& x, const LPParams& p);
SpherePoint lp_inverse(const SpherePoint& x, const LPParams& p);

// Log density update of the layer at the target-side point x:
// ln det(H) - D ln|H x| with H = A^{-1}. Equivalently minus the forward
// tangent-volume factor at the pre-image.
double lp_log_density_update(const SpherePoint& x, const LPParams& p);

// Forward tangent-volume factor ln det(A) - D ln|A x| at a base-side point.
double lp_log_det_forward(const SpherePoint& x, const LPParams& p);

// Central angular Gaussian log density in standard form,
//   -ln S^{D-1} - 1/2 ln det(Lambda) - D/2 ln(x^T Lambda^{-1} x),
// the analytic oracle for the single-layer linear-project flow with
// Lambda = A A^T. Throws InputError if Lambda is not symmetric positive
// definite.
double central_ag_log_pdf(const SpherePoint& x, const Eigen::MatrixXd& lambda);

// Open admissibility interval (lo, hi) for the per-axis Kent scales at
// concentration kappa; lo * hi = 1.
std::pair<double, double> kent_constraint_interval(double kappa, int dim);

// The 2-sphere single-variable form diag(u, 1/u, 1); u must lie inside
// kent_constraint_interval(kappa, 3). Throws ConstraintError otherwise.
LPParams make_constrained_sc(double u, double kappa, int dim = 3);

}  // namespace zlpf
