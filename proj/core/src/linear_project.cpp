#include "zlpf/linear_project.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace zlpf {

LPParams::LPParams(LPVariant variant, Eigen::MatrixXd a, double kappa)
    : variant_(variant), a_(std::move(a)), kappa_(kappa) {
  const int d = static_cast<int>(a_.rows());
  if (d < 2 || a_.cols() != d) throw InputError("LPParams: matrix must be square, D >= 2");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a_);
  const double det = lu.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-30)
    throw InputError("LPParams: matrix is not invertible");
  if (variant_ != LPVariant::ConstrainedSc) {
    // The map only sees A up to scale; fix the gauge |det A| = 1.
    a_ /= std::pow(std::abs(det), 1.0 / d);
    lu.compute(a_);
  }
  a_inv_ = lu.inverse();
  log_abs_det_ = std::log(std::abs(lu.determinant()));
}

LPParams LPParams::full(Eigen::MatrixXd a) {
  return LPParams(LPVariant::Full, std::move(a), 0.0);
}

LPParams LPParams::diagonal(Eigen::VectorXd scales) {
  const int d = static_cast<int>(scales.size());
  if (d < 2) throw InputError("LPParams: need at least 2 scales");
  for (int i = 0; i < d; ++i)
    if (!(scales[i] > 0.0)) throw InputError("LPParams: diagonal scales must be positive");
  Eigen::MatrixXd a = scales.asDiagonal();
  return LPParams(LPVariant::DiagonalS, std::move(a), 0.0);
}

LPParams LPParams::constrained(Eigen::VectorXd sigmas, double kappa) {
  const int d = static_cast<int>(sigmas.size()) + 1;
  const auto [lo, hi] = kent_constraint_interval(kappa, d);
  for (int i = 0; i < d - 1; ++i)
    if (!(sigmas[i] > lo && sigmas[i] < hi))
      throw ConstraintError("LPParams: scale " + std::to_string(sigmas[i]) +
                            " outside the admissible interval (" + std::to_string(lo) + ", " +
                            std::to_string(hi) + ")");
  Eigen::VectorXd diag(d);
  diag.head(d - 1) = sigmas;
  diag[d - 1] = 1.0;
  Eigen::MatrixXd a = diag.asDiagonal();
  return LPParams(LPVariant::ConstrainedSc, std::move(a), kappa);
}

SpherePoint lp_forward(const SpherePoint& x, const LPParams& p) {
  if (x.dim() != p.dim()) throw InputError("lp_forward: dimension mismatch");
  return SpherePoint(p.matrix() * x.coords());
}

SpherePoint lp_inverse(const SpherePoint& x, const LPParams& p) {
  if (x.dim() != p.dim()) throw InputError("lp_inverse: dimension mismatch");
  return SpherePoint(p.inverse_matrix() * x.coords());
}

double lp_log_density_update(const SpherePoint& x, const LPParams& p) {
  const int d = p.dim();
  return -p.log_abs_det() - d * std::log((p.inverse_matrix() * x.coords()).norm());
}

double lp_log_det_forward(const SpherePoint& x, const LPParams& p) {
  const int d = p.dim();
  return p.log_abs_det() - d * std::log((p.matrix() * x.coords()).norm());
}

double central_ag_log_pdf(const SpherePoint& x, const Eigen::MatrixXd& lambda) {
  const int d = x.dim();
  if (lambda.rows() != d || lambda.cols() != d)
    throw InputError("central_ag_log_pdf: dimension mismatch");
  if ((lambda - lambda.transpose()).cwiseAbs().maxCoeff() > 1e-10 * lambda.cwiseAbs().maxCoeff())
    throw InputError("central_ag_log_pdf: covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(lambda);
  if (llt.info() != Eigen::Success)
    throw InputError("central_ag_log_pdf: covariance must be positive definite");
  double log_det = 0.0;
  for (int i = 0; i < d; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const double quad = x.coords().dot(llt.solve(x.coords()));
  return -log_surface_volume(d) - 0.5 * log_det - 0.5 * d * std::log(quad);
}

std::pair<double, double> kent_constraint_interval(double kappa, int dim) {
  if (!(kappa > 0.0)) throw InputError("kent_constraint_interval: kappa must be positive");
  if (dim < 2) throw InputError("kent_constraint_interval: dimension must be at least 2");
  const double hi = std::sqrt((kappa + dim) / dim);
  return {1.0 / hi, hi};
}

LPParams make_constrained_sc(double u, double kappa, int dim) {
  if (dim != 3)
    throw InputError("make_constrained_sc: the single-variable form is specific to D = 3");
  Eigen::VectorXd sigmas(2);
  sigmas << u, 1.0 / u;
  return LPParams::constrained(std::move(sigmas), kappa);
}

}  // namespace zlpf
