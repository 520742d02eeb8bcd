#include "zlpf/sphere.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "zlpf/rng.hpp"

namespace zlpf {

namespace {
constexpr double kOrthoTol = 1e-12;
constexpr double kDetTol = 1e-10;
}  // namespace

SpherePoint::SpherePoint(Eigen::VectorXd coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) throw InputError("SpherePoint: dimension must be at least 2");
  const double n = coords_.norm();
  if (!std::isfinite(n) || n < 1e-12)
    throw InputError("SpherePoint: vector is not normalizable");
  coords_ /= n;
}

SpherePoint SpherePoint::north_pole(int dim) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  v[dim - 1] = 1.0;
  return SpherePoint(std::move(v));
}

Rotation::Rotation(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 2)
    throw InputError("Rotation: matrix must be square, D >= 2");
  const int d = static_cast<int>(matrix_.rows());
  const double ortho_err =
      (matrix_.transpose() * matrix_ - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
  if (!(ortho_err < kOrthoTol))
    throw InputError("Rotation: matrix is not orthogonal (deviation " +
                     std::to_string(ortho_err) + ")");
  const double det = matrix_.determinant();
  if (!(std::abs(det - 1.0) < kDetTol))
    throw InputError("Rotation: determinant must be +1, got " + std::to_string(det));
}

Rotation Rotation::identity(int dim) { return Rotation(Eigen::MatrixXd::Identity(dim, dim)); }

SpherePoint Rotation::apply(const SpherePoint& x) const { return SpherePoint(matrix_ * x.coords()); }

SpherePoint Rotation::apply_inverse(const SpherePoint& x) const {
  return SpherePoint(matrix_.transpose() * x.coords());
}

Eigen::MatrixXd tangent_basis(const SpherePoint& x) {
  // Householder reflection H through the mirror normal v = x + sign(x_D) e_D
  // maps +-e_D to -+x; its first D-1 columns are an orthonormal basis of the
  // tangent space at x. The sign choice keeps |v| >= sqrt(2).
  const int d = x.dim();
  Eigen::VectorXd v = x.coords();
  const double s = (x.last() >= 0.0) ? 1.0 : -1.0;
  v[d - 1] += s;
  const double vsq = v.squaredNorm();
  Eigen::MatrixXd basis(d, d - 1);
  for (int j = 0; j < d - 1; ++j) {
    Eigen::VectorXd col = -(2.0 * v[j] / vsq) * v;
    col[j] += 1.0;
    basis.col(j) = col;
  }
  return basis;
}

double log_surface_volume(int dim) {
  if (dim < 2) throw InputError("surface_volume: dimension must be at least 2");
  return std::log(2.0) + 0.5 * dim * std::log(M_PI) - std::lgamma(0.5 * dim);
}

double surface_volume(int dim) { return std::exp(log_surface_volume(dim)); }

double uniform_log_density(int dim) { return -log_surface_volume(dim); }

SpherePoint uniform_sample(Rng& rng, int dim) {
  for (;;) {
    Eigen::VectorXd v = rng.gaussian_vector(dim);
    if (v.norm() > 1e-12) return SpherePoint(std::move(v));
  }
}

Rotation rotation_to(const SpherePoint& mu) {
  const int d = mu.dim();
  const Eigen::VectorXd& m = mu.coords();

  if (m[d - 1] < -1.0 + 1e-12) {
    // Antipode: any smooth choice is a gauge; return the fixed half turn in
    // the (e_1, e_D) plane.
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(d, d);
    r(0, 0) = -1.0;
    r(d - 1, d - 1) = -1.0;
    return Rotation(std::move(r));
  }

  Eigen::VectorXd pole = Eigen::VectorXd::Zero(d);
  pole[d - 1] = 1.0;
  Eigen::VectorXd mid = (pole + m).normalized();

  const auto reflect = [d](const Eigen::VectorXd& normal) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Identity(d, d) -
                           (2.0 / normal.squaredNorm()) * (normal * normal.transpose()));
  };
  // Reflection through e_D + v sends e_D to -v; reflection through mu + v
  // sends -v to mu. The composition is special orthogonal.
  Eigen::MatrixXd r = reflect(m + mid) * reflect(pole + mid);
  return Rotation(std::move(r));
}

Rotation rotation_from_skew(const Eigen::VectorXd& params, int dim) {
  const int expected = dim * (dim - 1) / 2;
  if (params.size() != expected)
    throw InputError("rotation_from_skew: expected " + std::to_string(expected) + " parameters");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim, dim);
  int k = 0;
  for (int i = 1; i < dim; ++i)
    for (int j = 0; j < i; ++j) {
      s(i, j) = params[k];
      s(j, i) = -params[k];
      ++k;
    }
  Eigen::MatrixXd r = s.exp();
  // One Newton-Schulz sweep keeps the orthogonality defect at rounding level.
  r = 0.5 * r * (3.0 * Eigen::MatrixXd::Identity(dim, dim) - r.transpose() * r);
  return Rotation(std::move(r));
}

Eigen::VectorXd skew_params(const Rotation& rot) {
  const int dim = rot.dim();
  Eigen::MatrixXd l = rot.matrix().log();
  l = 0.5 * (l - l.transpose().eval());
  Eigen::VectorXd params(dim * (dim - 1) / 2);
  int k = 0;
  for (int i = 1; i < dim; ++i)
    for (int j = 0; j < i; ++j) params[k++] = l(i, j);
  return params;
}

double numeric_density_update(const std::function<SpherePoint(const SpherePoint&)>& f,
                              const SpherePoint& x, double step) {
  if (!(step >= 1e-7 && step <= 1e-4))
    throw InputError("numeric_density_update: step must lie in [1e-7, 1e-4]");
  const int d = x.dim();

  Eigen::MatrixXd jac(d, d);
  for (int j = 0; j < d; ++j) {
    Eigen::VectorXd plus = x.coords();
    Eigen::VectorXd minus = x.coords();
    plus[j] += step;
    minus[j] -= step;
    const Eigen::VectorXd fp = f(SpherePoint(std::move(plus))).coords();
    const Eigen::VectorXd fm = f(SpherePoint(std::move(minus))).coords();
    jac.col(j) = (fp - fm) / (2.0 * step);
  }

  const Eigen::MatrixXd e_in = tangent_basis(x);
  const Eigen::MatrixXd e_out = tangent_basis(f(x));
  const Eigen::MatrixXd m = e_out.transpose() * jac * e_in;
  const double det = m.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-100)
    throw NumericalError("numeric_density_update: projected Jacobian is rank deficient");
  return std::abs(det);
}

}  // namespace zlpf
