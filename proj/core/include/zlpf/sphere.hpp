#pragma once

#include <functional>

#include <Eigen/Core>

#include "zlpf/errors.hpp"

namespace zlpf {

class Rng;

// Unit vector in R^D (the sphere S^{D-1}), D >= 2. Construction divides by
// the norm, so the stored coordinates are within 1e-12 of unit length.
class SpherePoint {
 public:
  explicit SpherePoint(Eigen::VectorXd coords);

  static SpherePoint north_pole(int dim);

  const Eigen::VectorXd& coords() const { return coords_; }
  int dim() const { return static_cast<int>(coords_.size()); }
  double last() const { return coords_[coords_.size() - 1]; }
  double operator[](int i) const { return coords_[i]; }

 private:
  Eigen::VectorXd coords_;
};

// Element of SO(D): orthogonal within 1e-12, determinant +1 within 1e-10.
class Rotation {
 public:
  explicit Rotation(Eigen::MatrixXd matrix);

  static Rotation identity(int dim);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

  SpherePoint apply(const SpherePoint& x) const;
  SpherePoint apply_inverse(const SpherePoint& x) const;

 private:
  Eigen::MatrixXd matrix_;
};

// Orthonormal basis of the tangent space at x: a D x (D-1) matrix whose
// columns are unit length, mutually orthogonal and orthogonal to x. The
// columns plus x form an orthonormal frame of R^D. Built from a single
// Householder reflection, so no direction is singular.
Eigen::MatrixXd tangent_basis(const SpherePoint& x);

// Surface measure of S^{D-1}: 2 pi^{D/2} / Gamma(D/2).
double surface_volume(int dim);
double log_surface_volume(int dim);

// Log density of the uniform distribution on S^{D-1}: -ln surface_volume.
double uniform_log_density(int dim);
SpherePoint uniform_sample(Rng& rng, int dim);

// Rotation mapping the north pole e_D to mu, composed of two Householder
// reflections (mirror normals e_D + v and mu + v, with v the unit bisector
// of e_D and mu). Continuous everywhere except the antipode -e_D, where a
// fixed half turn in the (e_1, e_D) plane is returned.
Rotation rotation_to(const SpherePoint& mu);

// Exponential of the skew-symmetric matrix built from D(D-1)/2 unconstrained
// parameters (lower-triangle order); the full SO(D) chart used for fitting.
Rotation rotation_from_skew(const Eigen::VectorXd& params, int dim);

// Inverse chart: principal matrix logarithm read back as skew parameters.
Eigen::VectorXd skew_params(const Rotation& rot);

// Tangent-space volume factor sqrt(det(E^T J^T J E)) of a diffeomorphism f
// of the sphere at x. J is estimated by central finite differences in the
// embedding coordinates (perturbed inputs are renormalized, so f is only
// ever evaluated on the sphere) and projected with the tangent bases at the
// input and output points. This is the numerical oracle every analytic
// density update is checked against.
//
// Throws NumericalError if the projected Jacobian is rank deficient, which
// signals a non-diffeomorphism or a singular parameter choice.
double numeric_density_update(const std::function<SpherePoint(const SpherePoint&)>& f,
                              const SpherePoint& x, double step = 1e-5);

}  // namespace zlpf
