#include <doctest.h>

#include <cmath>

#include "zlpf/linear_project.hpp"
#include "zlpf/rng.hpp"

using namespace zlpf;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int dim) {
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = rng.gaussian();
  a += 2.0 * Eigen::MatrixXd::Identity(dim, dim);
  return a;
}

}  // namespace

TEST_CASE("identity map and gauge fixing") {
  const LPParams id = LPParams::full(Eigen::MatrixXd::Identity(3, 3));
  Eigen::VectorXd v(3);
  v << 0.3, -0.5, 0.81;
  const SpherePoint x{v};
  CHECK((lp_forward(x, id).coords() - x.coords()).norm() < 1e-15);
  CHECK(lp_log_density_update(x, id) == doctest::Approx(0.0));

  // Any scalar multiple of the identity is still the identity map.
  const LPParams scaled = LPParams::full(7.5 * Eigen::MatrixXd::Identity(3, 3));
  CHECK((scaled.matrix() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("axes of a diagonal map are fixed points") {
  Eigen::VectorXd scales(3);
  scales << 2.0, 0.5, 1.0;
  const LPParams p = LPParams::diagonal(scales);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
  e1[0] = 1.0;
  const SpherePoint x{e1};
  CHECK((lp_forward(x, p).coords() - x.coords()).norm() < 1e-15);
}

TEST_CASE("forward and inverse are exact mutual inverses") {
  Rng rng(31);
  for (int dim : {3, 5, 8}) {
    for (int rep = 0; rep < 20; ++rep) {
      const LPParams p = LPParams::full(random_matrix(rng, dim));
      double worst = 0.0;
      for (int i = 0; i < 50; ++i) {
        const SpherePoint x = uniform_sample(rng, dim);
        worst = std::max(worst, (lp_inverse(lp_forward(x, p), p).coords() - x.coords()).norm());
        worst = std::max(worst, (lp_forward(lp_inverse(x, p), p).coords() - x.coords()).norm());
      }
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("single-layer density equals the central angular Gaussian") {
  Rng rng(32);
  for (int rep = 0; rep < 20; ++rep) {
    const LPParams p = LPParams::full(random_matrix(rng, 3));
    const Eigen::MatrixXd lambda = p.matrix() * p.matrix().transpose();
    for (int i = 0; i < 50; ++i) {
      const SpherePoint x = uniform_sample(rng, 3);
      const double flow = uniform_log_density(3) + lp_log_density_update(x, p);
      CHECK(flow == doctest::Approx(central_ag_log_pdf(x, lambda)).epsilon(1e-12));
    }
  }
}

TEST_CASE("central angular Gaussian reference values") {
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
  e1[0] = 1.0;
  const SpherePoint x{e1};
  SUBCASE("isotropic covariance is uniform") {
    CHECK(central_ag_log_pdf(x, Eigen::MatrixXd::Identity(3, 3)) ==
          doctest::Approx(-std::log(4.0 * M_PI)).epsilon(1e-14));
    CHECK(central_ag_log_pdf(x, 9.0 * Eigen::MatrixXd::Identity(3, 3)) ==
          doctest::Approx(-std::log(4.0 * M_PI)).epsilon(1e-13));
  }
  SUBCASE("anisotropic value on an axis") {
    Eigen::MatrixXd lambda = Eigen::MatrixXd::Identity(3, 3);
    lambda(0, 0) = 4.0;
    const double want = -std::log(8.0 * M_PI) + 1.5 * std::log(4.0);
    CHECK(central_ag_log_pdf(x, lambda) == doctest::Approx(want).epsilon(1e-13));
  }
  SUBCASE("antipodal symmetry") {
    // Both points are built from the same raw vector so their coordinates
    // are exact negations; the densities must then agree bit for bit.
    Rng rng(33);
    for (int rep = 0; rep < 100; ++rep) {
      const LPParams p = LPParams::full(random_matrix(rng, 3));
      const Eigen::MatrixXd lambda = p.matrix() * p.matrix().transpose();
      const Eigen::VectorXd raw = rng.gaussian_vector(3);
      const SpherePoint pt{raw};
      const SpherePoint anti{-raw};
      CHECK(central_ag_log_pdf(pt, lambda) == central_ag_log_pdf(anti, lambda));
      CHECK(lp_log_density_update(pt, p) == lp_log_density_update(anti, p));
    }
  }
  SUBCASE("non-positive-definite covariance is rejected") {
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
    bad(2, 2) = -1.0;
    CHECK_THROWS_AS(central_ag_log_pdf(x, bad), InputError);
    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(central_ag_log_pdf(x, asym), InputError);
  }
}

TEST_CASE("projective gauge invariance of the density") {
  Rng rng(34);
  const Eigen::MatrixXd a = random_matrix(rng, 4);
  for (double c : {0.2, 3.0, 117.0}) {
    const LPParams base = LPParams::full(a);
    const LPParams scaled = LPParams::full(c * a);
    for (int i = 0; i < 50; ++i) {
      const SpherePoint x = uniform_sample(rng, 4);
      CHECK(lp_log_density_update(x, base) ==
            doctest::Approx(lp_log_density_update(x, scaled)).epsilon(1e-12));
    }
  }
}

TEST_CASE("density update matches the finite-difference oracle") {
  Rng rng(35);
  for (int dim : {3, 5}) {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      const LPParams p = LPParams::full(random_matrix(rng, dim));
      const auto inverse_map = [&p](const SpherePoint& q) { return lp_inverse(q, p); };
      for (int i = 0; i < 100; ++i) {
        const SpherePoint x = uniform_sample(rng, dim);
        // The update at x is the forward volume factor of the inverse map.
        const double analytic = std::exp(lp_log_density_update(x, p));
        const double numeric = numeric_density_update(inverse_map, x);
        worst = std::max(worst, std::abs(analytic - numeric) / numeric);
      }
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("constrained scales") {
  SUBCASE("interval endpoints and reciprocal symmetry") {
    const auto [lo, hi] = kent_constraint_interval(6.0, 3);
    CHECK(lo == doctest::Approx(std::sqrt(3.0) / 3.0).epsilon(1e-14));
    CHECK(hi == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
    for (double kappa : {0.01, 1.0, 444.0}) {
      const auto [l, h] = kent_constraint_interval(kappa, 5);
      CHECK(l * h == doctest::Approx(1.0).epsilon(1e-14));
    }
    // Vanishing concentration degenerates to the single point 1.
    const auto [l0, h0] = kent_constraint_interval(1e-12, 3);
    CHECK(h0 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(l0 == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("single-variable construction") {
    const LPParams id = make_constrained_sc(1.0, 10.0);
    CHECK((id.matrix() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);

    const LPParams p = make_constrained_sc(1.5, 100.0);
    CHECK(p.matrix()(0, 0) == doctest::Approx(1.5));
    CHECK(p.matrix()(1, 1) == doctest::Approx(1.0 / 1.5).epsilon(1e-14));
    CHECK(p.matrix()(2, 2) == doctest::Approx(1.0));
    CHECK(p.variant() == LPVariant::ConstrainedSc);
    CHECK(p.kappa() == doctest::Approx(100.0));
  }
  SUBCASE("violations are rejected") {
    CHECK_THROWS_AS(make_constrained_sc(10.0, 6.0), ConstraintError);
    CHECK_THROWS_AS(make_constrained_sc(0.05, 6.0), ConstraintError);
    Eigen::VectorXd sig(2);
    sig << 1.0, 3.0;
    CHECK_THROWS_AS(LPParams::constrained(sig, 6.0), ConstraintError);
  }
}

TEST_CASE("parameter validation") {
  Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(3, 3);
  singular(0, 0) = 1.0;
  CHECK_THROWS_AS(LPParams::full(singular), InputError);

  Eigen::VectorXd neg(3);
  neg << 1.0, -2.0, 1.0;
  CHECK_THROWS_AS(LPParams::diagonal(neg), InputError);
}
