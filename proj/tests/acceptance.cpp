// Acceptance suite: one self-contained scenario per release criterion, each
// printing a PASS/FAIL line with the measured number against its pinned
// tolerance. The process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "zlpf/fit.hpp"
#include "zlpf/grid.hpp"
#include "zlpf/presets.hpp"
#include "zlpf/rng.hpp"

#include "grid_extrema.hpp"

using namespace zlpf;

namespace {

int g_failures = 0;

class Criterion {
 public:
  Criterion(int id, std::string title)
      : id_(id), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  void result(bool pass, const std::string& detail) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::printf("[%2d] %s  %-52s  %s (%.1f s)\n", id_, pass ? "PASS" : "FAIL", title_.c_str(),
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
  }

 private:
  int id_;
  std::string title_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

Eigen::VectorXd pole3() {
  Eigen::VectorXd v(3);
  v << 0.0, 0.0, 1.0;
  return v;
}

double vmf3_log_pdf(double kappa, double dot) {
  return std::log(kappa) - std::log(4.0 * M_PI) + std::log(2.0) -
         (kappa + std::log1p(-std::exp(-2.0 * kappa))) + kappa * dot;
}

Eigen::MatrixXd random_full_matrix(Rng& rng, int dim) {
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = 0.7 * rng.gaussian();
  return a + 1.5 * Eigen::MatrixXd::Identity(dim, dim);
}

// Blocks for deep generic stacks: near-identity maps whose distortions
// random-walk rather than compound, keeping the composed density within
// the resolution of Monte Carlo and grid verification.
GenericPreset mild_generic_preset(Rng& rng, int dim, int blocks) {
  GenericPreset preset;
  for (int k = 0; k < blocks; ++k) {
    GenericBlock block;
    block.rotation = rotation_to(uniform_sample(rng, dim)).matrix();
    block.kappa = 0.4 + 1.4 * rng.uniform();
    Eigen::MatrixXd a(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) a(i, j) = 0.15 * rng.gaussian();
    block.a = a + Eigen::MatrixXd::Identity(dim, dim);
    preset.blocks.push_back(block);
  }
  return preset;
}

// 1. vMF closed-form oracle at D = 3 across concentrations.
void criterion_vmf_oracle() {
  Criterion crit(1, "vMF closed-form log density, D=3");
  Rng rng(101);
  double worst = 0.0;
  for (const double kappa : {0.1, 10.0, 1e3, 1e6}) {
    const SpherePoint mu = uniform_sample(rng, 3);
    const FlowChain chain = build_preset(VmfPreset{mu.coords(), kappa});
    for (int i = 0; i < 1000; ++i) {
      const SpherePoint x = uniform_sample(rng, 3);
      const double oracle = vmf3_log_pdf(kappa, mu.coords().dot(x.coords()));
      worst = std::max(worst, std::abs(chain.log_prob(x) - oracle));
    }
  }
  crit.result(worst < 1e-8, fmt("max |err| %.2e (tol 1e-8)", worst));
}

// 2. D = 3 closed form of the axial map, and the generic odd-D route at
// D = 3 against it.
void criterion_closed_form() {
  Criterion crit(2, "axial map closed form at D=3");
  const double at_zero = h_forward(0.0, 1.0, 3);
  const double formula = 1.0 + std::log(0.5 + 0.5 * std::exp(-2.0));
  double worst_closed = std::abs(at_zero - formula);
  Rng rng(102);
  for (int i = 0; i < 500; ++i) {
    // Ranges where the literal reference expression is itself conditioned
    // to well below the pinned tolerance in double arithmetic.
    const double z = -0.999 + 1.998 * rng.uniform();
    const double kappa = std::exp(std::log(0.01) + rng.uniform() * std::log(100.0 / 0.01));
    const double y = 0.5 * (1.0 + z);
    const double direct = 1.0 + std::log(y + (1.0 - y) * std::exp(-2.0 * kappa)) / kappa;
    worst_closed = std::max(worst_closed, std::abs(h_forward(z, kappa, 3) - direct));
  }
  double worst_generic = 0.0;
  for (const double kappa : {0.2, 1.0, 30.0, 700.0}) {
    const ZoomKernel closed(3, kappa);
    const ZoomKernel generic(3, kappa, true);
    for (int i = 0; i < 250; ++i) {
      const double z = -0.999 + 1.998 * rng.uniform();
      worst_generic =
          std::max(worst_generic, std::abs(generic.h_forward(z) - closed.h_forward(z)));
    }
  }
  crit.result(worst_closed < 1e-12 && worst_generic < 1e-10,
              fmt("closed %.2e (tol 1e-12), finite-sum %.2e (tol 1e-10)", worst_closed,
                  worst_generic));
}

// 3. Single-layer linear-project density equals the central angular
// Gaussian standard form.
void criterion_central_ag() {
  Criterion crit(3, "central angular Gaussian oracle");
  Rng rng(103);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd a = random_full_matrix(rng, 3);
    const FlowChain chain = build_preset(BinghamPreset{a});
    const LPParams params = LPParams::full(a);
    const Eigen::MatrixXd lambda = params.matrix() * params.matrix().transpose();
    for (int i = 0; i < 1000; ++i) {
      const SpherePoint x = uniform_sample(rng, 3);
      worst = std::max(worst, std::abs(chain.log_prob(x) - central_ag_log_pdf(x, lambda)));
    }
  }
  crit.result(worst < 1e-12, fmt("max |err| %.2e (tol 1e-12)", worst));
}

// 4. Normalization of all seven family presets: Monte Carlo within three
// standard errors, grid quadrature within 1e-3.
void criterion_normalization() {
  Criterion crit(4, "normalization of the seven families");
  Rng rng(104);

  const auto random_mu = [&rng] { return uniform_sample(rng, 3).coords(); };
  const auto random_kent_scales = [&rng](double kappa) {
    const auto [lo, hi] = kent_constraint_interval(kappa, 3);
    const double u = std::exp(0.7 * std::log(hi) * (2.0 * rng.uniform() - 1.0));
    Eigen::VectorXd s(2);
    s << u, 1.0 / u;
    return s;
  };

  bool pass = true;
  std::string note;
  double worst_sigma = 0.0, worst_grid = 0.0;
  for (int family = 0; family < 7; ++family) {
    for (int draw = 0; draw < 5; ++draw) {
      const double kappa = std::exp(std::log(0.5) + rng.uniform() * std::log(80.0 / 0.5));
      FamilyPreset preset = VmfPreset{random_mu(), kappa};
      switch (family) {
        case 0:
          break;
        case 1:
          preset = BinghamPreset{random_full_matrix(rng, 3)};
          break;
        case 2:
          preset = Fb4Preset{random_mu(), kappa,
                             Eigen::VectorXd::Constant(2, 0.6 + rng.uniform()), true};
          break;
        case 3:
          preset = KentPreset{random_mu(), kappa, random_kent_scales(kappa)};
          break;
        case 4:
          preset = Fb6Preset{random_mu(), kappa, random_kent_scales(kappa),
                             Eigen::VectorXd::Constant(2, 0.6 + rng.uniform())};
          break;
        case 5:
          preset = Fb8Preset{random_mu(), kappa, random_kent_scales(kappa),
                             random_full_matrix(rng, 3)};
          break;
        case 6:
          preset = mild_generic_preset(rng, 3, 15);
          break;
      }
      const FlowChain chain = build_preset(preset);

      const int n = 1000000;
      double sum = 0.0, sumsq = 0.0;
      for (int i = 0; i < n; ++i) {
        const SpherePoint x = uniform_sample(rng, 3);
        const double w = 4.0 * M_PI * std::exp(chain.log_prob(x));
        sum += w;
        sumsq += w * w;
      }
      const double mean = sum / n;
      const double se = std::sqrt(std::max(sumsq / n - mean * mean, 0.0) / n);
      const double sigmas = std::abs(mean - 1.0) / std::max(se, 1e-12);
      worst_sigma = std::max(worst_sigma, sigmas);
      if (sigmas > 3.0) {
        pass = false;
        note = "MC outside 3 standard errors for " + preset_family_name(preset);
      }

      const double quad = grid_quadrature(compute_density_grid(chain, 1440, 2));
      worst_grid = std::max(worst_grid, std::abs(quad - 1.0));
      if (std::abs(quad - 1.0) > 1e-3) {
        pass = false;
        note = "grid quadrature off for " + preset_family_name(preset);
      }
    }
  }
  crit.result(pass, fmt("worst MC deviation %.2f sigma, worst grid |err| %.2e (tol 1e-3)",
                        worst_sigma, worst_grid) +
                        (note.empty() ? "" : "; " + note));
}

// 5. Chain round trips through deep generic stacks in several dimensions.
void criterion_round_trip() {
  Criterion crit(5, "round trips, generic 45-layer chains");
  Rng rng(105);
  double worst = 0.0;
  for (const int dim : {3, 4, 5, 11}) {
    const FlowChain chain = build_preset(mild_generic_preset(rng, dim, 15));
    const int n = dim == 4 ? 250 : 1000;  // quadrature-backed layers are slower
    for (int i = 0; i < n; ++i) {
      const SpherePoint x = uniform_sample(rng, dim);
      worst = std::max(worst, (chain.inverse(chain.forward(x)).coords() - x.coords()).norm());
    }
  }
  crit.result(worst < 1e-9, fmt("max deviation %.2e (tol 1e-9)", worst));
}

// 6. Stability of the axial map at D = 100, kappa = 2e6.
void criterion_stability() {
  Criterion crit(6, "stability regime D=100, kappa=2e6");
  const ZoomKernel kernel(100, 2e6);
  Rng rng(106);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = uniform_sample(rng, 100).last();
    worst = std::max(worst, std::abs(kernel.h_inverse(kernel.h_forward(t)) - t));
  }
  crit.result(worst < 1e-6, fmt("max round-trip error %.2e (tol 1e-6)", worst));
}

// 7. Pole contraction factor against the scaling constant.
void criterion_scaling_limit() {
  Criterion crit(7, "pole contraction factor at kappa=1e6");
  double worst = 0.0;
  for (const int dim : {3, 5}) {
    const double kappa = 1e6;
    const ZoomKernel kernel(dim, kappa);
    const double want = pole_scale_factor(dim, kappa);
    for (const double rho : {1e-5, 3e-5, 1e-4}) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
      x[0] = std::sin(rho);
      x[dim - 1] = std::cos(rho);
      const SpherePoint image = kernel.apply_forward(SpherePoint(x));
      const double rho_out = std::atan2(image[0], image.last());
      worst = std::max(worst, std::abs(rho_out / rho - want) / want);
    }
  }
  crit.result(worst < 1e-3, fmt("max relative deviation %.2e (tol 1e-3)", worst));
}

// 8. Kent tangent-Gaussian limit and unimodality.
void criterion_kent_tangent() {
  Criterion crit(8, "Kent tangent Gaussian and unimodality");
  const double err_round = kent_tangent_gaussian_check(1e4, 1.0, 80);
  const double err_aniso = kent_tangent_gaussian_check(1e4, 1.5, 80);

  Rng rng(108);
  int bad_grids = 0;
  // The short tangent axis must span a few grid cells for the strict
  // neighborhood count to see one bump rather than an aliased ridge.
  const double cell = M_PI / 360.0;
  for (int draw = 0; draw < 20; ++draw) {
    const double kappa = std::exp(std::log(5.0) + rng.uniform() * std::log(500.0 / 5.0));
    const auto [lo, hi] = kent_constraint_interval(kappa, 3);
    double u = 1.0;
    do {
      u = std::exp(0.8 * std::log(hi) * (2.0 * rng.uniform() - 1.0));
    } while (std::min(u, 1.0 / u) < 4.0 * cell * std::sqrt(kappa));
    const double lat = (2.0 * rng.uniform() - 1.0) * M_PI / 3.0;
    const double lon = 2.0 * M_PI * rng.uniform();
    Eigen::VectorXd mu(3);
    mu << std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat);
    Eigen::VectorXd scales(2);
    scales << u, 1.0 / u;
    const FlowChain chain = build_preset(KentPreset{mu, kappa, scales});

    const auto [maxima, minima] =
        zlpf_test::extrema_clusters(zlpf_test::density_grid(chain, 360, 720));
    if (maxima != 1 || minima != 1) ++bad_grids;
  }

  const bool pass = err_round < 2e-2 && err_aniso < 2e-2 && bad_grids == 0;
  crit.result(pass, fmt("tangent errors %.2e / %.2e (tol 2e-2)", err_round, err_aniso) +
                        (bad_grids ? "; " + std::to_string(bad_grids) + " multimodal grids"
                                   : ", 20/20 grids unimodal"));
}

// 9. Every layer's analytic update against the finite-difference oracle.
void criterion_fd_oracle() {
  Criterion crit(9, "finite-difference Jacobian oracle per layer");
  Rng rng(109);
  double worst = 0.0;

  for (int i = 0; i < 1000; ++i) {  // zoom layers, mixed dimensions
    const int dim = (i % 2 == 0) ? 3 : 5;
    const double kappa = std::exp(std::log(0.1) + rng.uniform() * std::log(1e3 / 0.1));
    const ZoomKernel kernel(dim, kappa);
    const SpherePoint x = uniform_sample(rng, dim);
    const double analytic = std::exp(kernel.log_density_update(x.last()));
    const double numeric = numeric_density_update(
        [&kernel](const SpherePoint& p) { return kernel.apply_forward(p); }, x);
    worst = std::max(worst, std::abs(analytic - numeric) / numeric);
  }
  for (int i = 0; i < 1000; ++i) {  // linear-project layers
    const int dim = (i % 2 == 0) ? 3 : 5;
    const LPParams p = LPParams::full(random_full_matrix(rng, dim));
    const SpherePoint x = uniform_sample(rng, dim);
    const double analytic = std::exp(lp_log_density_update(x, p));
    const double numeric = numeric_density_update(
        [&p](const SpherePoint& q) { return lp_inverse(q, p); }, x);
    worst = std::max(worst, std::abs(analytic - numeric) / numeric);
  }
  for (int i = 0; i < 1000; ++i) {  // rotations
    const Rotation r = rotation_to(uniform_sample(rng, 3));
    const SpherePoint x = uniform_sample(rng, 3);
    const double numeric = numeric_density_update(
        [&r](const SpherePoint& p) { return r.apply(p); }, x);
    worst = std::max(worst, std::abs(1.0 - numeric));
  }
  crit.result(worst < 1e-5, fmt("max relative error %.2e (tol 1e-5)", worst));
}

// 10. Parameter recovery by maximum likelihood.
void criterion_recovery() {
  Criterion crit(10, "parameter recovery, vMF and Kent");
  Rng rng(110);

  // vMF: kappa within 10 percent, mean within arccos(0.9999).
  const SpherePoint mu = uniform_sample(rng, 3);
  const double kappa_true = 50.0;
  const FlowChain vmf_truth = build_preset(VmfPreset{mu.coords(), kappa_true});
  std::vector<SpherePoint> vmf_data;
  {
    Rng sampler(1100);
    for (const auto& d : vmf_truth.sample(sampler, 10000)) vmf_data.push_back(d.point);
  }
  FitConfig cfg;
  cfg.iterations = 800;
  cfg.seed = 17;
  const auto vmf_model = FamilyModel::make(FitFamily::Vmf, 3);
  const FitResult vmf_fit = fit(vmf_model, vmf_data, cfg);
  double kappa_hat = 0.0;
  Eigen::VectorXd mu_hat = pole3();
  for (const auto& layer : vmf_fit.chain.layers()) {
    if (const auto* zoom = std::get_if<ZoomLayer>(&layer)) kappa_hat = zoom->params.kappa;
    if (const auto* rot = std::get_if<RotationLayer>(&layer))
      mu_hat = rot->rot.matrix().col(2);
  }
  const double kappa_rel = std::abs(kappa_hat - kappa_true) / kappa_true;
  const double mu_dot = mu_hat.dot(mu.coords());

  // Kent: tangent standard deviations within 15 percent (up to the axis
  // permutation symmetry of the fitted frame).
  const double kent_kappa = 200.0, kent_u = 1.4;
  const FlowChain kent_truth =
      build_preset(KentPreset::from_u(mu.coords(), kent_kappa, kent_u));
  std::vector<SpherePoint> kent_data;
  {
    Rng sampler(1101);
    for (const auto& d : kent_truth.sample(sampler, 10000)) kent_data.push_back(d.point);
  }
  FitConfig kent_cfg;
  kent_cfg.iterations = 1200;
  kent_cfg.seed = 23;
  const auto kent_model = FamilyModel::make(FitFamily::Kent, 3);
  const FitResult kent_fit = fit(kent_model, kent_data, kent_cfg);
  double kent_kappa_hat = 0.0;
  Eigen::VectorXd kent_scales = Eigen::VectorXd::Ones(2);
  for (const auto& layer : kent_fit.chain.layers()) {
    if (const auto* zoom = std::get_if<ZoomLayer>(&layer)) kent_kappa_hat = zoom->params.kappa;
    if (const auto* lp = std::get_if<LinearProjectLayer>(&layer))
      kent_scales = lp->params.matrix().diagonal().head(2);
  }
  double st_true[2] = {kent_u / std::sqrt(kent_kappa), 1.0 / (kent_u * std::sqrt(kent_kappa))};
  double st_hat[2] = {kent_scales[0] / std::sqrt(kent_kappa_hat),
                      kent_scales[1] / std::sqrt(kent_kappa_hat)};
  if (st_hat[0] < st_hat[1]) std::swap(st_hat[0], st_hat[1]);
  const double kent_rel = std::max(std::abs(st_hat[0] - st_true[0]) / st_true[0],
                                   std::abs(st_hat[1] - st_true[1]) / st_true[1]);

  const bool pass = kappa_rel < 0.10 && mu_dot > 0.9999 && kent_rel < 0.15;
  crit.result(pass, fmt("vMF kappa err %.1f%%, mean dot %.6f", 100.0 * kappa_rel, mu_dot) +
                        fmt(", Kent sigma_t err %.1f%% (tols 10%%/0.9999/15%%)",
                            100.0 * kent_rel));
}

// 11. The Kent layer order is essential: reversing it changes the density.
void criterion_order_witness() {
  Criterion crit(11, "layer-order sensitivity witness");
  const double kappa = 100.0, u = 1.5;
  std::vector<LayerSpec> kent_order, reversed;
  kent_order.emplace_back(LinearProjectLayer(make_constrained_sc(u, kappa)));
  kent_order.emplace_back(ZoomLayer(ZoomParams(kappa, 3)));
  reversed.emplace_back(ZoomLayer(ZoomParams(kappa, 3)));
  reversed.emplace_back(LinearProjectLayer(make_constrained_sc(u, kappa)));
  const FlowChain a(3, std::move(kent_order));
  const FlowChain b(3, std::move(reversed));
  Rng rng(111);
  double max_diff = 0.0;
  for (int i = 0; i < 5000; ++i) {
    const SpherePoint x = uniform_sample(rng, 3);
    max_diff = std::max(max_diff, std::abs(a.log_prob(x) - b.log_prob(x)));
  }
  crit.result(max_diff > 1e-3, fmt("max |log difference| %.2e (require > 1e-3)", max_diff));
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 2 && std::strcmp(argv[1], "--criterion") == 0) only = std::atoi(argv[2]);

  using Fn = void (*)();
  const Fn criteria[] = {criterion_vmf_oracle,   criterion_closed_form,
                         criterion_central_ag,   criterion_normalization,
                         criterion_round_trip,   criterion_stability,
                         criterion_scaling_limit, criterion_kent_tangent,
                         criterion_fd_oracle,    criterion_recovery,
                         criterion_order_witness};
  const int count = static_cast<int>(sizeof(criteria) / sizeof(criteria[0]));
  for (int i = 0; i < count; ++i) {
    if (only != 0 && only != i + 1) continue;
    criteria[i]();
  }
  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return 1;
}
