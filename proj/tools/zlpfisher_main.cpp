// Command line surface for the spherical flow library: build and serialize
// chains, sample, evaluate log densities, export density grids and raster
// heatmaps, fit presets to data, and run the self-verification suite.
//
// Exit codes: 0 ok, 2 input error, 3 numerical divergence, 4 verification
// failure.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "zlpf/fit.hpp"
#include "zlpf/grid.hpp"
#include "zlpf/io.hpp"
#include "zlpf/presets.hpp"
#include "zlpf/rng.hpp"

namespace {

int thread_count(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("ZLP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

int cmd_sample(const std::string& spec, int n, std::uint64_t seed, const std::string& out) {
  const zlpf::FlowChain chain = zlpf::load_chain_spec(spec);
  zlpf::Rng rng(seed);
  const auto draws = chain.sample(rng, n);
  zlpf::SampleSet set;
  set.points.reserve(draws.size());
  set.log_prob.reserve(draws.size());
  for (const auto& d : draws) {
    set.points.push_back(d.point);
    set.log_prob.push_back(d.log_prob);
  }
  zlpf::save_samples(out, set);
  return 0;
}

int cmd_logprob(const std::string& spec, const std::string& points, const std::string& out) {
  const zlpf::FlowChain chain = zlpf::load_chain_spec(spec);
  zlpf::SampleSet set = zlpf::load_samples(points);
  for (const auto& p : set.points)
    if (p.dim() != chain.dim())
      throw zlpf::InputError("points file dimension does not match the chain spec");
  set.log_prob.clear();
  set.log_prob.reserve(set.points.size());
  for (const auto& p : set.points) set.log_prob.push_back(chain.log_prob(p));
  zlpf::save_samples(out, set);
  return 0;
}

int cmd_grid(const std::string& spec, int res, const std::string& projection, double center_lon,
             double center_lat, double fov, const std::string& out, const std::string& image,
             int threads) {
  const zlpf::FlowChain chain = zlpf::load_chain_spec(spec);
  if (!out.empty()) {
    const zlpf::DensityGrid grid = zlpf::compute_density_grid(chain, res, threads);
    zlpf::save_density_grid(out, grid);
  }
  if (!image.empty()) {
    zlpf::ProjectionOptions opts;
    if (projection == "equirect") {
      opts.projection = zlpf::Projection::Equirect;
    } else if (projection == "mollweide") {
      opts.projection = zlpf::Projection::Mollweide;
    } else if (projection == "ortho") {
      opts.projection = zlpf::Projection::Orthographic;
    } else {
      throw zlpf::InputError("projection must be equirect, mollweide or ortho");
    }
    opts.center_lon_deg = center_lon;
    opts.center_lat_deg = center_lat;
    opts.fov_deg = fov;
    zlpf::save_raster(image, zlpf::render_density(chain, res, opts, threads));
  }
  return 0;
}

int cmd_fit(const std::string& family, const std::string& data, const std::string& config,
            const std::string& out, const std::string& trace_path) {
  const zlpf::SampleSet set = zlpf::load_samples(data);
  const int dim = set.points.front().dim();
  zlpf::FitConfig cfg;
  if (!config.empty()) cfg = zlpf::load_fit_config(config);
  const auto model = zlpf::FamilyModel::make(zlpf::fit_family_from_name(family), dim);
  const zlpf::FitResult result = zlpf::fit(model, set.points, cfg);
  zlpf::save_chain_spec(out, result.chain);
  zlpf::save_loss_trace(trace_path.empty() ? out + ".trace.csv" : trace_path, result.trace);
  if (result.kappa_clamped)
    std::cerr << "warning: fitted concentration ended on its transform limit\n";
  std::cout << "fit: families=" << family << " n=" << set.points.size()
            << " best_nll=" << result.best_nll << "\n";
  return 0;
}

struct CheckReport {
  int failures = 0;

  void line(const std::string& name, bool pass, const std::string& detail) {
    std::printf("%-34s %s  %s\n", name.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++failures;
  }
};

int cmd_check(const std::string& spec, const std::string& level) {
  const bool full = level == "full";
  if (!full && level != "fast") throw zlpf::InputError("level must be fast or full");

  CheckReport report;
  zlpf::FlowChain chain(3, {});
  try {
    chain = zlpf::load_chain_spec(spec);
  } catch (const zlpf::ConstraintError& e) {
    report.line("constraints", false, e.what());
    return 4;
  }
  report.line("constraints", true, "all layer parameters admissible");

  zlpf::Rng rng(20240u);
  char detail[160];

  {  // round trip through the full chain (inverse after forward)
    const int n = full ? 1000 : 100;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const zlpf::SpherePoint x = zlpf::uniform_sample(rng, chain.dim());
      worst = std::max(worst,
                       (chain.inverse(chain.forward(x)).coords() - x.coords()).norm());
    }
    std::snprintf(detail, sizeof(detail), "max deviation %.2e over %d points (tol 1e-9)",
                  worst, n);
    report.line("round_trip", worst < 1e-9, detail);
  }

  {  // analytic density updates against the finite-difference oracle
    const int n = full ? 200 : 20;
    double worst = 0.0;
    for (const auto& layer : chain.layers()) {
      for (int i = 0; i < n; ++i) {
        const zlpf::SpherePoint x = zlpf::uniform_sample(rng, chain.dim());
        const double analytic = std::exp(zlpf::layer_log_det_forward(layer, x));
        const double numeric = zlpf::numeric_density_update(
            [&layer](const zlpf::SpherePoint& p) { return zlpf::layer_forward(layer, p); }, x);
        worst = std::max(worst, std::abs(analytic - numeric) / numeric);
      }
    }
    std::snprintf(detail, sizeof(detail),
                  "max relative error %.2e over %zu layers x %d points (tol 1e-5)", worst,
                  chain.layers().size(), n);
    report.line("jacobian_oracle", chain.layers().empty() || worst < 1e-5, detail);
  }

  {  // Monte Carlo normalization
    const int n = full ? 1000000 : 10000;
    double sum = 0.0, sumsq = 0.0;
    const double log_surface = zlpf::log_surface_volume(chain.dim());
    for (int i = 0; i < n; ++i) {
      const zlpf::SpherePoint x = zlpf::uniform_sample(rng, chain.dim());
      const double w = std::exp(chain.log_prob(x) + log_surface);
      sum += w;
      sumsq += w * w;
    }
    const double mean = sum / n;
    const double se = std::sqrt(std::max(sumsq / n - mean * mean, 0.0) / n);
    const bool pass = std::abs(mean - 1.0) <= 3.0 * se + 1e-9;
    std::snprintf(detail, sizeof(detail), "MC integral %.4f +- %.4f over %d samples", mean, se,
                  n);
    report.line("normalization", pass, detail);
    if (se > 0.1)
      std::printf("%-34s note  standard error is large; the density is very concentrated\n",
                  "");
  }

  // The tangent Gaussian limit applies to concentrated Kent-type specs.
  if (full) {
    const auto family = zlpf::spec_preset_family(spec);
    if (family && *family == "kent" && chain.dim() == 3) {
      double kappa = 0.0, u = 1.0;
      for (const auto& layer : chain.layers()) {
        if (const auto* zoom = std::get_if<zlpf::ZoomLayer>(&layer)) kappa = zoom->params.kappa;
        if (const auto* lp = std::get_if<zlpf::LinearProjectLayer>(&layer))
          if (lp->params.variant() == zlpf::LPVariant::ConstrainedSc)
            u = lp->params.matrix()(0, 0);
      }
      if (kappa >= 500.0) {
        const double err = zlpf::kent_tangent_gaussian_check(kappa, u, 60);
        std::snprintf(detail, sizeof(detail),
                      "max relative error %.2e vs tangent Gaussian (tol 2e-2)", err);
        report.line("kent_tangent_gaussian", err < 2e-2, detail);
      } else {
        report.line("kent_tangent_gaussian", true,
                    "skipped: concentration too low for the tangent limit");
      }
    }
  }

  std::printf("%d check(s) failed\n", report.failures);
  return report.failures == 0 ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ZLP-Fisher spherical normalizing flows"};
  app.require_subcommand(1);

  std::string spec, out, points, data, config, family, trace;
  std::string projection = "equirect";
  std::string level = "fast";
  std::string image;
  int n = 1000, res = 360, threads = 0;
  std::uint64_t seed = 0;
  double center_lon = 0.0, center_lat = 0.0, fov = 90.0;

  auto* sample = app.add_subcommand("sample", "Draw samples from a chain spec");
  sample->add_option("--spec", spec, "Chain spec file (JSON)")->required();
  sample->add_option("--n", n, "Number of samples")->required();
  sample->add_option("--seed", seed, "RNG seed");
  sample->add_option("--out", out, "Output CSV")->required();

  auto* logprob = app.add_subcommand("logprob", "Evaluate log densities at points");
  logprob->add_option("--spec", spec, "Chain spec file (JSON)")->required();
  logprob->add_option("--points", points, "Input CSV of unit vectors")->required();
  logprob->add_option("--out", out, "Output CSV with a logp column")->required();

  auto* grid = app.add_subcommand("grid", "Export a density grid and optional raster");
  grid->add_option("--spec", spec, "Chain spec file (JSON)")->required();
  grid->add_option("--res", res, "Grid resolution (longitude cells)");
  grid->add_option("--projection", projection, "equirect | mollweide | ortho");
  grid->add_option("--center", [&center_lon, &center_lat](const CLI::results_t& vals) {
    return std::sscanf(vals[0].c_str(), "%lf,%lf", &center_lon, &center_lat) == 2;
  }, "Orthographic center LON,LAT in degrees");
  grid->add_option("--fov", fov, "Orthographic field of view (degrees)");
  grid->add_option("--out", out, "Output density grid CSV");
  grid->add_option("--png", image, "Raster image output (.pgm or .ppm)");
  grid->add_option("--threads", threads, "Worker threads (ZLP_THREADS fallback)");

  auto* fit = app.add_subcommand("fit", "Maximum-likelihood fit of a family to data");
  fit->add_option("--family", family, "vmf|bingham|fb4|kent|fb6|fb8|generic")->required();
  fit->add_option("--data", data, "Input CSV of unit vectors")->required();
  fit->add_option("--config", config, "Fit config JSON (optional)");
  fit->add_option("--out", out, "Fitted chain spec output")->required();
  fit->add_option("--trace", trace, "Loss trace CSV (default <out>.trace.csv)");

  auto* check = app.add_subcommand("check", "Run the self-verification suite on a spec");
  check->add_option("--spec", spec, "Chain spec file (JSON)")->required();
  check->add_option("--level", level, "fast | full");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (sample->parsed()) return cmd_sample(spec, n, seed, out);
    if (logprob->parsed()) return cmd_logprob(spec, points, out);
    if (grid->parsed())
      return cmd_grid(spec, res, projection, center_lon, center_lat, fov, out, image,
                      thread_count(threads));
    if (fit->parsed()) return cmd_fit(family, data, config, out, trace);
    if (check->parsed()) return cmd_check(spec, level);
  } catch (const zlpf::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const zlpf::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const zlpf::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
