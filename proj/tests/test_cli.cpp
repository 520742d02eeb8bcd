#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "zlpf/grid.hpp"
#include "zlpf/io.hpp"
#include "zlpf/presets.hpp"

using namespace zlpf;

namespace {

const std::string kCli = ZLPF_CLI_PATH;

std::string tmp_path(const std::string& name) { return "/tmp/zlpf_test_" + name; }

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

const char* kVmfSpec = R"({"dimension": 3, "preset": {"family": "vmf", "mu": [0, 0, 1], "kappa": 10}})";
const char* kUniformSpec = R"({"dimension": 3, "layers": []})";
const char* kBinghamSpec =
    R"({"dimension": 3, "preset": {"family": "bingham", "matrix": [[2.0, 0.3, 0], [0, 1.0, 0.1], [0.2, 0, 0.6]]}})";

}  // namespace

TEST_CASE("sample output shape and determinism") {
  write(tmp_path("vmf.json"), kVmfSpec);
  const std::string out1 = tmp_path("s1.csv");
  const std::string out2 = tmp_path("s2.csv");
  REQUIRE(run("sample --spec " + tmp_path("vmf.json") + " --n 1000 --seed 9 --out " + out1) == 0);
  REQUIRE(run("sample --spec " + tmp_path("vmf.json") + " --n 1000 --seed 9 --out " + out2) == 0);

  const SampleSet set = load_samples(out1);
  CHECK(set.points.size() == 1000);
  CHECK(set.log_prob.size() == 1000);
  for (const auto& p : set.points) CHECK(p.coords().norm() == doctest::Approx(1.0).epsilon(1e-12));

  // Identical seed, identical bytes.
  CHECK(slurp(out1) == slurp(out2));

  const std::string out3 = tmp_path("s3.csv");
  REQUIRE(run("sample --spec " + tmp_path("vmf.json") + " --n 1000 --seed 10 --out " + out3) == 0);
  CHECK(slurp(out1) != slurp(out3));
}

TEST_CASE("logprob round trip reproduces the sampler's column") {
  write(tmp_path("vmf.json"), kVmfSpec);
  const std::string sampled = tmp_path("rt1.csv");
  const std::string scored = tmp_path("rt2.csv");
  REQUIRE(run("sample --spec " + tmp_path("vmf.json") + " --n 500 --seed 4 --out " + sampled) == 0);
  REQUIRE(run("logprob --spec " + tmp_path("vmf.json") + " --points " + sampled + " --out " +
              scored) == 0);
  const SampleSet a = load_samples(sampled);
  const SampleSet b = load_samples(scored);
  REQUIRE(a.log_prob.size() == b.log_prob.size());
  for (std::size_t i = 0; i < a.log_prob.size(); ++i)
    CHECK(a.log_prob[i] == doctest::Approx(b.log_prob[i]).epsilon(1e-9));
}

TEST_CASE("logprob on a uniform spec is the constant") {
  write(tmp_path("uni.json"), kUniformSpec);
  write(tmp_path("vmf.json"), kVmfSpec);
  const std::string sampled = tmp_path("u1.csv");
  const std::string scored = tmp_path("u2.csv");
  REQUIRE(run("sample --spec " + tmp_path("vmf.json") + " --n 100 --seed 1 --out " + sampled) == 0);
  REQUIRE(run("logprob --spec " + tmp_path("uni.json") + " --points " + sampled + " --out " +
              scored) == 0);
  const SampleSet set = load_samples(scored);
  for (const double lp : set.log_prob)
    CHECK(lp == doctest::Approx(-std::log(4.0 * M_PI)).epsilon(1e-14));
}

TEST_CASE("bingham samples are antipodally balanced") {
  write(tmp_path("bing.json"), kBinghamSpec);
  const std::string out = tmp_path("b.csv");
  REQUIRE(run("sample --spec " + tmp_path("bing.json") + " --n 10000 --seed 3 --out " + out) == 0);
  const SampleSet set = load_samples(out);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  for (const auto& p : set.points) mean += p.coords();
  CHECK((mean / set.points.size()).norm() < 0.05);
}

TEST_CASE("grid export is constant for the uniform spec and quadrature is one") {
  write(tmp_path("uni.json"), kUniformSpec);
  const std::string out = tmp_path("g.csv");
  REQUIRE(run("grid --spec " + tmp_path("uni.json") + " --res 360 --out " + out) == 0);

  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("rows=180") != std::string::npos);
  CHECK(header.find("cols=360") != std::string::npos);
  double lo = 1e300, hi = -1e300;
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const double v = std::stod(tok);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  CHECK(rows == 180);
  CHECK(hi - lo < 1e-12);
  CHECK(hi == doctest::Approx(-std::log(4.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("grid quadrature of a vmf spec approaches one") {
  write(tmp_path("vmf.json"), kVmfSpec);
  const FlowChain chain = load_chain_spec(tmp_path("vmf.json"));
  const DensityGrid grid = compute_density_grid(chain, 720, 2);
  CHECK(grid_quadrature(grid) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("orthographic render centers the mode") {
  // Concentrated density at a known mean; a 2-degree window around it must
  // put the brightest pixel in the central cell.
  Eigen::VectorXd mu(3);
  mu << std::cos(0.4) * std::cos(1.1), std::cos(0.4) * std::sin(1.1), std::sin(0.4);
  const FlowChain chain = build_preset(KentPreset::from_u(mu, 1e4, 1.2));
  ProjectionOptions opts;
  opts.projection = Projection::Orthographic;
  opts.center_lon_deg = 1.1 * 180.0 / M_PI;
  opts.center_lat_deg = 0.4 * 180.0 / M_PI;
  opts.fov_deg = 2.0;
  const Raster raster = render_density(chain, 41, opts, 1);
  int best_r = -1, best_c = -1, best = -1;
  for (int r = 0; r < raster.height; ++r)
    for (int c = 0; c < raster.width; ++c) {
      const int v = raster.gray[r * raster.width + c];
      if (v > best) {
        best = v;
        best_r = r;
        best_c = c;
      }
    }
  CHECK(std::abs(best_r - 20) <= 1);
  CHECK(std::abs(best_c - 20) <= 1);
}

TEST_CASE("raster writers produce the documented formats") {
  write(tmp_path("vmf.json"), kVmfSpec);
  REQUIRE(run("grid --spec " + tmp_path("vmf.json") + " --res 64 --png " + tmp_path("img.pgm")) ==
          0);
  REQUIRE(run("grid --spec " + tmp_path("vmf.json") + " --res 64 --projection mollweide --png " +
              tmp_path("img.ppm")) == 0);
  CHECK(slurp(tmp_path("img.pgm")).substr(0, 2) == "P5");
  CHECK(slurp(tmp_path("img.ppm")).substr(0, 2) == "P6");
  CHECK(run("grid --spec " + tmp_path("vmf.json") + " --res 64 --png " + tmp_path("img.xyz")) ==
        2);
}

TEST_CASE("fit command round trip") {
  write(tmp_path("vmf.json"), kVmfSpec);
  write(tmp_path("cfg.json"), R"({"iterations": 300, "seed": 11})");
  const std::string data = tmp_path("fitdata.csv");
  const std::string fitted = tmp_path("fitted.json");
  REQUIRE(run("sample --spec " + tmp_path("vmf.json") + " --n 3000 --seed 5 --out " + data) == 0);
  REQUIRE(run("fit --family vmf --data " + data + " --config " + tmp_path("cfg.json") +
              " --out " + fitted) == 0);

  const FlowChain chain = load_chain_spec(fitted);
  double kappa = 0.0;
  for (const auto& layer : chain.layers())
    if (const auto* zoom = std::get_if<ZoomLayer>(&layer)) kappa = zoom->params.kappa;
  CHECK(std::abs(kappa - 10.0) / 10.0 < 0.1);

  // Loss trace accompanies the spec.
  const std::string trace = slurp(fitted + ".trace.csv");
  CHECK(trace.substr(0, 13) == "iteration,nll");
}

TEST_CASE("logprob of a bingham spec matches the angular Gaussian form") {
  write(tmp_path("bing.json"), kBinghamSpec);
  const std::string sampled = tmp_path("bo1.csv");
  const std::string scored = tmp_path("bo2.csv");
  REQUIRE(run("sample --spec " + tmp_path("bing.json") + " --n 300 --seed 8 --out " + sampled) ==
          0);
  REQUIRE(run("logprob --spec " + tmp_path("bing.json") + " --points " + sampled + " --out " +
              scored) == 0);

  Eigen::MatrixXd a(3, 3);
  a << 2.0, 0.3, 0.0, 0.0, 1.0, 0.1, 0.2, 0.0, 0.6;
  const LPParams p = LPParams::full(a);
  const Eigen::MatrixXd lambda = p.matrix() * p.matrix().transpose();
  const SampleSet set = load_samples(scored);
  for (std::size_t i = 0; i < set.points.size(); ++i)
    CHECK(set.log_prob[i] ==
          doctest::Approx(central_ag_log_pdf(set.points[i], lambda)).epsilon(1e-12));
}

TEST_CASE("single-sample fit completes with the concentration capped") {
  write(tmp_path("one.csv"), "x1,x2,x3\n0,0,1\n");
  write(tmp_path("onecfg.json"), R"({"iterations": 4000, "learning_rate": 0.05})");
  const std::string fitted = tmp_path("onefit.json");
  const std::string cmd = kCli + " fit --family vmf --data " + tmp_path("one.csv") +
                          " --config " + tmp_path("onecfg.json") + " --out " + fitted + " > " +
                          tmp_path("one.out") + " 2> " + tmp_path("one.err");
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(slurp(tmp_path("one.err")).find("warning") != std::string::npos);

  const FlowChain chain = load_chain_spec(fitted);
  double kappa = 0.0;
  for (const auto& layer : chain.layers())
    if (const auto* zoom = std::get_if<ZoomLayer>(&layer)) kappa = zoom->params.kappa;
  CHECK(kappa > 0.99e6);
}

TEST_CASE("error contracts") {
  SUBCASE("wrong-dimension points exit with the input-error code") {
    write(tmp_path("vmf.json"), kVmfSpec);
    write(tmp_path("d4.csv"), "x1,x2,x3,x4\n1,0,0,0\n");
    CHECK(run("logprob --spec " + tmp_path("vmf.json") + " --points " + tmp_path("d4.csv") +
              " --out /dev/null") == 2);
  }
  SUBCASE("off-sphere rows are rejected") {
    write(tmp_path("vmf.json"), kVmfSpec);
    write(tmp_path("bad.csv"), "x1,x2,x3\n1,1,1\n");
    CHECK(run("logprob --spec " + tmp_path("vmf.json") + " --points " + tmp_path("bad.csv") +
              " --out /dev/null") == 2);
  }
  SUBCASE("malformed specs are rejected") {
    write(tmp_path("broken.json"), "{nope");
    CHECK(run("sample --spec " + tmp_path("broken.json") + " --n 10 --seed 1 --out /dev/null") ==
          2);
    write(tmp_path("both.json"),
          R"({"dimension": 3, "layers": [], "preset": {"family": "vmf", "mu": [0,0,1], "kappa": 1}})");
    CHECK(run("sample --spec " + tmp_path("both.json") + " --n 10 --seed 1 --out /dev/null") == 2);
  }
  SUBCASE("missing flags are usage errors") {
    CHECK(run("sample --n 10") == 2);
  }
}

TEST_CASE("check command") {
  SUBCASE("uniform fast passes") {
    write(tmp_path("uni.json"), kUniformSpec);
    CHECK(run("check --spec " + tmp_path("uni.json") + " --level fast") == 0);
  }
  SUBCASE("kent full includes the tangent line and passes") {
    write(tmp_path("kent.json"),
          R"({"dimension": 3, "preset": {"family": "kent", "mu": [0,0,1], "kappa": 10000, "u": 1.5}})");
    const std::string cmd =
        kCli + " check --spec " + tmp_path("kent.json") + " --level full > " + tmp_path("check.out") + " 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    const std::string report = slurp(tmp_path("check.out"));
    CHECK(report.find("kent_tangent_gaussian") != std::string::npos);
    CHECK(report.find("FAIL") == std::string::npos);
  }
  SUBCASE("kent constraint violation is a verification failure") {
    write(tmp_path("kentbad.json"),
          R"({"dimension": 3, "preset": {"family": "kent", "mu": [0,0,1], "kappa": 6, "scales": [10.0, 0.1]}})");
    CHECK(run("check --spec " + tmp_path("kentbad.json") + " --level fast") == 4);
  }
}

TEST_CASE("chain serialization round trips through the application-order format") {
  write(tmp_path("kent.json"),
        R"({"dimension": 3, "preset": {"family": "kent", "mu": [0.6, 0, 0.8], "kappa": 50, "u": 1.2}})");
  const FlowChain chain = load_chain_spec(tmp_path("kent.json"));
  save_chain_spec(tmp_path("explicit.json"), chain);
  const FlowChain back = load_chain_spec(tmp_path("explicit.json"));

  REQUIRE(back.layers().size() == chain.layers().size());
  Rng rng(81);
  for (int i = 0; i < 100; ++i) {
    const SpherePoint x = uniform_sample(rng, 3);
    CHECK(back.log_prob(x) == doctest::Approx(chain.log_prob(x)).epsilon(1e-12));
    CHECK((back.forward(x).coords() - chain.forward(x).coords()).norm() < 1e-12);
  }

  // The marker is explicit in the written document.
  const std::string text = slurp(tmp_path("explicit.json"));
  CHECK(text.find("\"applies_first\": \"first\"") != std::string::npos);
}

TEST_CASE("applies_first marker controls layer orientation") {
  const char* first = R"({"dimension": 3, "applies_first": "first", "layers": [
    {"kind": "zoom", "kappa": 4.0},
    {"kind": "linear_project", "variant": "diagonal", "scales": [2.0, 0.7, 1.0]}]})";
  const char* last = R"({"dimension": 3, "applies_first": "last", "layers": [
    {"kind": "linear_project", "variant": "diagonal", "scales": [2.0, 0.7, 1.0]},
    {"kind": "zoom", "kappa": 4.0}]})";
  const FlowChain a = chain_from_json(first);
  const FlowChain b = chain_from_json(last);
  Rng rng(82);
  for (int i = 0; i < 50; ++i) {
    const SpherePoint x = uniform_sample(rng, 3);
    CHECK(a.log_prob(x) == doctest::Approx(b.log_prob(x)).epsilon(1e-14));
  }
}

TEST_CASE("grid respects the thread flag deterministically") {
  write(tmp_path("vmf.json"), kVmfSpec);
  const FlowChain chain = load_chain_spec(tmp_path("vmf.json"));
  const DensityGrid one = compute_density_grid(chain, 64, 1);
  const DensityGrid two = compute_density_grid(chain, 64, 2);
  CHECK((one.log_density - two.log_density).cwiseAbs().maxCoeff() == 0.0);
}
