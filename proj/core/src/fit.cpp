#include "zlpf/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zlpf/rng.hpp"
#include "zlpf/special.hpp"

namespace zlpf {

namespace {

// Concentration transform kappa = exp(theta), clamped so no parameter vector
// can decode outside the supported envelope.
constexpr double kLogKappaLimit = 13.815510557964274;  // ln 1e6

double decode_kappa(double theta) {
  return std::exp(std::clamp(theta, -kLogKappaLimit, kLogKappaLimit));
}

int rot_size(int d) { return d * (d - 1) / 2; }

// Blocks per family, in decode order.
struct Layout {
  int rot = 0;          // skew parameters of the leading rotation
  int kappa = 0;        // log concentration
  int sigma_c = 0;      // tanh-interval Kent scales
  int shared_sigma = 0; // single log scale (fb4)
  int inner_diag = 0;   // log scales of a diagonal linear-project
  int full_diag = 0;    // log scales of the full-matrix factor
  int full_lower = 0;   // strict lower triangle of the unit-diagonal factor
  int repeats = 1;

  int per_block() const {
    return rot + kappa + sigma_c + shared_sigma + inner_diag + full_diag + full_lower;
  }
  int total() const { return per_block() * repeats; }
};

Layout layout_for(FitFamily family, int d, int generic_n) {
  Layout l;
  switch (family) {
    case FitFamily::Vmf:
      l.rot = rot_size(d);
      l.kappa = 1;
      break;
    case FitFamily::Bingham:
      l.full_diag = d;
      l.full_lower = rot_size(d);
      break;
    case FitFamily::Fb4:
      l.rot = rot_size(d);
      l.kappa = 1;
      l.shared_sigma = 1;
      break;
    case FitFamily::Kent:
      l.rot = rot_size(d);
      l.kappa = 1;
      l.sigma_c = d - 1;
      break;
    case FitFamily::Fb6:
      l.rot = rot_size(d);
      l.kappa = 1;
      l.sigma_c = d - 1;
      l.inner_diag = d - 1;
      break;
    case FitFamily::Fb8:
      l.rot = rot_size(d);
      l.kappa = 1;
      l.sigma_c = d - 1;
      l.full_diag = d;
      l.full_lower = rot_size(d);
      break;
    case FitFamily::Generic:
      l.rot = rot_size(d);
      l.kappa = 1;
      l.full_diag = d;
      l.full_lower = rot_size(d);
      l.repeats = generic_n;
      break;
    case FitFamily::RotationOnly:
      l.rot = rot_size(d);
      break;
  }
  return l;
}

Eigen::MatrixXd full_matrix_from(const Eigen::VectorXd& diag_log,
                                 const Eigen::VectorXd& lower, int d) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Identity(d, d);
  int k = 0;
  for (int i = 1; i < d; ++i)
    for (int j = 0; j < i; ++j) l(i, j) = lower[k++];
  // Gauge-fix in the log domain (zero-mean scales give det = 1 exactly), so
  // extreme parameter vectors cannot produce a nominally singular matrix.
  Eigen::VectorXd s(d);
  for (int i = 0; i < d; ++i) s[i] = std::clamp(diag_log[i], -30.0, 30.0);
  s.array() -= s.mean();
  Eigen::VectorXd scales(d);
  for (int i = 0; i < d; ++i) scales[i] = std::exp(std::clamp(s[i], -30.0, 30.0));
  return scales.asDiagonal() * l;
}

Eigen::VectorXd kent_sigmas_from(const Eigen::VectorXd& theta, double kappa, int d) {
  // tanh saturates to exactly +-1 for |theta| > ~19, which would land on
  // the open interval's boundary; the margin keeps decode total.
  const auto [lo, hi] = kent_constraint_interval(kappa, d);
  const double log_hi = std::log(hi) * (1.0 - 1e-9);
  Eigen::VectorXd sigmas(d - 1);
  for (int i = 0; i < d - 1; ++i) sigmas[i] = std::exp(std::tanh(theta[i]) * log_hi);
  return sigmas;
}

}  // namespace

FitFamily fit_family_from_name(const std::string& name) {
  if (name == "vmf") return FitFamily::Vmf;
  if (name == "bingham") return FitFamily::Bingham;
  if (name == "fb4") return FitFamily::Fb4;
  if (name == "kent") return FitFamily::Kent;
  if (name == "fb6") return FitFamily::Fb6;
  if (name == "fb8") return FitFamily::Fb8;
  if (name == "generic") return FitFamily::Generic;
  if (name == "rotation_only") return FitFamily::RotationOnly;
  throw InputError("unknown family: " + name);
}

FamilyModel::FamilyModel(FitFamily family, int dim, int generic_n)
    : family_(family), dim_(dim), generic_n_(generic_n) {
  if (dim < 2) throw InputError("FamilyModel: dimension must be at least 2");
  if (family == FitFamily::Generic && generic_n < 1)
    throw InputError("FamilyModel: generic repeat count must be positive");
  param_count_ = layout_for(family, dim, generic_n).total();
}

FamilyModel FamilyModel::make(FitFamily family, int dim, int generic_n) {
  return FamilyModel(family, dim, generic_n);
}

FlowChain FamilyModel::decode(const Eigen::VectorXd& theta) const {
  if (theta.size() != param_count_) throw InputError("FamilyModel::decode: wrong parameter count");
  const Layout l = layout_for(family_, dim_, generic_n_);
  const int d = dim_;

  std::vector<LayerSpec> layers;
  int off = 0;
  for (int rep = 0; rep < l.repeats; ++rep) {
    if (l.rot > 0) {
      layers.emplace_back(RotationLayer(rotation_from_skew(theta.segment(off, l.rot), d)));
      off += l.rot;
    }
    double kappa = 0.0;
    if (l.kappa > 0) {
      kappa = decode_kappa(theta[off]);
      off += 1;
    }
    if (l.sigma_c > 0) {
      layers.emplace_back(
          LinearProjectLayer(LPParams::constrained(kent_sigmas_from(theta.segment(off, l.sigma_c), kappa, d), kappa)));
      off += l.sigma_c;
    }
    if (l.kappa > 0) layers.emplace_back(ZoomLayer(ZoomParams(kappa, d)));
    if (l.shared_sigma > 0) {
      const double sigma = std::exp(std::clamp(theta[off], -30.0, 30.0));
      off += 1;
      Eigen::VectorXd diag = Eigen::VectorXd::Constant(d, sigma);
      diag[d - 1] = 1.0;
      layers.emplace_back(LinearProjectLayer(LPParams::diagonal(std::move(diag))));
    }
    if (l.inner_diag > 0) {
      Eigen::VectorXd diag(d);
      for (int i = 0; i < d - 1; ++i)
        diag[i] = std::exp(std::clamp(theta[off + i], -30.0, 30.0));
      diag[d - 1] = 1.0;
      off += l.inner_diag;
      layers.emplace_back(LinearProjectLayer(LPParams::diagonal(std::move(diag))));
    }
    if (l.full_diag > 0) {
      const Eigen::VectorXd diag_log = theta.segment(off, l.full_diag);
      off += l.full_diag;
      const Eigen::VectorXd lower = theta.segment(off, l.full_lower);
      off += l.full_lower;
      layers.emplace_back(LinearProjectLayer(LPParams::full(full_matrix_from(diag_log, lower, d))));
    }
  }
  return FlowChain(d, std::move(layers));
}

Eigen::VectorXd FamilyModel::encode_vmf(const Eigen::VectorXd& mu, double kappa) const {
  if (family_ != FitFamily::Vmf) throw InputError("encode_vmf: model is not the vmf family");
  Eigen::VectorXd theta(param_count_);
  theta.head(rot_size(dim_)) = skew_params(rotation_to(SpherePoint(mu)));
  theta[param_count_ - 1] = std::log(std::clamp(kappa, 1e-6, 1e6));
  return theta;
}

Eigen::VectorXd FamilyModel::init_from_data(const std::vector<SpherePoint>& samples) const {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(param_count_);
  const Layout l = layout_for(family_, dim_, generic_n_);
  if (l.rot == 0 || l.kappa == 0 || samples.empty()) return theta;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim_);
  for (const auto& s : samples) mean += s.coords();
  mean /= static_cast<double>(samples.size());
  const double rbar = std::clamp(mean.norm(), 1e-10, 1.0 - 1e-10);

  Eigen::VectorXd rot0;
  if (rbar > 1e-6) {
    rot0 = skew_params(rotation_to(SpherePoint(mean)));
  } else {
    rot0 = Eigen::VectorXd::Zero(l.rot);
  }
  // Mean-resultant-length estimate of the concentration.
  const double kappa0 =
      std::clamp(rbar * (dim_ - rbar * rbar) / (1.0 - rbar * rbar), 1e-3, 1e5);

  theta.segment(0, l.rot) = rot0;
  theta[l.rot] = std::log(kappa0);
  return theta;
}

std::vector<bool> FamilyModel::analytic_mask() const {
  std::vector<bool> mask(param_count_, false);
  if (family_ == FitFamily::Vmf) mask[param_count_ - 1] = true;  // concentration
  if (family_ == FitFamily::RotationOnly) mask.assign(param_count_, true);
  return mask;
}

Eigen::VectorXd FamilyModel::analytic_gradient(const Eigen::VectorXd& theta,
                                               const std::vector<SpherePoint>& samples) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(param_count_);
  if (samples.empty()) return grad;
  if (family_ == FitFamily::RotationOnly) return grad;  // uniform density: exactly zero
  if (family_ != FitFamily::Vmf) return grad;

  const double theta_k = theta[param_count_ - 1];
  if (std::abs(theta_k) >= kLogKappaLimit) return grad;  // clamped: flat
  const double kappa = std::exp(theta_k);
  const Rotation rot = rotation_from_skew(theta.head(rot_size(dim_)), dim_);
  const Eigen::VectorXd mu = rot.matrix().col(dim_ - 1);

  double mean_dot = 0.0;
  for (const auto& s : samples) mean_dot += mu.dot(s.coords());
  mean_dot /= static_cast<double>(samples.size());

  // d/dkappa ln C_D(kappa) = -I_{D/2}(kappa) / I_{D/2-1}(kappa).
  const double resultant =
      std::exp(log_bessel_i(0.5 * dim_, kappa) - log_bessel_i(0.5 * dim_ - 1.0, kappa));
  grad[param_count_ - 1] = kappa * (resultant - mean_dot);
  return grad;
}

bool FamilyModel::kappa_clamped(const Eigen::VectorXd& theta) const {
  const Layout l = layout_for(family_, dim_, generic_n_);
  if (l.kappa == 0) return false;
  int off = 0;
  for (int rep = 0; rep < l.repeats; ++rep) {
    if (std::abs(theta[off + l.rot]) >= kLogKappaLimit - 1e-9) return true;
    off += l.per_block();
  }
  return false;
}

double nll(const FamilyModel& model, const Eigen::VectorXd& theta,
           const std::vector<SpherePoint>& samples) {
  if (samples.empty()) throw InputError("nll: need at least one sample");
  const FlowChain chain = model.decode(theta);
  double acc = 0.0;
  for (const auto& s : samples) acc -= chain.log_prob(s);
  return acc / static_cast<double>(samples.size());
}

namespace {

Eigen::VectorXd numeric_gradient(const FamilyModel& model, const Eigen::VectorXd& theta,
                                 const std::vector<SpherePoint>& samples, double step) {
  Eigen::VectorXd grad(theta.size());
  Eigen::VectorXd probe = theta;
  for (int j = 0; j < theta.size(); ++j) {
    const double saved = probe[j];
    probe[j] = saved + step;
    const double up = nll(model, probe, samples);
    probe[j] = saved - step;
    const double dn = nll(model, probe, samples);
    probe[j] = saved;
    grad[j] = (up - dn) / (2.0 * step);
  }
  return grad;
}

struct SingleFit {
  Eigen::VectorXd theta;
  std::vector<double> trace;
  double best_nll;
};

SingleFit run_single(const FamilyModel& model, const std::vector<SpherePoint>& samples,
                     const FitConfig& cfg, Eigen::VectorXd theta, Rng& rng) {
  const double uniform_baseline = -uniform_log_density(model.dim());
  const bool use_analytic = std::holds_alternative<AnalyticWhereAvailable>(cfg.gradient);
  const double fd_step =
      use_analytic ? 1e-5 : std::get<CentralDifference>(cfg.gradient).step;
  const std::vector<bool> mask = use_analytic ? model.analytic_mask() : std::vector<bool>();

  const int n = static_cast<int>(samples.size());
  const bool minibatch = cfg.batch_size > 0 && cfg.batch_size < n;

  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());

  SingleFit result{theta, {}, std::numeric_limits<double>::infinity()};

  for (int it = 1; it <= cfg.iterations; ++it) {
    const std::vector<SpherePoint>* batch = &samples;
    std::vector<SpherePoint> scratch;
    if (minibatch) {
      scratch.reserve(cfg.batch_size);
      for (int i = 0; i < cfg.batch_size; ++i)
        scratch.push_back(samples[rng.below(static_cast<std::uint64_t>(n))]);
      batch = &scratch;
    }

    const double current = nll(model, theta, *batch);
    result.trace.push_back(current);
    if (current > uniform_baseline + 10.0)
      throw DivergenceError("fit: objective exceeded the uniform baseline by 10 nats");
    if (current < result.best_nll) {
      result.best_nll = current;
      result.theta = theta;
    }

    Eigen::VectorXd grad;
    if (use_analytic) {
      grad = model.analytic_gradient(theta, *batch);
      // Coordinates without an analytic formula fall back to differences.
      Eigen::VectorXd probe = theta;
      for (int j = 0; j < theta.size(); ++j) {
        if (mask[j]) continue;
        const double saved = probe[j];
        probe[j] = saved + fd_step;
        const double up = nll(model, probe, *batch);
        probe[j] = saved - fd_step;
        const double dn = nll(model, probe, *batch);
        probe[j] = saved;
        grad[j] = (up - dn) / (2.0 * fd_step);
      }
    } else {
      grad = numeric_gradient(model, theta, *batch, fd_step);
    }

    if (const auto* adam = std::get_if<AdamLike>(&cfg.optimizer)) {
      m = adam->beta1 * m + (1.0 - adam->beta1) * grad;
      v = adam->beta2 * v + (1.0 - adam->beta2) * grad.cwiseProduct(grad);
      const double m_corr = 1.0 - std::pow(adam->beta1, it);
      const double v_corr = 1.0 - std::pow(adam->beta2, it);
      for (int j = 0; j < theta.size(); ++j)
        theta[j] -= cfg.learning_rate * (m[j] / m_corr) /
                    (std::sqrt(v[j] / v_corr) + adam->epsilon);
    } else {
      theta -= cfg.learning_rate * grad;
    }
  }

  const double final_nll = nll(model, theta, samples);
  result.trace.push_back(final_nll);
  if (final_nll < result.best_nll) {
    result.best_nll = final_nll;
    result.theta = theta;
  }
  return result;
}

}  // namespace

FitResult fit(const FamilyModel& model, const std::vector<SpherePoint>& samples,
              const FitConfig& cfg) {
  if (samples.empty()) throw InputError("fit: need at least one sample");
  for (const auto& s : samples)
    if (s.dim() != model.dim()) throw InputError("fit: sample dimension mismatch");
  if (cfg.iterations < 1) throw InputError("fit: iterations must be at least 1");
  if (const auto* cd = std::get_if<CentralDifference>(&cfg.gradient))
    if (!(cd->step >= 1e-7 && cd->step <= 1e-3))
      throw InputError("fit: difference step must lie in [1e-7, 1e-3]");

  int starts = cfg.multistart;
  if (starts <= 0) starts = (model.family() == FitFamily::Generic) ? 4 : 1;

  SingleFit best;
  best.best_nll = std::numeric_limits<double>::infinity();
  for (int s = 0; s < starts; ++s) {
    Rng rng(cfg.seed + 1000003ULL * static_cast<std::uint64_t>(s));
    Eigen::VectorXd theta0 = model.init_from_data(samples);
    if (s > 0) theta0 += 0.3 * rng.gaussian_vector(static_cast<int>(theta0.size()));
    SingleFit run = run_single(model, samples, cfg, std::move(theta0), rng);
    if (run.best_nll < best.best_nll) best = std::move(run);
  }

  FitResult out{model.decode(best.theta), best.theta, std::move(best.trace), best.best_nll,
                model.kappa_clamped(best.theta)};
  return out;
}

double grad_check(const FamilyModel& model, const Eigen::VectorXd& theta,
                  const std::vector<SpherePoint>& samples) {
  if (theta.size() == 0) return 0.0;
  const std::vector<bool> mask = model.analytic_mask();
  bool any = false;
  for (bool b : mask) any = any || b;
  if (!any) return 0.0;

  const Eigen::VectorXd analytic = model.analytic_gradient(theta, samples);
  const Eigen::VectorXd numeric = numeric_gradient(model, theta, samples, 1e-5);
  double worst = 0.0;
  for (int j = 0; j < theta.size(); ++j) {
    if (!mask[j]) continue;
    const double denom = std::max({std::abs(analytic[j]), std::abs(numeric[j]), 1e-8});
    worst = std::max(worst, std::abs(analytic[j] - numeric[j]) / denom);
  }
  return worst;
}

}  // namespace zlpf
