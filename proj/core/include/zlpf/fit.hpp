#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "zlpf/presets.hpp"

namespace zlpf {

struct AdamLike {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct PlainGradientDescent {};

struct CentralDifference {
  double step = 1e-5;  // on the unconstrained parameter vector
};

struct AnalyticWhereAvailable {};

struct FitConfig {
  int iterations = 2000;
  double learning_rate = 1e-2;
  std::variant<AdamLike, PlainGradientDescent> optimizer = AdamLike{};
  std::variant<CentralDifference, AnalyticWhereAvailable> gradient = CentralDifference{};
  std::uint64_t seed = 0;
  int batch_size = 0;  // 0 = full batch
  int multistart = 0;  // 0 = auto (1, but 4 for the generic family)
};

enum class FitFamily { Vmf, Bingham, Fb4, Kent, Fb6, Fb8, Generic, RotationOnly };

FitFamily fit_family_from_name(const std::string& name);

// Unconstrained parametrization of one family at a fixed dimension. Every
// coordinate is a free real; decode applies the transform map (exp for
// concentrations, a tanh interval map for Kent scales, the skew-symmetric
// exponential chart for rotations, free entries for triangular factors) and
// is total: no parameter vector can decode to an invalid chain.
class FamilyModel {
 public:
  static FamilyModel make(FitFamily family, int dim, int generic_n = 15);

  FitFamily family() const { return family_; }
  int dim() const { return dim_; }
  int generic_n() const { return generic_n_; }
  int param_count() const { return param_count_; }

  FlowChain decode(const Eigen::VectorXd& theta) const;

  // Inverse transform of a preset-shaped parameter set, used for
  // initialization; round-trips with decode to 1e-12 away from the clamps.
  Eigen::VectorXd encode_vmf(const Eigen::VectorXd& mu, double kappa) const;

  // Data-driven starting point: rotation from the sample mean direction,
  // concentration from the mean resultant length, all shape parameters at
  // identity.
  Eigen::VectorXd init_from_data(const std::vector<SpherePoint>& samples) const;

  // True where an analytic parameter gradient of the NLL is implemented
  // (the vMF concentration coordinate, and all coordinates of the
  // rotation-only model, whose gradient vanishes identically).
  std::vector<bool> analytic_mask() const;
  Eigen::VectorXd analytic_gradient(const Eigen::VectorXd& theta,
                                    const std::vector<SpherePoint>& samples) const;

  // Whether the fitted concentration ended on its transform clamp.
  bool kappa_clamped(const Eigen::VectorXd& theta) const;

 private:
  FamilyModel(FitFamily family, int dim, int generic_n);

  FitFamily family_;
  int dim_;
  int generic_n_;
  int param_count_;
};

// Mean negative log probability of the samples under the decoded chain.
double nll(const FamilyModel& model, const Eigen::VectorXd& theta,
           const std::vector<SpherePoint>& samples);

struct FitResult {
  FlowChain chain;
  Eigen::VectorXd theta;
  std::vector<double> trace;  // objective per iteration (evaluated pre-step)
  double best_nll;
  bool kappa_clamped = false;
};

// Maximum-likelihood fit. Deterministic given config.seed; multistart runs
// are sequential and the best final objective wins. Throws DivergenceError
// if the objective exceeds the uniform baseline by 10 nats.
FitResult fit(const FamilyModel& model, const std::vector<SpherePoint>& samples,
              const FitConfig& cfg);

// Max relative disagreement between the analytic gradient coordinates and
// central differences; 0 when the model has no analytic coordinates.
double grad_check(const FamilyModel& model, const Eigen::VectorXd& theta,
                  const std::vector<SpherePoint>& samples);

}  // namespace zlpf
