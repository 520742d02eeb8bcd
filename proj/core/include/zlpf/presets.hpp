#pragma once

#include <optional>
#include <string>
#include <variant>

#include "zlpf/chain.hpp"

namespace zlpf {

// Named constructors for the family dictionary. Flow functions are written
// right to left: the layer list of each chain matches the composition order,
// with the rightmost factor acting first on base samples.
//
//   vmf      R o Z
//   bingham  LP (full A)
//   fb4      R o Z o LP_S        (shared sigma = the classic small-circle
//                                 form; free per-axis scales give the
//                                 bimodal extension)
//   kent     R o LP_Sc o Z       (zoom first, then the constrained scaling;
//                                 this order is what produces the tangent
//                                 Gaussian limit)
//   fb6      R o LP_Sc o Z o LP_S
//   fb8      R o LP_Sc o Z o LP  (full inner A)
//   generic  [R o Z o LP]^N

struct VmfPreset {
  Eigen::VectorXd mu;
  double kappa;
};

struct BinghamPreset {
  Eigen::MatrixXd a;  // full linear-project matrix, gauge-fixed internally
};

struct Fb4Preset {
  Eigen::VectorXd mu;
  double kappa;
  Eigen::VectorXd sigmas;  // D-1 positive scales (last axis fixed to 1)
  bool shared = true;      // enforce sigma_i all equal (classic FB4)
};

struct KentPreset {
  Eigen::VectorXd mu;
  double kappa;
  Eigen::VectorXd sigmas;  // D-1 scales inside the admissible interval

  static KentPreset from_u(Eigen::VectorXd mu, double kappa, double u);
};

struct Fb6Preset {
  Eigen::VectorXd mu;
  double kappa;
  Eigen::VectorXd sigmas_c;      // constrained outer scales (D-1)
  Eigen::VectorXd inner_sigmas;  // free diagonal of the inner LP_S (D-1)
};

struct Fb8Preset {
  Eigen::VectorXd mu;
  double kappa;
  Eigen::VectorXd sigmas_c;  // constrained outer scales (D-1)
  Eigen::MatrixXd inner_a;   // full inner linear-project matrix
};

struct GenericBlock {
  Eigen::MatrixXd rotation;
  double kappa;
  Eigen::MatrixXd a;
};

struct GenericPreset {
  std::vector<GenericBlock> blocks;  // block k contributes layers (R, Z, LP)
};

using FamilyPreset = std::variant<VmfPreset, BinghamPreset, Fb4Preset, KentPreset, Fb6Preset,
                                  Fb8Preset, GenericPreset>;

// Family tag of a preset, lowercase ("vmf", "bingham", ...).
std::string preset_family_name(const FamilyPreset& preset);

// Builds the chain for a preset, validating every constraint (Kent interval,
// FB4 shared sigma, matrix invertibility). The rotation layer is omitted
// when mu is exactly the north pole, so the plain vMF preset is a single
// zoom layer.
FlowChain build_preset(const FamilyPreset& preset);

// Max relative error between the Kent-type flow density (kappa, scales u and
// 1/u, D = 3, mean at the pole) and the tangent-plane Gaussian with standard
// deviations sigma_i / sqrt(kappa), evaluated on an n_grid x n_grid patch
// inside the 3-sigma ellipse around the mode.
double kent_tangent_gaussian_check(double kappa, double u, int n_grid);

}  // namespace zlpf
