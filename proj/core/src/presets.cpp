#include "zlpf/presets.hpp"

#include <cmath>

namespace zlpf {

namespace {

bool is_north_pole(const SpherePoint& mu) {
  const int d = mu.dim();
  if (mu.last() != 1.0) return false;
  for (int i = 0; i + 1 < d; ++i)
    if (mu[i] != 0.0) return false;
  return true;
}

// Common head of the oriented presets: the pole-moving rotation, skipped
// when the mean already is the pole.
void push_rotation(std::vector<LayerSpec>& layers, const SpherePoint& mu) {
  if (!is_north_pole(mu)) layers.emplace_back(RotationLayer(rotation_to(mu)));
}

}  // namespace

KentPreset KentPreset::from_u(Eigen::VectorXd mu, double kappa, double u) {
  if (mu.size() != 3)
    throw InputError("KentPreset::from_u: the single-variable form is specific to D = 3");
  Eigen::VectorXd sigmas(2);
  sigmas << u, 1.0 / u;
  return KentPreset{std::move(mu), kappa, std::move(sigmas)};
}

std::string preset_family_name(const FamilyPreset& preset) {
  struct Visitor {
    std::string operator()(const VmfPreset&) const { return "vmf"; }
    std::string operator()(const BinghamPreset&) const { return "bingham"; }
    std::string operator()(const Fb4Preset&) const { return "fb4"; }
    std::string operator()(const KentPreset&) const { return "kent"; }
    std::string operator()(const Fb6Preset&) const { return "fb6"; }
    std::string operator()(const Fb8Preset&) const { return "fb8"; }
    std::string operator()(const GenericPreset&) const { return "generic"; }
  };
  return std::visit(Visitor{}, preset);
}

FlowChain build_preset(const FamilyPreset& preset) {
  struct Visitor {
    FlowChain operator()(const VmfPreset& p) const {
      const SpherePoint mu{p.mu};
      std::vector<LayerSpec> layers;
      push_rotation(layers, mu);
      layers.emplace_back(ZoomLayer(ZoomParams(p.kappa, mu.dim())));
      return FlowChain(mu.dim(), std::move(layers));
    }

    FlowChain operator()(const BinghamPreset& p) const {
      const int d = static_cast<int>(p.a.rows());
      std::vector<LayerSpec> layers;
      layers.emplace_back(LinearProjectLayer(LPParams::full(p.a)));
      return FlowChain(d, std::move(layers));
    }

    FlowChain operator()(const Fb4Preset& p) const {
      const SpherePoint mu{p.mu};
      const int d = mu.dim();
      if (p.sigmas.size() != d - 1)
        throw InputError("fb4 preset: expected D-1 scales");
      if (p.shared) {
        for (int i = 1; i < d - 1; ++i)
          if (std::abs(p.sigmas[i] - p.sigmas[0]) > 1e-12 * std::abs(p.sigmas[0]))
            throw ConstraintError("fb4 preset: the symmetric variant requires a shared scale");
      }
      Eigen::VectorXd diag(d);
      diag.head(d - 1) = p.sigmas;
      diag[d - 1] = 1.0;
      std::vector<LayerSpec> layers;
      push_rotation(layers, mu);
      layers.emplace_back(ZoomLayer(ZoomParams(p.kappa, d)));
      layers.emplace_back(LinearProjectLayer(LPParams::diagonal(std::move(diag))));
      return FlowChain(d, std::move(layers));
    }

    FlowChain operator()(const KentPreset& p) const {
      const SpherePoint mu{p.mu};
      const int d = mu.dim();
      if (p.sigmas.size() != d - 1)
        throw InputError("kent preset: expected D-1 scales");
      std::vector<LayerSpec> layers;
      push_rotation(layers, mu);
      layers.emplace_back(LinearProjectLayer(LPParams::constrained(p.sigmas, p.kappa)));
      layers.emplace_back(ZoomLayer(ZoomParams(p.kappa, d)));
      return FlowChain(d, std::move(layers));
    }

    FlowChain operator()(const Fb6Preset& p) const {
      const SpherePoint mu{p.mu};
      const int d = mu.dim();
      if (p.sigmas_c.size() != d - 1 || p.inner_sigmas.size() != d - 1)
        throw InputError("fb6 preset: expected D-1 scales for each block");
      Eigen::VectorXd inner(d);
      inner.head(d - 1) = p.inner_sigmas;
      inner[d - 1] = 1.0;
      std::vector<LayerSpec> layers;
      push_rotation(layers, mu);
      layers.emplace_back(LinearProjectLayer(LPParams::constrained(p.sigmas_c, p.kappa)));
      layers.emplace_back(ZoomLayer(ZoomParams(p.kappa, d)));
      layers.emplace_back(LinearProjectLayer(LPParams::diagonal(std::move(inner))));
      return FlowChain(d, std::move(layers));
    }

    FlowChain operator()(const Fb8Preset& p) const {
      const SpherePoint mu{p.mu};
      const int d = mu.dim();
      if (p.sigmas_c.size() != d - 1)
        throw InputError("fb8 preset: expected D-1 constrained scales");
      std::vector<LayerSpec> layers;
      push_rotation(layers, mu);
      layers.emplace_back(LinearProjectLayer(LPParams::constrained(p.sigmas_c, p.kappa)));
      layers.emplace_back(ZoomLayer(ZoomParams(p.kappa, d)));
      layers.emplace_back(LinearProjectLayer(LPParams::full(p.inner_a)));
      return FlowChain(d, std::move(layers));
    }

    FlowChain operator()(const GenericPreset& p) const {
      if (p.blocks.empty()) throw InputError("generic preset: needs at least one block");
      const int d = static_cast<int>(p.blocks.front().rotation.rows());
      std::vector<LayerSpec> layers;
      for (const auto& block : p.blocks) {
        layers.emplace_back(RotationLayer(Rotation(block.rotation)));
        layers.emplace_back(ZoomLayer(ZoomParams(block.kappa, d)));
        layers.emplace_back(LinearProjectLayer(LPParams::full(block.a)));
      }
      return FlowChain(d, std::move(layers));
    }
  };
  return std::visit(Visitor{}, preset);
}

double kent_tangent_gaussian_check(double kappa, double u, int n_grid) {
  if (n_grid < 3) throw InputError("kent_tangent_gaussian_check: grid too small");
  Eigen::VectorXd pole(3);
  pole << 0.0, 0.0, 1.0;
  const FlowChain chain = build_preset(KentPreset::from_u(pole, kappa, u));

  const double s1 = u / std::sqrt(kappa);
  const double s2 = 1.0 / (u * std::sqrt(kappa));
  const double log_gauss_norm = -std::log(2.0 * M_PI * s1 * s2);

  double max_rel_err = 0.0;
  for (int i = 0; i < n_grid; ++i) {
    const double v1 = 3.0 * s1 * (2.0 * (i + 0.5) / n_grid - 1.0);
    for (int j = 0; j < n_grid; ++j) {
      const double v2 = 3.0 * s2 * (2.0 * (j + 0.5) / n_grid - 1.0);
      const double e1 = v1 / (3.0 * s1), e2 = v2 / (3.0 * s2);
      if (e1 * e1 + e2 * e2 > 1.0) continue;
      const double r = std::hypot(v1, v2);
      Eigen::VectorXd x(3);
      if (r < 1e-14) {
        x = pole;
      } else {
        x << std::sin(r) * v1 / r, std::sin(r) * v2 / r, std::cos(r);
      }
      const double lp = chain.log_prob(SpherePoint(std::move(x)));
      const double lg =
          log_gauss_norm - 0.5 * (v1 * v1 / (s1 * s1) + v2 * v2 / (s2 * s2));
      max_rel_err = std::max(max_rel_err, std::abs(std::expm1(lp - lg)));
    }
  }
  return max_rel_err;
}

}  // namespace zlpf
