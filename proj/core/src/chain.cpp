#include "zlpf/chain.hpp"

#include <cmath>

namespace zlpf {

int layer_dim(const LayerSpec& layer) {
  return std::visit(
      [](const auto& l) -> int {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ZoomLayer>)
          return l.params.dim;
        else if constexpr (std::is_same_v<T, LinearProjectLayer>)
          return l.params.dim();
        else
          return l.rot.dim();
      },
      layer);
}

SpherePoint layer_forward(const LayerSpec& layer, const SpherePoint& x) {
  return std::visit(
      [&x](const auto& l) -> SpherePoint {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ZoomLayer>)
          return l.kernel->apply_forward(x);
        else if constexpr (std::is_same_v<T, LinearProjectLayer>)
          return lp_forward(x, l.params);
        else
          return l.rot.apply(x);
      },
      layer);
}

SpherePoint layer_inverse(const LayerSpec& layer, const SpherePoint& x) {
  return std::visit(
      [&x](const auto& l) -> SpherePoint {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ZoomLayer>)
          return l.kernel->apply_inverse(x);
        else if constexpr (std::is_same_v<T, LinearProjectLayer>)
          return lp_inverse(x, l.params);
        else
          return l.rot.apply_inverse(x);
      },
      layer);
}

double layer_log_det_forward(const LayerSpec& layer, const SpherePoint& x) {
  return std::visit(
      [&x](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ZoomLayer>)
          return l.kernel->log_density_update(x.last());
        else if constexpr (std::is_same_v<T, LinearProjectLayer>)
          return lp_log_det_forward(x, l.params);
        else
          return 0.0;  // rotations are isometries
      },
      layer);
}

FlowChain::FlowChain(int dim, std::vector<LayerSpec> layers)
    : dim_(dim), layers_(std::move(layers)) {
  if (dim_ < 2) throw InputError("FlowChain: dimension must be at least 2");
  for (const auto& layer : layers_)
    if (layer_dim(layer) != dim_)
      throw InputError("FlowChain: all layers must share the chain dimension");
}

double FlowChain::log_prob(const SpherePoint& x) const {
  if (x.dim() != dim_) throw InputError("FlowChain::log_prob: dimension mismatch");
  double acc = 0.0;
  SpherePoint pt = x;
  for (const auto& layer : layers_) {
    // Peel one layer: the update of the forward map, evaluated at the
    // pre-image under everything peeled so far.
    if (const auto* zoom = std::get_if<ZoomLayer>(&layer)) {
      // The zoom update at the pre-image z only needs h(z) = current last
      // coordinate, so it costs nothing extra here.
      acc += zoom->kernel->log_density_update_given_h(pt.last());
      pt = zoom->kernel->apply_inverse(pt);
    } else {
      const SpherePoint pre = layer_inverse(layer, pt);
      acc += layer_log_det_forward(layer, pre);
      pt = pre;
    }
  }
  return uniform_log_density(dim_) - acc;
}

SpherePoint FlowChain::forward(const SpherePoint& base) const {
  if (base.dim() != dim_) throw InputError("FlowChain::forward: dimension mismatch");
  SpherePoint pt = base;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) pt = layer_forward(*it, pt);
  return pt;
}

SpherePoint FlowChain::inverse(const SpherePoint& x) const {
  if (x.dim() != dim_) throw InputError("FlowChain::inverse: dimension mismatch");
  SpherePoint pt = x;
  for (const auto& layer : layers_) pt = layer_inverse(layer, pt);
  return pt;
}

std::vector<FlowChain::Draw> FlowChain::sample(Rng& rng, int n) const {
  if (n < 1) throw InputError("FlowChain::sample: n must be at least 1");
  std::vector<Draw> out;
  out.reserve(n);
  const double base_log_density = uniform_log_density(dim_);
  for (int i = 0; i < n; ++i) {
    SpherePoint pt = uniform_sample(rng, dim_);
    double acc = 0.0;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      if (const auto* zoom = std::get_if<ZoomLayer>(&*it)) {
        // The image's last coordinate is h, which the update reuses.
        pt = zoom->kernel->apply_forward(pt);
        acc += zoom->kernel->log_density_update_given_h(pt.last());
      } else {
        acc += layer_log_det_forward(*it, pt);
        pt = layer_forward(*it, pt);
      }
    }
    out.push_back(Draw{std::move(pt), base_log_density - acc});
  }
  return out;
}

}  // namespace zlpf
