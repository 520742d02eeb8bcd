#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "zlpf/linear_project.hpp"
#include "zlpf/rng.hpp"
#include "zlpf/sphere.hpp"
#include "zlpf/zoom.hpp"

namespace zlpf {

struct ZoomLayer {
  ZoomParams params;
  std::shared_ptr<const ZoomKernel> kernel;  // built once per layer

  explicit ZoomLayer(ZoomParams p)
      : params(p), kernel(std::make_shared<ZoomKernel>(p.dim, p.kappa)) {}
};

struct LinearProjectLayer {
  LPParams params;
  explicit LinearProjectLayer(LPParams p) : params(std::move(p)) {}
};

struct RotationLayer {
  Rotation rot;
  explicit RotationLayer(Rotation r) : rot(std::move(r)) {}
};

using LayerSpec = std::variant<ZoomLayer, LinearProjectLayer, RotationLayer>;

int layer_dim(const LayerSpec& layer);
SpherePoint layer_forward(const LayerSpec& layer, const SpherePoint& x);
SpherePoint layer_inverse(const LayerSpec& layer, const SpherePoint& x);

// ln of the forward tangent-volume factor of the layer at a base-side point.
double layer_log_det_forward(const LayerSpec& layer, const SpherePoint& x);

// Ordered flow chain over a uniform base distribution. Layers are stored in
// composition order, i.e. as the flow function is written: the LAST element
// of the list acts first on base samples, the first element acts last.
// Inverses run front to back. All evaluation is exact (log space
// throughout, no density is ever exponentiated internally).
class FlowChain {
 public:
  FlowChain(int dim, std::vector<LayerSpec> layers);

  int dim() const { return dim_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }

  // Exact log density: peels layers front to back, accumulating each
  // layer's update at the current pre-image, then adds the uniform base
  // log density.
  double log_prob(const SpherePoint& x) const;

  // Push a base point through every layer (back to front).
  SpherePoint forward(const SpherePoint& base) const;
  SpherePoint inverse(const SpherePoint& x) const;

  struct Draw {
    SpherePoint point;
    double log_prob;
  };

  // Rejection-free i.i.d. sampling: uniform base draws pushed through the
  // chain, log densities accumulated along the way.
  std::vector<Draw> sample(Rng& rng, int n) const;

 private:
  int dim_;
  std::vector<LayerSpec> layers_;
};

}  // namespace zlpf
