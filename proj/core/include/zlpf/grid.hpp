#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "zlpf/chain.hpp"

namespace zlpf {

// Equirectangular log-density grid over the 2-sphere (D = 3 only).
// Rows are colatitude cell centers theta in (0, pi), columns longitude cell
// centers phi in [0, 2 pi). A resolution of `res` gives res columns and
// res/2 rows.
struct DensityGrid {
  int rows = 0;
  int cols = 0;
  Eigen::MatrixXd log_density;

  double theta_center(int row) const;
  double phi_center(int col) const;
};

DensityGrid compute_density_grid(const FlowChain& chain, int res, int threads = 1);

// Midpoint-rule quadrature sum exp(v) sin(theta) dtheta dphi; approaches 1
// as the resolution grows.
double grid_quadrature(const DensityGrid& grid);

// CSV export: one comment header line recording the layout, then rows of
// comma-separated log densities.
void save_density_grid(const std::string& path, const DensityGrid& grid);

struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> gray;  // row major
};

enum class Projection { Equirect, Mollweide, Orthographic };

struct ProjectionOptions {
  Projection projection = Projection::Equirect;
  double center_lon_deg = 0.0;  // orthographic view center
  double center_lat_deg = 0.0;
  double fov_deg = 90.0;  // orthographic angular diameter
};

// Renders the chain's log density under the chosen projection. Pixels
// outside the projected sphere are zero; on-sphere values are scaled
// linearly over the top 40 nats below the maximum.
Raster render_density(const FlowChain& chain, int width, const ProjectionOptions& opts,
                      int threads = 1);

// Uncompressed raster writers; the extension picks the format (.pgm
// grayscale P5, .ppm heat-mapped P6).
void save_raster(const std::string& path, const Raster& raster);

}  // namespace zlpf
