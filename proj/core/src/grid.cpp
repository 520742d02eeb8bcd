#include "zlpf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <thread>

#include <Eigen/Geometry>

namespace zlpf {

namespace {

SpherePoint from_angles(double theta, double phi) {
  Eigen::VectorXd v(3);
  v << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta);
  return SpherePoint(std::move(v));
}

void parallel_rows(int rows, int threads, const std::function<void(int)>& body) {
  if (threads <= 1) {
    for (int r = 0; r < rows; ++r) body(r);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (int r = t; r < rows; r += threads) body(r);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

double DensityGrid::theta_center(int row) const { return (row + 0.5) * M_PI / rows; }

double DensityGrid::phi_center(int col) const { return (col + 0.5) * 2.0 * M_PI / cols; }

DensityGrid compute_density_grid(const FlowChain& chain, int res, int threads) {
  if (chain.dim() != 3) throw InputError("density grid: only defined for D = 3");
  if (res < 4 || res % 2 != 0) throw InputError("density grid: resolution must be even, >= 4");
  DensityGrid grid;
  grid.cols = res;
  grid.rows = res / 2;
  grid.log_density.resize(grid.rows, grid.cols);

  parallel_rows(grid.rows, threads, [&](int r) {
    const double theta = grid.theta_center(r);
    for (int c = 0; c < grid.cols; ++c)
      grid.log_density(r, c) = chain.log_prob(from_angles(theta, grid.phi_center(c)));
  });
  return grid;
}

double grid_quadrature(const DensityGrid& grid) {
  const double dtheta = M_PI / grid.rows;
  const double dphi = 2.0 * M_PI / grid.cols;
  double acc = 0.0;
  for (int r = 0; r < grid.rows; ++r) {
    const double sin_theta = std::sin(grid.theta_center(r));
    double row = 0.0;
    for (int c = 0; c < grid.cols; ++c) row += std::exp(grid.log_density(r, c));
    acc += row * sin_theta;
  }
  return acc * dtheta * dphi;
}

void save_density_grid(const std::string& path, const DensityGrid& grid) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path);
  out << "# density_grid dim=3 rows=" << grid.rows << " cols=" << grid.cols
      << " value=log_density rows=colatitude_centers cols=longitude_centers\n";
  char buf[40];
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", grid.log_density(r, c));
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
}

namespace {

struct LonLat {
  double lon;
  double lat;
  bool valid;
};

// Inverse Mollweide: pixel plane (px in [-2 sqrt2, 2 sqrt2], py in
// [-sqrt2, sqrt2]) back to longitude/latitude.
LonLat mollweide_inverse(double px, double py) {
  const double t = py / std::sqrt(2.0);
  if (std::abs(t) > 1.0) return {0, 0, false};
  const double aux = std::asin(t);
  const double sin_lat = (2.0 * aux + std::sin(2.0 * aux)) / M_PI;
  if (std::abs(sin_lat) > 1.0) return {0, 0, false};
  const double lat = std::asin(sin_lat);
  const double denom = std::cos(aux);
  if (denom < 1e-12) return {0.0, lat, true};  // pole column
  const double lon = M_PI * px / (2.0 * std::sqrt(2.0) * denom);
  if (std::abs(lon) > M_PI) return {0, 0, false};
  return {lon, lat, true};
}

}  // namespace

Raster render_density(const FlowChain& chain, int width, const ProjectionOptions& opts,
                      int threads) {
  if (chain.dim() != 3) throw InputError("render: only defined for D = 3");
  if (width < 8) throw InputError("render: width too small");

  const int height = (opts.projection == Projection::Orthographic) ? width : width / 2;
  Eigen::MatrixXd values(height, width);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> valid(height, width);

  // Orthographic view frame: c is the view center, (e1, e2) span the image.
  const double lon0 = opts.center_lon_deg * M_PI / 180.0;
  const double lat0 = opts.center_lat_deg * M_PI / 180.0;
  Eigen::Vector3d center(std::cos(lat0) * std::cos(lon0), std::cos(lat0) * std::sin(lon0),
                         std::sin(lat0));
  Eigen::Vector3d east(-std::sin(lon0), std::cos(lon0), 0.0);
  Eigen::Vector3d north = center.cross(east);
  const double plane_radius = std::sin(std::min(opts.fov_deg, 179.9) * M_PI / 360.0);

  parallel_rows(height, threads, [&](int r) {
    for (int c = 0; c < width; ++c) {
      valid(r, c) = false;
      const double sx = 2.0 * (c + 0.5) / width - 1.0;
      const double sy = 1.0 - 2.0 * (r + 0.5) / height;
      Eigen::VectorXd point(3);
      switch (opts.projection) {
        case Projection::Equirect: {
          const double phi = (sx + 1.0) * M_PI;          // [0, 2 pi)
          const double theta = (1.0 - sy) * 0.5 * M_PI;  // [0, pi)
          point = from_angles(theta, phi).coords();
          break;
        }
        case Projection::Mollweide: {
          const LonLat ll = mollweide_inverse(sx * 2.0 * std::sqrt(2.0), sy * std::sqrt(2.0));
          if (!ll.valid) continue;
          point = from_angles(0.5 * M_PI - ll.lat, ll.lon < 0 ? ll.lon + 2 * M_PI : ll.lon)
                      .coords();
          break;
        }
        case Projection::Orthographic: {
          const double u = sx * plane_radius;
          const double v = sy * plane_radius;
          const double rho2 = u * u + v * v;
          if (rho2 > plane_radius * plane_radius) continue;
          const Eigen::Vector3d p =
              u * east + v * north + std::sqrt(1.0 - rho2) * center;
          point = p;
          break;
        }
      }
      values(r, c) = chain.log_prob(SpherePoint(std::move(point)));
      valid(r, c) = true;
    }
  });

  double max_v = -std::numeric_limits<double>::infinity();
  double min_v = std::numeric_limits<double>::infinity();
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (valid(r, c)) {
        max_v = std::max(max_v, values(r, c));
        min_v = std::min(min_v, values(r, c));
      }
  // Span the visible dynamic range, capped at 40 nats below the peak.
  const double lo = std::max(min_v, max_v - 40.0);

  Raster raster;
  raster.width = width;
  raster.height = height;
  raster.gray.assign(static_cast<std::size_t>(width) * height, 0);
  const double span = std::max(max_v - lo, 1e-300);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      if (!valid(r, c)) continue;
      const double t = std::clamp((values(r, c) - lo) / span, 0.0, 1.0);
      raster.gray[static_cast<std::size_t>(r) * width + c] =
          static_cast<std::uint8_t>(std::lround(1.0 + 254.0 * t));
    }
  return raster;
}

namespace {

void heat_color(double t, std::uint8_t rgb[3]) {
  // Dark blue -> cyan -> yellow -> red ramp.
  const double r = std::clamp(std::min(4.0 * t - 1.5, -4.0 * t + 4.5), 0.0, 1.0);
  const double g = std::clamp(std::min(4.0 * t - 0.5, -4.0 * t + 3.5), 0.0, 1.0);
  const double b = std::clamp(std::min(4.0 * t + 0.5, -4.0 * t + 2.5), 0.0, 1.0);
  rgb[0] = static_cast<std::uint8_t>(std::lround(255 * r));
  rgb[1] = static_cast<std::uint8_t>(std::lround(255 * g));
  rgb[2] = static_cast<std::uint8_t>(std::lround(255 * b));
}

}  // namespace

void save_raster(const std::string& path, const Raster& raster) {
  const bool pgm = path.size() >= 4 && path.substr(path.size() - 4) == ".pgm";
  const bool ppm = path.size() >= 4 && path.substr(path.size() - 4) == ".ppm";
  if (!pgm && !ppm) throw InputError("raster output must end in .pgm or .ppm");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  if (pgm) {
    out << "P5\n" << raster.width << " " << raster.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(raster.gray.data()),
              static_cast<std::streamsize>(raster.gray.size()));
  } else {
    out << "P6\n" << raster.width << " " << raster.height << "\n255\n";
    std::vector<std::uint8_t> rgb(raster.gray.size() * 3);
    for (std::size_t i = 0; i < raster.gray.size(); ++i) {
      if (raster.gray[i] == 0) {
        rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = 0;
      } else {
        heat_color((raster.gray[i] - 1.0) / 254.0, &rgb[3 * i]);
      }
    }
    out.write(reinterpret_cast<const char*>(rgb.data()),
              static_cast<std::streamsize>(rgb.size()));
  }
}

}  // namespace zlpf
