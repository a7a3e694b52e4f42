#include "arcast/grid.hpp"

#include <cmath>

#include "arcast/errors.hpp"

namespace arcast {

void validate(const GridSpec& grid) {
  if (grid.nx < 4 || grid.ny < 4) throw ConfigError("grid must be at least 4x4");
  if (!(grid.x_max > grid.x_min) || !(grid.y_max > grid.y_min))
    throw ConfigError("grid bounds must be ordered");
}

void periodic_gradient_into(const GridSpec& grid, const double* in, double* out, Axis axis) {
  const int nx = grid.nx, ny = grid.ny;
  if (axis == Axis::X) {
    const double inv2dx = 1.0 / (2.0 * grid.dx());
    for (int j = 0; j < ny; ++j) {
      const double* row = in + static_cast<std::size_t>(j) * nx;
      double* orow = out + static_cast<std::size_t>(j) * nx;
      orow[0] = (row[1] - row[nx - 1]) * inv2dx;
      for (int i = 1; i < nx - 1; ++i) orow[i] = (row[i + 1] - row[i - 1]) * inv2dx;
      orow[nx - 1] = (row[0] - row[nx - 2]) * inv2dx;
    }
  } else {
    const double inv2dy = 1.0 / (2.0 * grid.dy());
    for (int j = 0; j < ny; ++j) {
      const int jp = (j + 1 == ny) ? 0 : j + 1;
      const int jm = (j == 0) ? ny - 1 : j - 1;
      const double* up = in + static_cast<std::size_t>(jp) * nx;
      const double* dn = in + static_cast<std::size_t>(jm) * nx;
      double* orow = out + static_cast<std::size_t>(j) * nx;
      for (int i = 0; i < nx; ++i) orow[i] = (up[i] - dn[i]) * inv2dy;
    }
  }
}

void periodic_laplacian_into(const GridSpec& grid, const double* in, double* out) {
  const int nx = grid.nx, ny = grid.ny;
  const double inv_dx2 = 1.0 / (grid.dx() * grid.dx());
  const double inv_dy2 = 1.0 / (grid.dy() * grid.dy());
  for (int j = 0; j < ny; ++j) {
    const int jp = (j + 1 == ny) ? 0 : j + 1;
    const int jm = (j == 0) ? ny - 1 : j - 1;
    const double* row = in + static_cast<std::size_t>(j) * nx;
    const double* up = in + static_cast<std::size_t>(jp) * nx;
    const double* dn = in + static_cast<std::size_t>(jm) * nx;
    double* orow = out + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      const int ip = (i + 1 == nx) ? 0 : i + 1;
      const int im = (i == 0) ? nx - 1 : i - 1;
      orow[i] = (row[ip] - 2.0 * row[i] + row[im]) * inv_dx2 +
                (up[i] - 2.0 * row[i] + dn[i]) * inv_dy2;
    }
  }
}

Field2D periodic_gradient(const Field2D& f, Axis axis) {
  Field2D out(f.grid);
  periodic_gradient_into(f.grid, f.values.data(), out.values.data(), axis);
  return out;
}

Field2D periodic_laplacian(const Field2D& f) {
  Field2D out(f.grid);
  periodic_laplacian_into(f.grid, f.values.data(), out.values.data());
  return out;
}

bool all_finite(const std::vector<double>& values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

double max_abs(const std::vector<double>& values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::fabs(v));
  return m;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

}  // namespace arcast
