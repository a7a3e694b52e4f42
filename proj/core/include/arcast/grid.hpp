#pragma once

#include <cstddef>
#include <vector>

namespace arcast {

/// Uniform periodic 2D grid. With periodic boundaries the right/top
/// endpoints are not duplicated, so dx = Lx/nx (not Lx/(nx-1)).
struct GridSpec {
  int nx = 64;
  int ny = 64;
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;
  double y_max = 1.0;

  double length_x() const { return x_max - x_min; }
  double length_y() const { return y_max - y_min; }
  double dx() const { return length_x() / nx; }
  double dy() const { return length_y() / ny; }
  double x(int i) const { return x_min + i * dx(); }
  double y(int j) const { return y_min + j * dy(); }
  std::size_t n_points() const { return static_cast<std::size_t>(nx) * ny; }

  bool operator==(const GridSpec&) const = default;
};

/// Throws ConfigError unless nx,ny >= 4 and the bounds are ordered.
void validate(const GridSpec& grid);

/// Scalar field sampled on a GridSpec, row-major with x fastest:
/// values[j*nx + i] = u(x_i, y_j).
struct Field2D {
  GridSpec grid;
  std::vector<double> values;

  Field2D() = default;
  explicit Field2D(const GridSpec& g, double fill = 0.0) : grid(g), values(g.n_points(), fill) {}

  double& at(int i, int j) { return values[static_cast<std::size_t>(j) * grid.nx + i]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.nx + i]; }
};

enum class Axis { X, Y };

/// Second-order central difference with periodic wraparound. A field that
/// is not periodic across the domain gets the jump folded into the
/// wraparound rows; that is the stencil definition, not an error.
Field2D periodic_gradient(const Field2D& f, Axis axis);

/// Standard 5-point Laplacian with periodic wraparound.
Field2D periodic_laplacian(const Field2D& f);

/// In-place kernels used by the solver hot loop; `out` must not alias `in`.
void periodic_gradient_into(const GridSpec& grid, const double* in, double* out, Axis axis);
void periodic_laplacian_into(const GridSpec& grid, const double* in, double* out);

bool all_finite(const std::vector<double>& values);
double max_abs(const std::vector<double>& values);
double mean(const std::vector<double>& values);

}  // namespace arcast
