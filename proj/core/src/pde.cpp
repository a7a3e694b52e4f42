#include "arcast/pde.hpp"

#include <cmath>
#include <limits>

#include "arcast/errors.hpp"

namespace arcast {

std::string to_string(PdeKind kind) {
  switch (kind) {
    case PdeKind::Advection: return "advection";
    case PdeKind::Heat: return "heat";
    case PdeKind::Burgers: return "burgers";
  }
  return "?";
}

PdeKind pde_kind_from_string(const std::string& name) {
  if (name == "advection") return PdeKind::Advection;
  if (name == "heat") return PdeKind::Heat;
  if (name == "burgers") return PdeKind::Burgers;
  throw ConfigError("unknown pde kind: " + name);
}

void validate(const TemporalSpec& temporal) {
  if (!(temporal.t_end > temporal.t_start)) throw ConfigError("t_end must exceed t_start");
  if (temporal.n_snapshots < 2) throw ConfigError("need at least 2 snapshots");
}

namespace {

// The solver uses 4th-order central stencils: the surrogate-comparison
// oracles ask for <1e-3 field error over t in [0,2] on the 64x64 grid, and
// second-order dispersion alone is ~1e-2 there for the advected modes.
void gradient4_into(const GridSpec& grid, const double* in, double* out, Axis axis) {
  const int nx = grid.nx, ny = grid.ny;
  if (axis == Axis::X) {
    const double c = 1.0 / (12.0 * grid.dx());
    for (int j = 0; j < ny; ++j) {
      const double* row = in + static_cast<std::size_t>(j) * nx;
      double* orow = out + static_cast<std::size_t>(j) * nx;
      for (int i = 0; i < nx; ++i) {
        const int ip1 = (i + 1) % nx, ip2 = (i + 2) % nx;
        const int im1 = (i + nx - 1) % nx, im2 = (i + nx - 2) % nx;
        orow[i] = c * (-row[ip2] + 8.0 * row[ip1] - 8.0 * row[im1] + row[im2]);
      }
    }
  } else {
    const double c = 1.0 / (12.0 * grid.dy());
    for (int j = 0; j < ny; ++j) {
      const int jp1 = (j + 1) % ny, jp2 = (j + 2) % ny;
      const int jm1 = (j + ny - 1) % ny, jm2 = (j + ny - 2) % ny;
      const double* rp1 = in + static_cast<std::size_t>(jp1) * nx;
      const double* rp2 = in + static_cast<std::size_t>(jp2) * nx;
      const double* rm1 = in + static_cast<std::size_t>(jm1) * nx;
      const double* rm2 = in + static_cast<std::size_t>(jm2) * nx;
      double* orow = out + static_cast<std::size_t>(j) * nx;
      for (int i = 0; i < nx; ++i)
        orow[i] = c * (-rp2[i] + 8.0 * rp1[i] - 8.0 * rm1[i] + rm2[i]);
    }
  }
}

void laplacian4_into(const GridSpec& grid, const double* in, double* out) {
  const int nx = grid.nx, ny = grid.ny;
  const double cx = 1.0 / (12.0 * grid.dx() * grid.dx());
  const double cy = 1.0 / (12.0 * grid.dy() * grid.dy());
  for (int j = 0; j < ny; ++j) {
    const int jp1 = (j + 1) % ny, jp2 = (j + 2) % ny;
    const int jm1 = (j + ny - 1) % ny, jm2 = (j + ny - 2) % ny;
    const double* row = in + static_cast<std::size_t>(j) * nx;
    const double* rp1 = in + static_cast<std::size_t>(jp1) * nx;
    const double* rp2 = in + static_cast<std::size_t>(jp2) * nx;
    const double* rm1 = in + static_cast<std::size_t>(jm1) * nx;
    const double* rm2 = in + static_cast<std::size_t>(jm2) * nx;
    double* orow = out + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      const int ip1 = (i + 1) % nx, ip2 = (i + 2) % nx;
      const int im1 = (i + nx - 1) % nx, im2 = (i + nx - 2) % nx;
      orow[i] =
          cx * (-row[ip2] + 16.0 * row[ip1] - 30.0 * row[i] + 16.0 * row[im1] - row[im2]) +
          cy * (-rp2[i] + 16.0 * rp1[i] - 30.0 * row[i] + 16.0 * rm1[i] - rm2[i]);
    }
  }
}

// du/dt into `out`; `gx`/`gy` are scratch the same size as the field.
void rhs_into(const PdeParams& p, const GridSpec& grid, const double* u, double* out, double* gx,
              double* gy) {
  const std::size_t n = grid.n_points();
  switch (p.kind) {
    case PdeKind::Advection: {
      gradient4_into(grid, u, gx, Axis::X);
      gradient4_into(grid, u, gy, Axis::Y);
      for (std::size_t k = 0; k < n; ++k) out[k] = -(p.c_x * gx[k] + p.c_y * gy[k]);
      break;
    }
    case PdeKind::Heat: {
      laplacian4_into(grid, u, out);
      for (std::size_t k = 0; k < n; ++k) out[k] *= p.nu;
      break;
    }
    case PdeKind::Burgers: {
      gradient4_into(grid, u, gx, Axis::X);
      gradient4_into(grid, u, gy, Axis::Y);
      laplacian4_into(grid, u, out);
      for (std::size_t k = 0; k < n; ++k)
        out[k] = -u[k] * (p.c_x * gx[k] + p.c_y * gy[k]) + p.nu * out[k];
      break;
    }
  }
}

}  // namespace

Field2D rhs(const PdeParams& params, const Field2D& u) {
  Field2D out(u.grid);
  std::vector<double> gx(u.grid.n_points()), gy(u.grid.n_points());
  rhs_into(params, u.grid, u.values.data(), out.values.data(), gx.data(), gy.data());
  return out;
}

double stable_dt(const PdeParams& params, const GridSpec& grid) {
  const double dx = std::min(grid.dx(), grid.dy());
  double dt = std::numeric_limits<double>::infinity();
  const double c_max = std::max(std::fabs(params.c_x), std::fabs(params.c_y));
  if (params.kind != PdeKind::Heat && c_max > 0.0) dt = std::min(dt, dx / c_max);
  if (params.kind != PdeKind::Advection && params.nu > 0.0)
    dt = std::min(dt, dx * dx / (4.0 * params.nu));
  if (!std::isfinite(dt)) return std::numeric_limits<double>::infinity();
  return 0.2 * dt;
}

Trajectory simulate(const PdeParams& params, const Field2D& ic, const TemporalSpec& temporal,
                    int substep_refinement) {
  validate(ic.grid);
  validate(temporal);
  if (substep_refinement < 1) throw ConfigError("substep_refinement must be >= 1");
  if (!all_finite(ic.values)) throw InstabilityDetected(0, max_abs(ic.values), "non-finite initial condition");

  const GridSpec& grid = ic.grid;
  const std::size_t n = grid.n_points();
  const double snap_dt = temporal.snapshot_dt();

  const double dt_stable = stable_dt(params, grid);
  long n_sub = std::isfinite(dt_stable) ? static_cast<long>(std::ceil(snap_dt / dt_stable)) : 1;
  if (n_sub < 1) n_sub = 1;
  n_sub *= substep_refinement;
  const double h = snap_dt / static_cast<double>(n_sub);

  Trajectory traj;
  traj.grid = grid;
  traj.temporal = temporal;
  traj.snapshots.reserve(temporal.n_snapshots);
  traj.snapshots.push_back(ic.values);

  std::vector<double> u = ic.values;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), gx(n), gy(n);

  long substep_counter = 0;
  for (int s = 1; s < temporal.n_snapshots; ++s) {
    for (long sub = 0; sub < n_sub; ++sub) {
      rhs_into(params, grid, u.data(), k1.data(), gx.data(), gy.data());
      for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
      rhs_into(params, grid, tmp.data(), k2.data(), gx.data(), gy.data());
      for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
      rhs_into(params, grid, tmp.data(), k3.data(), gx.data(), gy.data());
      for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + h * k3[i];
      rhs_into(params, grid, tmp.data(), k4.data(), gx.data(), gy.data());
      const double h6 = h / 6.0;
      for (std::size_t i = 0; i < n; ++i)
        u[i] += h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      ++substep_counter;
      if (!all_finite(u))
        throw InstabilityDetected(substep_counter, max_abs(u),
                                  "solver instability at sub-step " + std::to_string(substep_counter) +
                                      " (max |u| = " + std::to_string(max_abs(u)) + ")");
    }
    traj.snapshots.push_back(u);
  }
  return traj;
}

}  // namespace arcast
