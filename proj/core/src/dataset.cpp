#include "arcast/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "arcast/errors.hpp"

namespace arcast {

InitialConditionSpec sample_initial_condition_spec(Rng& rng) {
  InitialConditionSpec spec;
  for (int j = 0; j < InitialConditionSpec::n_waves; ++j) {
    spec.amplitude[j] = rng.uniform(-0.5, 0.5);
    spec.l_x[j] = rng.uniform_int(1, 3);
    spec.l_y[j] = rng.uniform_int(1, 3);
    spec.phase[j] = rng.uniform(0.0, 6.283185307179586476925286766559);
  }
  return spec;
}

Field2D evaluate_initial_condition(const InitialConditionSpec& spec, const GridSpec& grid) {
  Field2D f(grid);
  const double two_pi_over_L = 6.283185307179586476925286766559 / spec.domain_length;
  for (int j = 0; j < grid.ny; ++j) {
    const double y = grid.y(j);
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x(i);
      double u = 0.0;
      for (int w = 0; w < InitialConditionSpec::n_waves; ++w)
        u += spec.amplitude[w] *
             std::sin(two_pi_over_L * (spec.l_x[w] * x + spec.l_y[w] * y) + spec.phase[w]);
      f.at(i, j) = u;
    }
  }
  return f;
}

std::pair<InitialConditionSpec, Field2D> sample_initial_condition(Rng& rng, const GridSpec& grid) {
  InitialConditionSpec spec = sample_initial_condition_spec(rng);
  spec.domain_length = grid.length_x();
  return {spec, evaluate_initial_condition(spec, grid)};
}

PdeParams sample_params(Rng& rng, PdeKind kind) {
  PdeParams p;
  p.kind = kind;
  switch (kind) {
    case PdeKind::Advection:
      p.c_x = rng.uniform(0.1, 2.5);
      p.c_y = rng.uniform(0.1, 2.5);
      break;
    case PdeKind::Heat:
      p.nu = rng.uniform(2e-3, 2e-2);
      break;
    case PdeKind::Burgers:
      p.c_x = rng.uniform(0.5, 1.0);
      p.c_y = rng.uniform(0.5, 1.0);
      p.nu = rng.uniform(7.5e-3, 1.5e-2);
      break;
  }
  return p;
}

TrajectorySet generate_trajectory_set(PdeKind kind, int n_samples, const GridSpec& grid,
                                      const TemporalSpec& temporal, std::uint64_t seed) {
  validate(grid);
  validate(temporal);
  TrajectorySet set;
  set.grid = grid;
  set.temporal = temporal;
  set.seed = seed;
  set.params.reserve(n_samples);
  set.sample_seeds.reserve(n_samples);
  set.trajectories.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const std::uint64_t sample_seed = seed ^ static_cast<std::uint64_t>(i);
    Rng rng(sample_seed);
    PdeParams params = sample_params(rng, kind);
    auto [ic_spec, ic] = sample_initial_condition(rng, grid);
    set.params.push_back(params);
    set.sample_seeds.push_back(sample_seed);
    set.trajectories.push_back(simulate(params, ic, temporal));
  }
  return set;
}

void validate(const WindowSpec& w, int n_snapshots) {
  if (w.history_len < 1) throw ConfigError("history_len must be positive");
  if (!(w.split_fraction > 0.0 && w.split_fraction < 1.0))
    throw ConfigError("split_fraction must be in (0,1)");
  if (!(w.history_len < w.split_fraction * n_snapshots))
    throw InsufficientLength("history_len must leave room for at least one training window");
}

int split_index(const WindowSpec& w, int n_snapshots) {
  return static_cast<int>(std::floor(w.split_fraction * n_snapshots));
}

std::vector<Window> build_windows(int n_snapshots, const WindowSpec& w, int M, Split split) {
  if (M < 1) throw ConfigError("M must be >= 1");
  validate(w, n_snapshots);
  const int split_idx = split_index(w, n_snapshots);
  std::vector<Window> windows;
  if (split == Split::Train) {
    // History occupies [h-N+1, h], targets [h+1, h+M]; everything < split_idx.
    const int h_min = w.history_len - 1;
    const int h_max = split_idx - 1 - M;
    if (h_max < h_min) throw InsufficientLength("no training window fits");
    windows.reserve(h_max - h_min + 1);
    for (int h = h_min; h <= h_max; ++h) windows.push_back({h, M});
  } else {
    const int n_targets = n_snapshots - split_idx;
    if (n_targets < 1) throw InsufficientLength("no test snapshots after the split");
    windows.push_back({split_idx - 1, n_targets});
  }
  return windows;
}

namespace {

constexpr char kMagic[4] = {'A', 'R', 'T', 'S'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

struct Reader {
  std::ifstream in;
  explicit Reader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw IoError("cannot open " + path);
  }
  void bytes(char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw TruncatedFile("file shorter than header promises");
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  double f64() {
    std::uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
};

std::uint32_t pde_id(PdeKind kind) {
  switch (kind) {
    case PdeKind::Advection: return 0;
    case PdeKind::Heat: return 1;
    case PdeKind::Burgers: return 2;
  }
  return 0;
}

PdeKind pde_from_id(std::uint32_t id) {
  switch (id) {
    case 0: return PdeKind::Advection;
    case 1: return PdeKind::Heat;
    case 2: return PdeKind::Burgers;
  }
  throw FormatError("unknown pde id " + std::to_string(id));
}

void atomic_write(const std::string& path, const std::string& payload) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed for " + path + ": " + ec.message());
}

}  // namespace

void write_trajectory_set(const TrajectorySet& set, const std::string& path) {
  const GridSpec& g = set.grid;
  if (g.x_min != -1.0 || g.x_max != 1.0 || g.y_min != -1.0 || g.y_max != 1.0)
    throw FormatError("trajectory files assume the canonical [-1,1]^2 domain");

  std::string out;
  const std::size_t field_bytes = set.grid.n_points() * 8;
  out.reserve(40 + set.trajectories.size() *
                       (32 + static_cast<std::size_t>(set.temporal.n_snapshots) * field_bytes));
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(set.n_samples()));
  put_u32(out, static_cast<std::uint32_t>(set.temporal.n_snapshots));
  put_u32(out, static_cast<std::uint32_t>(g.nx));
  put_u32(out, static_cast<std::uint32_t>(g.ny));
  put_f64(out, set.temporal.t_start);
  put_f64(out, set.temporal.t_end);

  for (int i = 0; i < set.n_samples(); ++i) {
    const PdeParams& p = set.params[i];
    put_u32(out, pde_id(p.kind));
    put_f64(out, p.c_x);
    put_f64(out, p.c_y);
    put_f64(out, p.nu);
    put_u64(out, set.sample_seeds[i]);
    const Trajectory& traj = set.trajectories[i];
    if (traj.n_snapshots() != set.temporal.n_snapshots)
      throw FormatError("trajectory snapshot count differs from the set's temporal spec");
    for (const auto& snap : traj.snapshots) {
      if constexpr (std::endian::native == std::endian::little) {
        out.append(reinterpret_cast<const char*>(snap.data()), snap.size() * 8);
      } else {
        for (double v : snap) put_f64(out, v);
      }
    }
  }
  atomic_write(path, out);
}

TrajectorySet read_trajectory_set(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic; not a trajectory file");
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw FormatError("unsupported version " + std::to_string(version));

  const std::uint32_t n_samples = r.u32();
  const std::uint32_t n_snapshots = r.u32();
  const std::uint32_t nx = r.u32();
  const std::uint32_t ny = r.u32();

  TrajectorySet set;
  set.grid.nx = static_cast<int>(nx);
  set.grid.ny = static_cast<int>(ny);
  set.temporal.t_start = r.f64();
  set.temporal.t_end = r.f64();
  set.temporal.n_snapshots = static_cast<int>(n_snapshots);
  validate(set.grid);
  validate(set.temporal);

  const std::size_t n_points = set.grid.n_points();
  for (std::uint32_t i = 0; i < n_samples; ++i) {
    PdeParams p;
    p.kind = pde_from_id(r.u32());
    p.c_x = r.f64();
    p.c_y = r.f64();
    p.nu = r.f64();
    set.params.push_back(p);
    set.sample_seeds.push_back(r.u64());

    Trajectory traj;
    traj.grid = set.grid;
    traj.temporal = set.temporal;
    traj.snapshots.resize(n_snapshots);
    for (auto& snap : traj.snapshots) {
      snap.resize(n_points);
      if constexpr (std::endian::native == std::endian::little) {
        r.bytes(reinterpret_cast<char*>(snap.data()), n_points * 8);
      } else {
        for (auto& v : snap) v = r.f64();
      }
    }
    set.trajectories.push_back(std::move(traj));
  }
  return set;
}

}  // namespace arcast
