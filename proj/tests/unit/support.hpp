#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mpmsim/cpm.hpp"
#include "mpmsim/fvm.hpp"
#include "mpmsim/lattice.hpp"

namespace testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* base = std::getenv("MPMSIM_TEST_TMP");
  auto dir = (base ? std::filesystem::path(base) : std::filesystem::temp_directory_path() / "mpmsim_tests") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline double max_abs_diff(const mpmsim::FieldSet& a, const mpmsim::FieldSet& b) {
  double worst = 0.0;
  for (std::size_t s = 0; s < mpmsim::kSpeciesCount; ++s) {
    worst = std::max(worst, max_abs_diff(a.species[s].values(), b.species[s].values()));
  }
  return worst;
}

inline mpmsim::ScalarField random_field(const mpmsim::Lattice3D& lat, std::mt19937_64& rng, double lo = 0.0,
                                        double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  mpmsim::ScalarField f(lat);
  for (std::size_t v = 0; v < f.size(); ++v) f[v] = u(rng);
  return f;
}

/// Random CPM state: full mask, cells assigned voxel by voxel.
inline mpmsim::CPMState random_state(mpmsim::Index3 dims, int n_cells, double fill, std::mt19937_64& rng) {
  using namespace mpmsim;
  CPMState s;
  s.lattice = Lattice3D(dims);
  s.sigma.assign(s.lattice.size(), kMedium);
  s.cells.assign(1, CellRecord{});
  s.pleural_mask = VoxelMask(s.lattice, true);
  std::uniform_real_distribution<double> target(1.0, 6.0);
  for (int c = 0; c < n_cells; ++c) s.add_cell(CellKind::Tumour, target(rng));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pick(1, n_cells);
  for (std::size_t v = 0; v < s.sigma.size(); ++v) {
    if (n_cells > 0 && u(rng) < fill) {
      const auto id = static_cast<CellId>(pick(rng));
      s.sigma[v] = id;
      ++s.cells[id].volume;
    }
  }
  for (auto& c : s.cells) c.alive = c.id != kMedium && c.volume > 0;
  return s;
}

/// Whole-lattice Hamiltonian: adhesion over 6-neighbour pairs plus the
/// volume constraint over live cells.
inline double total_energy(const mpmsim::CPMState& s, const mpmsim::CPMParams& p) {
  using namespace mpmsim;
  const auto& lat = s.lattice;
  double h = 0.0;
  for (int k = 0; k < lat.nz(); ++k) {
    for (int j = 0; j < lat.ny(); ++j) {
      for (int i = 0; i < lat.nx(); ++i) {
        const CellId a = s.sigma[lat.index(i, j, k)];
        const Index3 fwd[3] = {{i + 1, j, k}, {i, j + 1, k}, {i, j, k + 1}};
        for (auto n : fwd) {
          if (!lat.contains(n)) continue;
          const CellId b = s.sigma[lat.index(n)];
          if (a != b) h += p.adhesion(s.kind_of(a), s.kind_of(b));
        }
      }
    }
  }
  std::vector<std::int64_t> vol(s.cells.size(), 0);
  for (auto id : s.sigma) ++vol[id];
  for (std::size_t id = 1; id < s.cells.size(); ++id) {
    if (s.cells[id].kind != CellKind::Tumour) continue;
    const double d = static_cast<double>(vol[id]) - s.cells[id].target_volume;
    h += p.lambda_volume * d * d;
  }
  return h;
}

}  // namespace testing

#include <numbers>

#include "mpmsim/krylov.hpp"

namespace testing {

inline mpmsim::GMRESConfig tight_gmres() {
  mpmsim::GMRESConfig cfg;
  cfg.rel_tol = 1e-13;
  cfg.abs_tol = 1e-15;
  cfg.max_iters = 5000;
  return cfg;
}

// Manufactured solution C(x, t) = exp(-lambda t) cos(pi x / L) on an n x 1 x 1
// column with zero-flux ends, L = 1, D = 1, cell centres at (i + 1/2) h. The
// cosine is an eigenvector of the discrete Neumann Laplacian with eigenvalue
// lambda_h = (2 / h^2)(1 - cos(pi h)), so each error below isolates one
// discretization: space (against the continuous lambda at fixed dt) or time
// (against exp(-lambda_h t) on the fixed grid).
struct ManufacturedRun {
  std::vector<double> numeric;
  std::vector<double> mode;  // cos(pi x_i)
  double lambda_h = 0.0;
};

inline ManufacturedRun run_manufactured(int n, double dt, int steps) {
  using namespace mpmsim;
  const double h = 1.0 / n;
  const Lattice3D lat(n, 1, 1, h);
  ManufacturedRun run;
  run.lambda_h = (2.0 / (h * h)) * (1.0 - std::cos(std::numbers::pi * h));
  ScalarField c(lat);
  for (int i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = std::cos(std::numbers::pi * (i + 0.5) * h);
  run.mode.assign(c.values().begin(), c.values().end());

  TransportParams tp{1.0, 0.0, 0.0, BoundaryKind::NeumannZero};
  const ScalarField zero(lat);
  for (int s = 0; s < steps; ++s) {
    auto sys = assemble_step(c, tp, zero, zero, dt);
    auto res = gmres_solve(sys, c.values(), tight_gmres());
    c = ScalarField(lat, std::move(res.x));
  }
  run.numeric.assign(c.values().begin(), c.values().end());
  return run;
}

/// Max error against the continuous-in-space, implicit-Euler-in-time
/// reference (1 + dt lambda)^-steps cos(pi x).
inline double manufactured_space_error(int n, double dt, int steps) {
  const auto run = run_manufactured(n, dt, steps);
  const double lambda = std::numbers::pi * std::numbers::pi;
  const double amp = std::pow(1.0 + dt * lambda, -steps);
  double err = 0.0;
  for (std::size_t i = 0; i < run.mode.size(); ++i) err = std::max(err, std::abs(run.numeric[i] - amp * run.mode[i]));
  return err;
}

/// Max error against the exact-in-time solution exp(-lambda_h t) cos(pi x)
/// of the semi-discrete system.
inline double manufactured_time_error(int n, double dt, double t_end) {
  const int steps = static_cast<int>(std::lround(t_end / dt));
  const auto run = run_manufactured(n, dt, steps);
  const double amp = std::exp(-run.lambda_h * t_end);
  double err = 0.0;
  for (std::size_t i = 0; i < run.mode.size(); ++i) err = std::max(err, std::abs(run.numeric[i] - amp * run.mode[i]));
  return err;
}

}  // namespace testing
