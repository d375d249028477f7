#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mpmsim/config.hpp"
#include "mpmsim/cpm.hpp"
#include "mpmsim/fvm.hpp"
#include "mpmsim/lattice.hpp"

namespace mpmsim {

/// Voxels whose centre distance from `center` lies in [inner, outer].
/// Throws DegenerateShell unless 0 < inner < outer.
VoxelMask generate_synthetic_pleura(Index3 dims, double inner_radius, double outer_radius,
                                    std::array<double, 3> center, double h = 1.0);

/// Centre of the lattice in voxel-index coordinates.
std::array<double, 3> lattice_center(Index3 dims) noexcept;

/// Pleural mask named by the config: the VMK1 file if given, else the
/// synthetic shell.
VoxelMask build_mask(const SimConfig& cfg);

struct RunSummary {
  std::int64_t mcs_completed = 0;
  std::size_t initial_tumour_voxels = 0;
  std::size_t final_tumour_voxels = 0;
  std::size_t live_cells = 0;
  std::size_t divisions = 0;
  std::size_t snapshots = 0;
  bool audits_passed = true;
  std::int64_t pde_steps = 0;
  double pde_seconds = 0.0;
  BoundingBox final_box;
};

/// The coupled CPM / bounding box / PDE loop.
class Simulation {
 public:
  /// Snapshots go to `out_dir` when given.
  explicit Simulation(SimConfig cfg, std::optional<std::filesystem::path> out_dir = std::nullopt);

  /// One MCS: retrack if due, CPM sweep, growth and division, one PDE step
  /// if due, snapshot if due. Errors carry the mcs and phase.
  void advance();

  /// Runs until `total_mcs` MCS are done.
  RunSummary run();

  const SimConfig& config() const noexcept { return cfg_; }
  const CPMState& state() const noexcept { return state_; }
  const FieldSet& fields() const noexcept { return fields_; }
  const BoundingBox& box() const noexcept { return box_; }
  const RunSummary& summary() const noexcept { return summary_; }

  /// Writes a snapshot and audits the CPM state.
  void snapshot();

 private:
  void retrack();
  void pde_step();

  SimConfig cfg_;
  std::optional<std::filesystem::path> out_dir_;
  CPMState state_;
  FieldSet fields_;
  BoundingBox box_;
  Rng rng_;
  RunSummary summary_;
};

/// Runs the whole simulation and writes summary.json next to the snapshots.
RunSummary run_simulation(const SimConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace mpmsim
