#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mpmsim/lattice.hpp"

namespace mpmsim {

using CellId = std::uint32_t;
inline constexpr CellId kMedium = 0;

enum class CellKind : std::uint8_t { Medium = 0, Tumour = 1 };

struct CellRecord {
  CellId id = kMedium;
  CellKind kind = CellKind::Medium;
  std::int64_t volume = 0;
  double target_volume = 0.0;
  bool alive = false;
};

/// Hamiltonian and proliferation parameters. The shipped values are
/// placeholders chosen for stable small-lattice runs; none are calibrated.
struct CPMParams {
  double j_tumour_tumour = 2.0;
  double j_tumour_medium = 4.0;
  double j_medium_medium = 0.0;
  double lambda_volume = 4.0;
  double temperature = 4.0;
  double growth_rate = 0.1;
  double initial_target_volume = 8.0;
  std::int64_t mitosis_volume = 16;
  double uptake_oxygen = 0.01;
  double uptake_nutrient = 0.01;
  double secretion_il6 = 0.01;
  double secretion_il8 = 0.01;
  double hypoxia_threshold = 0.2;

  double adhesion(CellKind a, CellKind b) const noexcept;
  void validate() const;
};

struct CPMState {
  Lattice3D lattice;
  std::vector<CellId> sigma;
  /// Indexed by cell id; slot 0 is the medium placeholder.
  std::vector<CellRecord> cells;
  std::int64_t mcs = 0;
  VoxelMask pleural_mask;

  CellKind kind_of(CellId id) const noexcept { return id == kMedium ? CellKind::Medium : cells[id].kind; }
  bool is_tumour_voxel(std::size_t idx) const noexcept { return kind_of(sigma[idx]) == CellKind::Tumour; }
  std::vector<std::size_t> tumour_voxels() const;
  std::size_t tumour_voxel_count() const noexcept;
  std::size_t live_cell_count() const noexcept;
  CellId add_cell(CellKind kind, double target_volume);
};

struct FlipStats {
  std::int64_t attempted = 0;
  std::int64_t accepted = 0;
  std::int64_t rejected_confinement = 0;
};

struct DivisionEvent {
  CellId parent = kMedium;
  CellId child = kMedium;
  std::int64_t parent_volume = 0;
  std::int64_t child_volume = 0;
};

struct CouplingFields {
  ScalarField uptake_oxygen;
  ScalarField uptake_nutrient;
  ScalarField secretion_il6;
  ScalarField secretion_il8;
};

using Rng = std::mt19937_64;

double uniform01(Rng& rng) noexcept;
std::size_t uniform_index(Rng& rng, std::size_t n) noexcept;

/// Places `n_cells` single-voxel tumour cells at distinct in-mask voxels of
/// `seed_region`. Throws RegionTooSmall when fewer in-mask voxels exist.
CPMState initialize_cells(const VoxelMask& mask, const BoundingBox& seed_region, int n_cells,
                          std::uint64_t rng_seed, double initial_target_volume = 1.0);

BoundingBox compute_bounding_box(const CPMState& state, int margin);

double delta_hamiltonian(const CPMState& state, const CPMParams& params, std::size_t voxel, CellId candidate);

bool metropolis_accept(double delta_h, double temperature, Rng& rng) noexcept;

FlipStats mcs_step(CPMState& state, const CPMParams& params, Rng& rng);

std::vector<DivisionEvent> grow_and_divide(CPMState& state, const CPMParams& params, const ScalarField& oxygen);

CouplingFields coupling_fields(const CPMState& state, const CPMParams& params);

bool audit(const CPMState& state);

}  // namespace mpmsim
