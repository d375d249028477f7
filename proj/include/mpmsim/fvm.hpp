#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "mpmsim/krylov.hpp"
#include "mpmsim/lattice.hpp"
#include "mpmsim/linear_system.hpp"
#include "mpmsim/slab.hpp"

namespace mpmsim {

enum class BoundaryKind { NeumannZero, DirichletFarField };

struct TransportParams {
  double diffusivity = 1.0;
  double decay_rate = 0.0;
  double far_field = 0.0;
  BoundaryKind boundary = BoundaryKind::NeumannZero;

  void validate() const;
};

enum class Species : int { Oxygen = 0, Nutrient = 1, IL6 = 2, IL8 = 3 };
inline constexpr std::size_t kSpeciesCount = 4;
inline constexpr std::array<Species, kSpeciesCount> kAllSpecies{Species::Oxygen, Species::Nutrient, Species::IL6,
                                                                Species::IL8};
std::string_view species_name(Species s) noexcept;

/// Oxygen, nutrient, IL6 and IL8 on one shared lattice.
struct FieldSet {
  std::array<ScalarField, kSpeciesCount> species;

  static FieldSet uniform(const Lattice3D& lattice, std::array<double, kSpeciesCount> values = {});

  ScalarField& operator[](Species s) noexcept { return species[static_cast<std::size_t>(s)]; }
  const ScalarField& operator[](Species s) const noexcept { return species[static_cast<std::size_t>(s)]; }
  ScalarField& oxygen() noexcept { return (*this)[Species::Oxygen]; }
  ScalarField& nutrient() noexcept { return (*this)[Species::Nutrient]; }
  ScalarField& il6() noexcept { return (*this)[Species::IL6]; }
  ScalarField& il8() noexcept { return (*this)[Species::IL8]; }
  const Lattice3D& lattice() const noexcept { return species[0].lattice(); }

  friend bool operator==(const FieldSet&, const FieldSet&) = default;
};

/// One implicit Euler step of
///   dC/dt = D lap(C) - mu C + source - uptake
/// on the 7-point stencil:
///   (I/dt - D L + mu I) C' = C/dt + source - uptake.
///
/// Rows are the slab's owned voxels. `field`, `source` and `uptake` live on
/// the owned block; `diffusivity_scale` (optional, per-voxel multiplier of D,
/// harmonic mean across faces) lives on the extended block so its ghost
/// planes must already be exchanged.
LinearSystem assemble_step(const ScalarField& field, const TransportParams& params, const ScalarField& source,
                           const ScalarField& uptake, double dt, const SlabLayout& layout,
                           const ScalarField* diffusivity_scale = nullptr);

/// Whole-box assembly.
LinearSystem assemble_step(const ScalarField& field, const TransportParams& params, const ScalarField& source,
                           const ScalarField& uptake, double dt, const ScalarField* diffusivity_scale = nullptr);

/// Scalars shared by every worker for one PDE step.
struct StepSetup {
  Lattice3D lattice;
  std::array<TransportParams, kSpeciesCount> transport{};
  double dt = 1.0;

  void validate() const;
};

/// Per-voxel inputs for one PDE step, on the box lattice.
struct StepData {
  FieldSet fields;
  FieldSet source;
  FieldSet uptake;
  ScalarField diffusivity_scale;

  static StepData quiescent(const Lattice3D& lattice);
};

struct StepOutcome {
  FieldSet fields;
  std::array<SolveStats, kSpeciesCount> stats{};
  std::array<std::size_t, kSpeciesCount> clamped{};
};

/// Clamps negative values to zero; returns how many were clamped.
std::size_t clamp_non_negative(std::span<double> values) noexcept;

/// Serial step of all four species.
StepOutcome step_species(const StepSetup& setup, const StepData& data, const GMRESConfig& cfg);

}  // namespace mpmsim
