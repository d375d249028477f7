#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "mpmsim/cpm.hpp"
#include "mpmsim/fvm.hpp"
#include "mpmsim/krylov.hpp"
#include "mpmsim/lattice.hpp"

namespace mpmsim {

enum class HandoffMode { InProcess, SharedFile };

/// Concentric spherical shells standing in for the pleural space.
struct SyntheticPleura {
  double inner_radius = 8.0;
  double outer_radius = 14.0;
  /// Defaults to the lattice centre.
  std::optional<std::array<double, 3>> center;
};

struct SeedSpec {
  BoundingBox region{{14, 14, 25}, {18, 18, 28}, 0};
  int n_cells = 4;
  /// Placement seed; falls back to SimConfig::rng_seed.
  std::optional<std::uint64_t> rng_seed;
};

struct SimConfig {
  Index3 dims{32, 32, 32};
  double h = 1.0;
  std::optional<std::filesystem::path> mask_file;
  SyntheticPleura pleura;
  SeedSpec seed;
  CPMParams cpm;
  std::array<TransportParams, kSpeciesCount> transport{
      TransportParams{1.0, 0.0, 1.0, BoundaryKind::DirichletFarField},
      TransportParams{0.8, 0.0, 1.0, BoundaryKind::DirichletFarField},
      TransportParams{0.5, 0.05, 0.0, BoundaryKind::NeumannZero},
      TransportParams{0.5, 0.10, 0.0, BoundaryKind::NeumannZero},
  };
  /// Diffusivity multiplier for box voxels outside the pleural mask.
  double outside_mask_diffusivity_scale = 0.05;
  double dt = 1.0;
  int pde_interval = 1;
  int margin = 5;
  int retrack_interval = 50;
  int workers = 1;
  GMRESConfig gmres;
  int total_mcs = 200;
  int snapshot_interval = 50;
  std::uint64_t rng_seed = 1234;
  HandoffMode handoff_mode = HandoffMode::InProcess;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

SimConfig parse_config(std::string_view json_text);
SimConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const SimConfig& cfg);

}  // namespace mpmsim
