#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mpmsim/fvm.hpp"
#include "mpmsim/krylov.hpp"
#include "mpmsim/lattice.hpp"
#include "mpmsim/parallel_step.hpp"

namespace mpmsim {

/// Shared-file exchange between the sequential model and the PDE workers.
///
/// Layout: one JSON header line, then each named array as little-endian
/// float64 values in x-fastest order, then (optionally) one byte per voxel
/// of the pleural mask. The `mcs` tag guards against reading a stale file.
struct HandoffFile {
  std::int64_t mcs = 0;
  BoundingBox box;
  Lattice3D lattice;
  std::vector<std::string> names;
  std::vector<std::vector<double>> arrays;
  std::optional<std::vector<std::uint8_t>> mask;

  const std::vector<double>& array(const std::string& name) const;
};

/// Written to a temporary name and renamed, so readers never see a partial
/// file. Throws IoFailure.
void write_handoff(const std::filesystem::path& path, const HandoffFile& file);

/// Throws IoFailure, or StaleFile when `expected_mcs` is given and differs.
HandoffFile read_handoff(const std::filesystem::path& path, std::optional<std::int64_t> expected_mcs = std::nullopt);

HandoffFile pack_fields(std::int64_t mcs, const BoundingBox& box, const FieldSet& fields);
FieldSet unpack_fields(const HandoffFile& file);

HandoffFile pack_step_input(std::int64_t mcs, const BoundingBox& box, const StepData& data, const VoxelMask& box_mask);
StepData unpack_step_input(const HandoffFile& file);

/// One PDE step in shared-file mode: the input is written to
/// `dir`/handoff_in.mpmh, each worker reads it and solves its slab, rank 0
/// writes `dir`/handoff_out.mpmh, and the caller's result is read back from
/// that file.
ParallelStepResult run_shared_file_step(const StepSetup& setup, const StepData& data, const VoxelMask& box_mask,
                                        const BoundingBox& box, std::int64_t mcs, int workers,
                                        const GMRESConfig& cfg, const std::filesystem::path& dir);

}  // namespace mpmsim
