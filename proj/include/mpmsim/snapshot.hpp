#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mpmsim/cpm.hpp"
#include "mpmsim/fvm.hpp"
#include "mpmsim/lattice.hpp"

namespace mpmsim {

/// 2D z-slice through the middle of a box, row-major (j rows of i values).
struct Slice2D {
  int nx = 0;
  int ny = 0;
  int k = 0;
  std::vector<double> values;
};

/// Values of `field` on the box cross-section at the box's z midpoint,
/// divided by the slice maximum (all zeros when that maximum is 0).
Slice2D normalized_mid_slice(const ScalarField& field, const BoundingBox& box);

struct SnapshotFiles {
  std::vector<std::filesystem::path> slices;
  std::filesystem::path census;
  std::filesystem::path box;
};

/// Writes slice_<species>_mcsNNNNNN.csv, cells_mcsNNNNNN.csv and
/// box_mcsNNNNNN.json into `dir`. Throws IoFailure.
SnapshotFiles write_snapshot(const FieldSet& fields, const CPMState& state, const BoundingBox& box,
                             const std::filesystem::path& dir);

}  // namespace mpmsim
