#pragma once

#include <cstddef>
#include <vector>

#include "mpmsim/lattice.hpp"

namespace mpmsim {

/// A contiguous run of planes [start, start + count) along `axis`.
struct SlabRange {
  int axis = 2;
  int start = 0;
  int count = 1;

  friend bool operator==(const SlabRange&, const SlabRange&) = default;
};

/// Local geometry of one worker's slab inside the solve box.
///
/// The worker stores an "extended" block: its owned planes plus one ghost
/// plane on each side that borders another worker. Coordinates of both
/// blocks are relative to the box lattice `global`.
class SlabLayout {
 public:
  SlabLayout(const Lattice3D& global, SlabRange range);

  static SlabLayout whole(const Lattice3D& global) { return SlabLayout(global, {2, 0, global.nz()}); }

  const Lattice3D& global() const noexcept { return global_; }
  const SlabRange& range() const noexcept { return range_; }
  int axis() const noexcept { return range_.axis; }

  bool has_lower_ghost() const noexcept { return lower_ghost_; }
  bool has_upper_ghost() const noexcept { return upper_ghost_; }

  const BoundingBox& owned_box() const noexcept { return owned_box_; }
  const BoundingBox& extended_box() const noexcept { return ext_box_; }
  const Lattice3D& owned_lattice() const noexcept { return owned_lattice_; }
  const Lattice3D& extended_lattice() const noexcept { return ext_lattice_; }

  std::size_t owned_size() const noexcept { return owned_lattice_.size(); }
  std::size_t extended_size() const noexcept { return ext_lattice_.size(); }
  std::size_t plane_size() const noexcept { return mpmsim::plane_size(ext_lattice_, range_.axis); }

  /// Position of owned voxel n (x-fastest over the owned block) inside the
  /// extended block.
  const std::vector<std::size_t>& owned_to_extended() const noexcept { return owned_to_ext_; }

  // Plane indices along the axis, in extended-block coordinates.
  int first_owned_plane() const noexcept { return lower_ghost_ ? 1 : 0; }
  int last_owned_plane() const noexcept { return first_owned_plane() + range_.count - 1; }
  int lower_ghost_plane() const noexcept { return 0; }
  int upper_ghost_plane() const noexcept { return ext_lattice_.extent(range_.axis) - 1; }

  /// Copies owned values into their slots of an extended-block vector.
  void scatter_owned(std::span<const double> owned, std::span<double> extended) const;
  void gather_owned(std::span<const double> extended, std::span<double> owned) const;

 private:
  Lattice3D global_;
  SlabRange range_;
  bool lower_ghost_ = false;
  bool upper_ghost_ = false;
  BoundingBox owned_box_;
  BoundingBox ext_box_;
  Lattice3D owned_lattice_;
  Lattice3D ext_lattice_;
  std::vector<std::size_t> owned_to_ext_;
};

}  // namespace mpmsim
