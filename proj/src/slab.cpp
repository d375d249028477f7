#include "mpmsim/slab.hpp"

#include "mpmsim/errors.hpp"

namespace mpmsim {

SlabLayout::SlabLayout(const Lattice3D& global, SlabRange range) : global_(global), range_(range) {
  const int axis = range.axis;
  if (axis < 0 || axis > 2) fail(ErrorCode::InvalidArgument, "slab axis must be 0, 1 or 2");
  const int extent = global.extent(axis);
  if (range.count < 1 || range.start < 0 || range.start + range.count > extent) {
    fail(ErrorCode::InvalidArgument, "slab planes outside the box along axis " + std::to_string(axis));
  }
  lower_ghost_ = range.start > 0;
  upper_ghost_ = range.start + range.count < extent;

  owned_box_ = BoundingBox::whole(global);
  owned_box_.lo[axis] = range.start;
  owned_box_.hi[axis] = range.start + range.count - 1;
  ext_box_ = owned_box_;
  if (lower_ghost_) ext_box_.lo[axis] -= 1;
  if (upper_ghost_) ext_box_.hi[axis] += 1;

  owned_lattice_ = Lattice3D(owned_box_.dims(), global.h());
  ext_lattice_ = Lattice3D(ext_box_.dims(), global.h());

  owned_to_ext_.resize(owned_lattice_.size());
  const int shift = lower_ghost_ ? 1 : 0;
  for (std::size_t n = 0; n < owned_to_ext_.size(); ++n) {
    auto c = owned_lattice_.coords(n);
    c[axis] += shift;
    owned_to_ext_[n] = ext_lattice_.index(c);
  }
}

void SlabLayout::scatter_owned(std::span<const double> owned, std::span<double> extended) const {
  if (owned.size() != owned_size() || extended.size() != extended_size()) {
    fail(ErrorCode::DimMismatch, "slab vector size mismatch");
  }
  for (std::size_t n = 0; n < owned.size(); ++n) extended[owned_to_ext_[n]] = owned[n];
}

void SlabLayout::gather_owned(std::span<const double> extended, std::span<double> owned) const {
  if (owned.size() != owned_size() || extended.size() != extended_size()) {
    fail(ErrorCode::DimMismatch, "slab vector size mismatch");
  }
  for (std::size_t n = 0; n < owned.size(); ++n) owned[n] = extended[owned_to_ext_[n]];
}

}  // namespace mpmsim
