#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace mpmsim {

struct Index3 {
  int i = 0;
  int j = 0;
  int k = 0;

  int operator[](int axis) const { return axis == 0 ? i : (axis == 1 ? j : k); }
  int& operator[](int axis) { return axis == 0 ? i : (axis == 1 ? j : k); }

  friend bool operator==(const Index3&, const Index3&) = default;
};

/// Uniform structured 3D voxel lattice. Voxels are ordered x-fastest:
/// index(i, j, k) = i + nx * (j + ny * k).
class Lattice3D {
 public:
  Lattice3D() = default;
  Lattice3D(int nx, int ny, int nz, double h = 1.0);
  explicit Lattice3D(Index3 dims, double h = 1.0) : Lattice3D(dims.i, dims.j, dims.k, h) {}

  int nx() const noexcept { return dims_.i; }
  int ny() const noexcept { return dims_.j; }
  int nz() const noexcept { return dims_.k; }
  Index3 dims() const noexcept { return dims_; }
  int extent(int axis) const noexcept { return dims_[axis]; }
  double h() const noexcept { return h_; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(dims_.i) * static_cast<std::size_t>(dims_.j) *
           static_cast<std::size_t>(dims_.k);
  }

  std::size_t index(int i, int j, int k) const noexcept {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_.i) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_.j) * static_cast<std::size_t>(k));
  }
  std::size_t index(Index3 c) const noexcept { return index(c.i, c.j, c.k); }
  Index3 coords(std::size_t idx) const noexcept;
  bool contains(Index3 c) const noexcept {
    return c.i >= 0 && c.j >= 0 && c.k >= 0 && c.i < dims_.i && c.j < dims_.j && c.k < dims_.k;
  }

  friend bool operator==(const Lattice3D&, const Lattice3D&) = default;

 private:
  Index3 dims_{1, 1, 1};
  double h_ = 1.0;
};

/// Inclusive voxel-index extents of a region of interest.
struct BoundingBox {
  Index3 lo;
  Index3 hi;
  int margin = 0;

  Index3 dims() const noexcept { return {hi.i - lo.i + 1, hi.j - lo.j + 1, hi.k - lo.k + 1}; }
  int extent(int axis) const noexcept { return hi[axis] - lo[axis] + 1; }
  std::size_t volume() const noexcept {
    auto d = dims();
    return static_cast<std::size_t>(d.i) * static_cast<std::size_t>(d.j) * static_cast<std::size_t>(d.k);
  }
  bool contains(Index3 c) const noexcept {
    return c.i >= lo.i && c.i <= hi.i && c.j >= lo.j && c.j <= hi.j && c.k >= lo.k && c.k <= hi.k;
  }
  bool valid() const noexcept { return lo.i <= hi.i && lo.j <= hi.j && lo.k <= hi.k; }

  /// Same extents; margin is bookkeeping only.
  bool same_extents(const BoundingBox& o) const noexcept { return lo == o.lo && hi == o.hi; }

  static BoundingBox whole(const Lattice3D& lattice) {
    auto d = lattice.dims();
    return {{0, 0, 0}, {d.i - 1, d.j - 1, d.k - 1}, 0};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

bool box_within(const Lattice3D& lattice, const BoundingBox& box) noexcept;

/// One boolean per voxel; true marks the pleural space.
class VoxelMask {
 public:
  VoxelMask() = default;
  explicit VoxelMask(Lattice3D lattice, bool fill = false);
  VoxelMask(Lattice3D lattice, std::vector<std::uint8_t> bits);

  const Lattice3D& lattice() const noexcept { return lattice_; }
  bool operator[](std::size_t idx) const noexcept { return bits_[idx] != 0; }
  void set(std::size_t idx, bool value) noexcept { bits_[idx] = value ? 1 : 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::size_t count() const noexcept;

  friend bool operator==(const VoxelMask&, const VoxelMask&) = default;

 private:
  Lattice3D lattice_;
  std::vector<std::uint8_t> bits_;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(Lattice3D lattice, double fill = 0.0);
  ScalarField(Lattice3D lattice, std::vector<double> values);

  const Lattice3D& lattice() const noexcept { return lattice_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t idx) const noexcept { return values_[idx]; }
  double& operator[](std::size_t idx) noexcept { return values_[idx]; }
  double at(int i, int j, int k) const noexcept { return values_[lattice_.index(i, j, k)]; }
  double& at(int i, int j, int k) noexcept { return values_[lattice_.index(i, j, k)]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double sum() const noexcept;
  double min() const noexcept;
  double max() const noexcept;
  void fill(double value) noexcept;

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  Lattice3D lattice_;
  std::vector<double> values_;
};

/// Componentwise min/max over `voxels` (linear indices into `lattice`),
/// grown by `margin` on every face and clipped to the lattice.
/// Throws NoTumourCells when `voxels` is empty.
BoundingBox bounding_box_of(const Lattice3D& lattice, std::span<const std::size_t> voxels, int margin);

bool should_retrack(std::int64_t mcs, std::int64_t interval);

ScalarField extract_subfield(const ScalarField& field, const BoundingBox& box);
ScalarField embed_subfield(ScalarField target, const ScalarField& sub, const BoundingBox& box);
void embed_subfield_into(ScalarField& target, const ScalarField& sub, const BoundingBox& box);

// Plane helpers for the slab exchange: copy the plane `index` orthogonal to
// `axis` out of / into a field, in x-fastest order of the remaining axes.
std::size_t plane_size(const Lattice3D& lattice, int axis) noexcept;
void copy_plane_out(const Lattice3D& lattice, std::span<const double> values, int axis, int index,
                    std::span<double> out);
void copy_plane_in(const Lattice3D& lattice, std::span<double> values, int axis, int index,
                   std::span<const double> in);

// VMK1 voxel-mask format: "VMK1 <nx> <ny> <nz>\n" then one byte (0/1) per
// voxel, x-fastest.
void write_vmk1(std::ostream& out, const VoxelMask& mask);
VoxelMask read_vmk1(std::istream& in);
void write_vmk1(const std::filesystem::path& path, const VoxelMask& mask);
VoxelMask read_vmk1(const std::filesystem::path& path);

}  // namespace mpmsim
