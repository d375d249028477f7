#include "mpmsim/lattice.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "mpmsim/errors.hpp"

namespace mpmsim {

namespace {

std::string to_string(Index3 c) {
  std::ostringstream os;
  os << '(' << c.i << ',' << c.j << ',' << c.k << ')';
  return os.str();
}

// The two axes orthogonal to `axis`, fastest first.
std::array<int, 2> plane_axes(int axis) noexcept {
  switch (axis) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

}  // namespace

Lattice3D::Lattice3D(int nx, int ny, int nz, double h) : dims_{nx, ny, nz}, h_(h) {
  if (nx < 1 || ny < 1 || nz < 1) {
    fail(ErrorCode::InvalidArgument, "lattice dims must be >= 1, got " + to_string(dims_));
  }
  if (!(h > 0.0)) fail(ErrorCode::InvalidArgument, "lattice spacing must be positive");
}

Index3 Lattice3D::coords(std::size_t idx) const noexcept {
  const auto nx = static_cast<std::size_t>(dims_.i);
  const auto ny = static_cast<std::size_t>(dims_.j);
  Index3 c;
  c.i = static_cast<int>(idx % nx);
  idx /= nx;
  c.j = static_cast<int>(idx % ny);
  c.k = static_cast<int>(idx / ny);
  return c;
}

bool box_within(const Lattice3D& lattice, const BoundingBox& box) noexcept {
  return box.valid() && lattice.contains(box.lo) && lattice.contains(box.hi);
}

VoxelMask::VoxelMask(Lattice3D lattice, bool fill)
    : lattice_(lattice), bits_(lattice.size(), fill ? 1 : 0) {}

VoxelMask::VoxelMask(Lattice3D lattice, std::vector<std::uint8_t> bits)
    : lattice_(lattice), bits_(std::move(bits)) {
  if (bits_.size() != lattice_.size()) {
    fail(ErrorCode::DimMismatch, "mask has " + std::to_string(bits_.size()) + " bits for " +
                                     std::to_string(lattice_.size()) + " voxels");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t VoxelMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

ScalarField::ScalarField(Lattice3D lattice, double fill) : lattice_(lattice), values_(lattice.size(), fill) {}

ScalarField::ScalarField(Lattice3D lattice, std::vector<double> values)
    : lattice_(lattice), values_(std::move(values)) {
  if (values_.size() != lattice_.size()) {
    fail(ErrorCode::DimMismatch, "field has " + std::to_string(values_.size()) + " values for " +
                                     std::to_string(lattice_.size()) + " voxels");
  }
}

double ScalarField::sum() const noexcept { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double ScalarField::min() const noexcept {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double ScalarField::max() const noexcept {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

void ScalarField::fill(double value) noexcept { std::fill(values_.begin(), values_.end(), value); }

BoundingBox bounding_box_of(const Lattice3D& lattice, std::span<const std::size_t> voxels, int margin) {
  if (margin < 0) fail(ErrorCode::InvalidArgument, "margin must be non-negative");
  if (voxels.empty()) fail(ErrorCode::NoTumourCells, "no tumour voxels to bound");

  constexpr int kMax = std::numeric_limits<int>::max();
  Index3 lo{kMax, kMax, kMax};
  Index3 hi{-1, -1, -1};
  for (auto idx : voxels) {
    auto c = lattice.coords(idx);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  }
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(0, lo[a] - margin);
    hi[a] = std::min(lattice.extent(a) - 1, hi[a] + margin);
  }
  return {lo, hi, margin};
}

bool should_retrack(std::int64_t mcs, std::int64_t interval) {
  if (interval < 1) fail(ErrorCode::InvalidArgument, "retrack interval must be >= 1");
  return mcs % interval == 0;
}

ScalarField extract_subfield(const ScalarField& field, const BoundingBox& box) {
  const auto& lat = field.lattice();
  if (!box_within(lat, box)) {
    fail(ErrorCode::BoxOutOfBounds, "box " + to_string(box.lo) + ".." + to_string(box.hi) +
                                        " outside lattice " + to_string(lat.dims()));
  }
  Lattice3D sub_lat(box.dims(), lat.h());
  ScalarField sub(sub_lat);
  const int run = box.extent(0);
  for (int c = 0; c < sub_lat.nz(); ++c) {
    for (int b = 0; b < sub_lat.ny(); ++b) {
      const double* src = &field.values()[lat.index(box.lo.i, box.lo.j + b, box.lo.k + c)];
      std::copy(src, src + run, &sub.values()[sub_lat.index(0, b, c)]);
    }
  }
  return sub;
}

void embed_subfield_into(ScalarField& target, const ScalarField& sub, const BoundingBox& box) {
  const auto& lat = target.lattice();
  if (!box_within(lat, box)) {
    fail(ErrorCode::BoxOutOfBounds, "box " + to_string(box.lo) + ".." + to_string(box.hi) +
                                        " outside lattice " + to_string(lat.dims()));
  }
  if (sub.lattice().dims() != box.dims()) {
    fail(ErrorCode::DimMismatch,
         "subfield dims " + to_string(sub.lattice().dims()) + " != box dims " + to_string(box.dims()));
  }
  const auto& sub_lat = sub.lattice();
  const int run = box.extent(0);
  for (int c = 0; c < sub_lat.nz(); ++c) {
    for (int b = 0; b < sub_lat.ny(); ++b) {
      const double* src = &sub.values()[sub_lat.index(0, b, c)];
      std::copy(src, src + run, &target.values()[lat.index(box.lo.i, box.lo.j + b, box.lo.k + c)]);
    }
  }
}

ScalarField embed_subfield(ScalarField target, const ScalarField& sub, const BoundingBox& box) {
  embed_subfield_into(target, sub, box);
  return target;
}

std::size_t plane_size(const Lattice3D& lattice, int axis) noexcept {
  auto [a, b] = plane_axes(axis);
  return static_cast<std::size_t>(lattice.extent(a)) * static_cast<std::size_t>(lattice.extent(b));
}

void copy_plane_out(const Lattice3D& lattice, std::span<const double> values, int axis, int index,
                    std::span<double> out) {
  if (out.size() != plane_size(lattice, axis) || values.size() != lattice.size()) {
    fail(ErrorCode::DimMismatch, "plane buffer size mismatch");
  }
  auto [a, b] = plane_axes(axis);
  std::size_t n = 0;
  Index3 c;
  c[axis] = index;
  for (int q = 0; q < lattice.extent(b); ++q) {
    c[b] = q;
    for (int p = 0; p < lattice.extent(a); ++p) {
      c[a] = p;
      out[n++] = values[lattice.index(c)];
    }
  }
}

void copy_plane_in(const Lattice3D& lattice, std::span<double> values, int axis, int index,
                   std::span<const double> in) {
  if (in.size() != plane_size(lattice, axis) || values.size() != lattice.size()) {
    fail(ErrorCode::DimMismatch, "plane buffer size mismatch");
  }
  auto [a, b] = plane_axes(axis);
  std::size_t n = 0;
  Index3 c;
  c[axis] = index;
  for (int q = 0; q < lattice.extent(b); ++q) {
    c[b] = q;
    for (int p = 0; p < lattice.extent(a); ++p) {
      c[a] = p;
      values[lattice.index(c)] = in[n++];
    }
  }
}

void write_vmk1(std::ostream& out, const VoxelMask& mask) {
  const auto& lat = mask.lattice();
  out << "VMK1 " << lat.nx() << ' ' << lat.ny() << ' ' << lat.nz() << '\n';
  auto bits = mask.bits();
  out.write(reinterpret_cast<const char*>(bits.data()), static_cast<std::streamsize>(bits.size()));
  if (!out) fail(ErrorCode::IoFailure, "failed writing VMK1 payload");
}

VoxelMask read_vmk1(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) fail(ErrorCode::IoFailure, "missing VMK1 header");
  std::istringstream hs(header);
  std::string magic;
  int nx = 0, ny = 0, nz = 0;
  if (!(hs >> magic >> nx >> ny >> nz) || magic != "VMK1") {
    fail(ErrorCode::IoFailure, "malformed VMK1 header: '" + header + "'");
  }
  if (nx < 1 || ny < 1 || nz < 1) fail(ErrorCode::IoFailure, "VMK1 dims must be positive");
  Lattice3D lat(nx, ny, nz);
  std::vector<std::uint8_t> bits(lat.size());
  in.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(bits.size()));
  if (static_cast<std::size_t>(in.gcount()) != bits.size()) {
    fail(ErrorCode::IoFailure, "truncated VMK1 payload");
  }
  for (auto b : bits) {
    if (b > 1) fail(ErrorCode::IoFailure, "VMK1 voxel byte must be 0 or 1");
  }
  return VoxelMask(lat, std::move(bits));
}

void write_vmk1(const std::filesystem::path& path, const VoxelMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  write_vmk1(out, mask);
}

VoxelMask read_vmk1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  return read_vmk1(in);
}

}  // namespace mpmsim
