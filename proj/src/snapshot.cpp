#include "mpmsim/snapshot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "mpmsim/errors.hpp"

namespace mpmsim {

namespace {

std::string mcs_tag(std::int64_t mcs) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mcs%06lld", static_cast<long long>(mcs));
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

void close_checked(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) fail(ErrorCode::IoFailure, "failed writing " + path.string());
}

}  // namespace

Slice2D normalized_mid_slice(const ScalarField& field, const BoundingBox& box) {
  if (!box_within(field.lattice(), box)) fail(ErrorCode::BoxOutOfBounds, "slice box outside the field");
  Slice2D slice;
  slice.nx = box.extent(0);
  slice.ny = box.extent(1);
  slice.k = box.lo.k + (box.hi.k - box.lo.k) / 2;
  slice.values.reserve(static_cast<std::size_t>(slice.nx) * static_cast<std::size_t>(slice.ny));
  for (int j = box.lo.j; j <= box.hi.j; ++j) {
    for (int i = box.lo.i; i <= box.hi.i; ++i) slice.values.push_back(field.at(i, j, slice.k));
  }
  const double peak = *std::max_element(slice.values.begin(), slice.values.end());
  for (auto& v : slice.values) v = peak > 0.0 ? v / peak : 0.0;
  return slice;
}

SnapshotFiles write_snapshot(const FieldSet& fields, const CPMState& state, const BoundingBox& box,
                             const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  const auto tag = mcs_tag(state.mcs);

  SnapshotFiles files;
  for (auto s : kAllSpecies) {
    const auto slice = normalized_mid_slice(fields[s], box);
    auto path = dir / ("slice_" + std::string(species_name(s)) + "_" + tag + ".csv");
    auto out = open_out(path);
    for (int j = 0; j < slice.ny; ++j) {
      for (int i = 0; i < slice.nx; ++i) {
        if (i) out << ',';
        out << slice.values[static_cast<std::size_t>(j) * static_cast<std::size_t>(slice.nx) +
                            static_cast<std::size_t>(i)];
      }
      out << '\n';
    }
    close_checked(out, path);
    files.slices.push_back(std::move(path));
  }

  files.census = dir / ("cells_" + tag + ".csv");
  {
    auto out = open_out(files.census);
    out << "mcs,cell_id,kind,volume,target_volume\n";
    for (std::size_t id = 1; id < state.cells.size(); ++id) {
      const auto& c = state.cells[id];
      if (!c.alive) continue;
      out << state.mcs << ',' << c.id << ',' << (c.kind == CellKind::Tumour ? "tumour" : "medium") << ','
          << c.volume << ',' << c.target_volume << '\n';
    }
    close_checked(out, files.census);
  }

  files.box = dir / ("box_" + tag + ".json");
  {
    auto out = open_out(files.box);
    out << "{\"mcs\": " << state.mcs << ", \"lo\": [" << box.lo.i << ", " << box.lo.j << ", " << box.lo.k
        << "], \"hi\": [" << box.hi.i << ", " << box.hi.j << ", " << box.hi.k << "], \"margin\": " << box.margin
        << ", \"dims\": [" << box.extent(0) << ", " << box.extent(1) << ", " << box.extent(2) << "]}\n";
    close_checked(out, files.box);
  }
  return files;
}

}  // namespace mpmsim
