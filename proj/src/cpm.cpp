#include "mpmsim/cpm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "mpmsim/errors.hpp"

namespace mpmsim {

namespace {

constexpr std::array<Index3, 6> kNeighbours{{
    {-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1},
}};

Index3 offset(Index3 c, Index3 d) noexcept { return {c.i + d.i, c.j + d.j, c.k + d.k}; }

double squared(double x) noexcept { return x * x; }

}  // namespace

double CPMParams::adhesion(CellKind a, CellKind b) const noexcept {
  if (a == CellKind::Tumour && b == CellKind::Tumour) return j_tumour_tumour;
  if (a == CellKind::Medium && b == CellKind::Medium) return j_medium_medium;
  return j_tumour_medium;
}

void CPMParams::validate() const {
  if (!(temperature > 0.0)) fail(ErrorCode::InvalidArgument, "CPM temperature must be > 0");
  for (double rate : {growth_rate, uptake_oxygen, uptake_nutrient, secretion_il6, secretion_il8, lambda_volume}) {
    if (!(rate >= 0.0)) fail(ErrorCode::InvalidArgument, "CPM rates and lambda_volume must be >= 0");
  }
  if (mitosis_volume < 2) fail(ErrorCode::InvalidArgument, "mitosis_volume must be >= 2");
  if (!(initial_target_volume >= 1.0)) fail(ErrorCode::InvalidArgument, "initial_target_volume must be >= 1");
}

std::vector<std::size_t> CPMState::tumour_voxels() const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < sigma.size(); ++v) {
    if (is_tumour_voxel(v)) out.push_back(v);
  }
  return out;
}

std::size_t CPMState::tumour_voxel_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t v = 0; v < sigma.size(); ++v) n += is_tumour_voxel(v) ? 1 : 0;
  return n;
}

std::size_t CPMState::live_cell_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(cells.begin() + 1, cells.end(), [](const CellRecord& c) { return c.alive; }));
}

CellId CPMState::add_cell(CellKind kind, double target_volume) {
  if (cells.empty()) cells.push_back(CellRecord{});
  CellRecord rec;
  rec.id = static_cast<CellId>(cells.size());
  rec.kind = kind;
  rec.target_volume = target_volume;
  rec.alive = true;
  cells.push_back(rec);
  return rec.id;
}

double uniform01(Rng& rng) noexcept { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

__extension__ using U128 = unsigned __int128;

std::size_t uniform_index(Rng& rng, std::size_t n) noexcept {
  // Multiply-shift keeps the mapping identical across standard libraries.
  return static_cast<std::size_t>((static_cast<U128>(rng()) * n) >> 64);
}

CPMState initialize_cells(const VoxelMask& mask, const BoundingBox& seed_region, int n_cells,
                          std::uint64_t rng_seed, double initial_target_volume) {
  if (n_cells < 1) fail(ErrorCode::InvalidArgument, "n_cells must be >= 1");
  const auto& lat = mask.lattice();
  if (!box_within(lat, seed_region)) fail(ErrorCode::BoxOutOfBounds, "seed region outside lattice");

  std::vector<std::size_t> candidates;
  for (int k = seed_region.lo.k; k <= seed_region.hi.k; ++k) {
    for (int j = seed_region.lo.j; j <= seed_region.hi.j; ++j) {
      for (int i = seed_region.lo.i; i <= seed_region.hi.i; ++i) {
        auto idx = lat.index(i, j, k);
        if (mask[idx]) candidates.push_back(idx);
      }
    }
  }
  if (candidates.size() < static_cast<std::size_t>(n_cells)) {
    fail(ErrorCode::RegionTooSmall, "seed region has " + std::to_string(candidates.size()) +
                                        " in-mask voxels for " + std::to_string(n_cells) + " cells");
  }

  Rng rng(rng_seed);
  // Partial Fisher-Yates: the first n_cells entries become the seeds.
  for (std::size_t a = 0; a < static_cast<std::size_t>(n_cells); ++a) {
    auto b = a + uniform_index(rng, candidates.size() - a);
    std::swap(candidates[a], candidates[b]);
  }

  CPMState state;
  state.lattice = lat;
  state.sigma.assign(lat.size(), kMedium);
  state.cells.push_back(CellRecord{});
  state.pleural_mask = mask;
  for (int c = 0; c < n_cells; ++c) {
    auto id = state.add_cell(CellKind::Tumour, initial_target_volume);
    state.sigma[candidates[static_cast<std::size_t>(c)]] = id;
    state.cells[id].volume = 1;
  }
  return state;
}

BoundingBox compute_bounding_box(const CPMState& state, int margin) {
  auto voxels = state.tumour_voxels();
  return bounding_box_of(state.lattice, voxels, margin);
}

double delta_hamiltonian(const CPMState& state, const CPMParams& params, std::size_t voxel, CellId candidate) {
  const CellId current = state.sigma[voxel];
  if (current == candidate) return 0.0;

  const auto& lat = state.lattice;
  const auto c = lat.coords(voxel);
  const CellKind kind_old = state.kind_of(current);
  const CellKind kind_new = state.kind_of(candidate);

  double d_adhesion = 0.0;
  for (const auto& d : kNeighbours) {
    auto n = offset(c, d);
    if (!lat.contains(n)) continue;
    const CellId other = state.sigma[lat.index(n)];
    const CellKind kind_other = state.kind_of(other);
    if (other != current) d_adhesion -= params.adhesion(kind_old, kind_other);
    if (other != candidate) d_adhesion += params.adhesion(kind_new, kind_other);
  }

  double d_volume = 0.0;
  if (current != kMedium) {
    const auto& cell = state.cells[current];
    const double v = static_cast<double>(cell.volume);
    d_volume += squared(v - 1.0 - cell.target_volume) - squared(v - cell.target_volume);
  }
  if (candidate != kMedium) {
    const auto& cell = state.cells[candidate];
    const double v = static_cast<double>(cell.volume);
    d_volume += squared(v + 1.0 - cell.target_volume) - squared(v - cell.target_volume);
  }
  return d_adhesion + params.lambda_volume * d_volume;
}

bool metropolis_accept(double delta_h, double temperature, Rng& rng) noexcept {
  if (delta_h <= 0.0) return true;
  return uniform01(rng) < std::exp(-delta_h / temperature);
}

FlipStats mcs_step(CPMState& state, const CPMParams& params, Rng& rng) {
  const auto& lat = state.lattice;
  const std::size_t n_voxels = lat.size();
  FlipStats stats;
  for (std::size_t attempt = 0; attempt < n_voxels; ++attempt) {
    ++stats.attempted;
    const auto target = uniform_index(rng, n_voxels);
    const auto& d = kNeighbours[uniform_index(rng, kNeighbours.size())];
    const auto n = offset(lat.coords(target), d);
    if (!lat.contains(n)) continue;

    const CellId candidate = state.sigma[lat.index(n)];
    const CellId current = state.sigma[target];
    if (candidate == current) continue;
    if (state.kind_of(candidate) == CellKind::Tumour && !state.pleural_mask[target]) {
      ++stats.rejected_confinement;
      continue;
    }

    const double dh = delta_hamiltonian(state, params, target, candidate);
    if (!metropolis_accept(dh, params.temperature, rng)) continue;

    ++stats.accepted;
    state.sigma[target] = candidate;
    if (current != kMedium) {
      auto& cell = state.cells[current];
      if (--cell.volume == 0) cell.alive = false;
    }
    if (candidate != kMedium) ++state.cells[candidate].volume;
  }
  ++state.mcs;
  return stats;
}

std::vector<DivisionEvent> grow_and_divide(CPMState& state, const CPMParams& params, const ScalarField& oxygen) {
  if (oxygen.lattice().dims() != state.lattice.dims()) {
    fail(ErrorCode::DimMismatch, "oxygen field does not match the CPM lattice");
  }

  const std::size_t n_cells = state.cells.size();
  std::vector<std::vector<std::size_t>> voxels(n_cells);
  for (std::size_t v = 0; v < state.sigma.size(); ++v) {
    if (state.sigma[v] != kMedium) voxels[state.sigma[v]].push_back(v);
  }

  for (CellId id = 1; id < n_cells; ++id) {
    auto& cell = state.cells[id];
    if (!cell.alive || cell.kind != CellKind::Tumour || voxels[id].empty()) continue;
    double total = 0.0;
    for (auto v : voxels[id]) total += oxygen[v];
    if (total / static_cast<double>(voxels[id].size()) >= params.hypoxia_threshold) {
      cell.target_volume += params.growth_rate;
    }
  }

  std::vector<DivisionEvent> events;
  for (CellId id = 1; id < n_cells; ++id) {
    if (!state.cells[id].alive || state.cells[id].volume < params.mitosis_volume) continue;
    const auto& members = voxels[id];

    std::array<double, 3> mean{};
    std::array<double, 3> var{};
    for (auto v : members) {
      auto c = state.lattice.coords(v);
      for (int a = 0; a < 3; ++a) mean[a] += c[a];
    }
    for (auto& m : mean) m /= static_cast<double>(members.size());
    for (auto v : members) {
      auto c = state.lattice.coords(v);
      for (int a = 0; a < 3; ++a) var[a] += squared(c[a] - mean[a]);
    }
    int axis = 0;
    for (int a = 1; a < 3; ++a) {
      if (var[a] > var[axis]) axis = a;
    }

    std::vector<std::size_t> lower, upper, on_plane;
    constexpr double kPlaneEps = 1e-9;
    for (auto v : members) {
      const double x = state.lattice.coords(v)[axis];
      if (x < mean[axis] - kPlaneEps) {
        lower.push_back(v);
      } else if (x > mean[axis] + kPlaneEps) {
        upper.push_back(v);
      } else {
        on_plane.push_back(v);
      }
    }
    for (auto v : on_plane) (lower.size() <= upper.size() ? lower : upper).push_back(v);

    const double child_target = std::round(state.cells[id].target_volume / 2.0);
    const CellId child = state.add_cell(CellKind::Tumour, child_target);
    auto& parent = state.cells[id];
    parent.target_volume = child_target;
    parent.volume = static_cast<std::int64_t>(lower.size());
    state.cells[child].volume = static_cast<std::int64_t>(upper.size());
    for (auto v : upper) state.sigma[v] = child;
    events.push_back({id, child, parent.volume, state.cells[child].volume});
  }
  return events;
}

CouplingFields coupling_fields(const CPMState& state, const CPMParams& params) {
  CouplingFields out{ScalarField(state.lattice), ScalarField(state.lattice), ScalarField(state.lattice),
                     ScalarField(state.lattice)};
  for (std::size_t v = 0; v < state.sigma.size(); ++v) {
    if (!state.is_tumour_voxel(v)) continue;
    out.uptake_oxygen[v] = params.uptake_oxygen;
    out.uptake_nutrient[v] = params.uptake_nutrient;
    out.secretion_il6[v] = params.secretion_il6;
    out.secretion_il8[v] = params.secretion_il8;
  }
  return out;
}

bool audit(const CPMState& state) {
  const auto& lat = state.lattice;
  if (state.sigma.size() != lat.size() || state.pleural_mask.lattice().dims() != lat.dims()) return false;
  if (state.cells.empty()) return false;

  std::vector<std::int64_t> counts(state.cells.size(), 0);
  std::size_t medium = 0;
  for (std::size_t v = 0; v < state.sigma.size(); ++v) {
    const CellId id = state.sigma[v];
    if (id == kMedium) {
      ++medium;
      continue;
    }
    if (id >= state.cells.size() || !state.cells[id].alive) return false;
    if (state.cells[id].kind == CellKind::Tumour && !state.pleural_mask[v]) return false;
    ++counts[id];
  }
  std::int64_t total = static_cast<std::int64_t>(medium);
  for (std::size_t id = 1; id < state.cells.size(); ++id) {
    const auto& cell = state.cells[id];
    if (cell.volume != counts[id]) return false;
    if (cell.alive && cell.volume <= 0) return false;
    total += cell.volume;
  }
  return total == static_cast<std::int64_t>(lat.size());
}

}  // namespace mpmsim
