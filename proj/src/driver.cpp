#include "mpmsim/driver.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>

#include "json.hpp"
#include "mpmsim/errors.hpp"
#include "mpmsim/handoff.hpp"
#include "mpmsim/log.hpp"
#include "mpmsim/parallel_step.hpp"
#include "mpmsim/snapshot.hpp"

namespace mpmsim {

namespace {

// Runs `fn`, re-labelling any library error with the mcs and phase.
template <class F>
void in_phase(std::int64_t mcs, const char* phase, F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    throw Error(e.code(), "mcs " + std::to_string(mcs) + ", phase " + phase + ": " + e.detail());
  }
}

double initial_value(const SimConfig& cfg, Species s) {
  const auto& t = cfg.transport[static_cast<std::size_t>(s)];
  return t.boundary == BoundaryKind::DirichletFarField ? t.far_field : 0.0;
}

ScalarField box_field(const ScalarField& global, const BoundingBox& box) { return extract_subfield(global, box); }

}  // namespace

std::array<double, 3> lattice_center(Index3 dims) noexcept {
  return {(dims.i - 1) / 2.0, (dims.j - 1) / 2.0, (dims.k - 1) / 2.0};
}

VoxelMask generate_synthetic_pleura(Index3 dims, double inner_radius, double outer_radius,
                                    std::array<double, 3> center, double h) {
  if (!(inner_radius > 0.0) || !(outer_radius > inner_radius)) {
    fail(ErrorCode::DegenerateShell, "need 0 < inner_radius < outer_radius, got " + std::to_string(inner_radius) +
                                         ", " + std::to_string(outer_radius));
  }
  const Lattice3D lat(dims, h);
  VoxelMask mask(lat);
  for (int k = 0; k < dims.k; ++k) {
    for (int j = 0; j < dims.j; ++j) {
      for (int i = 0; i < dims.i; ++i) {
        const double dx = i - center[0], dy = j - center[1], dz = k - center[2];
        const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
        mask.set(lat.index(i, j, k), r >= inner_radius && r <= outer_radius);
      }
    }
  }
  return mask;
}

VoxelMask build_mask(const SimConfig& cfg) {
  if (cfg.mask_file) {
    auto mask = read_vmk1(*cfg.mask_file);
    if (mask.lattice().dims() != cfg.dims) {
      fail(ErrorCode::ConfigError, "mask file " + cfg.mask_file->string() + " does not match lattice.dims");
    }
    return VoxelMask(Lattice3D(cfg.dims, cfg.h), std::vector<std::uint8_t>(mask.bits().begin(), mask.bits().end()));
  }
  return generate_synthetic_pleura(cfg.dims, cfg.pleura.inner_radius, cfg.pleura.outer_radius,
                                   cfg.pleura.center.value_or(lattice_center(cfg.dims)), cfg.h);
}

Simulation::Simulation(SimConfig cfg, std::optional<std::filesystem::path> out_dir)
    : cfg_(std::move(cfg)), out_dir_(std::move(out_dir)), rng_(cfg_.rng_seed) {
  cfg_.validate();
  const auto mask = build_mask(cfg_);
  state_ = initialize_cells(mask, cfg_.seed.region, cfg_.seed.n_cells, cfg_.seed.rng_seed.value_or(cfg_.rng_seed),
                            cfg_.cpm.initial_target_volume);
  const Lattice3D lat(cfg_.dims, cfg_.h);
  for (auto s : kAllSpecies) fields_[s] = ScalarField(lat, initial_value(cfg_, s));
  box_ = compute_bounding_box(state_, cfg_.margin);
  summary_.initial_tumour_voxels = state_.tumour_voxel_count();
  summary_.final_tumour_voxels = summary_.initial_tumour_voxels;
  summary_.live_cells = state_.live_cell_count();
  summary_.final_box = box_;
}

void Simulation::retrack() {
  const auto next = compute_bounding_box(state_, cfg_.margin);
  if (next.same_extents(box_)) {
    box_ = next;
    return;
  }
  // Voxels entering the box start from the far field (O, n) or zero.
  const auto& lat = state_.lattice;
  for (int k = next.lo.k; k <= next.hi.k; ++k) {
    for (int j = next.lo.j; j <= next.hi.j; ++j) {
      for (int i = next.lo.i; i <= next.hi.i; ++i) {
        if (box_.contains({i, j, k})) continue;
        const auto v = lat.index(i, j, k);
        for (auto s : kAllSpecies) fields_[s][v] = initial_value(cfg_, s);
      }
    }
  }
  box_ = next;
}

void Simulation::pde_step() {
  const auto coupling = coupling_fields(state_, cfg_.cpm);
  const Lattice3D box_lat(box_.dims(), cfg_.h);

  StepSetup setup;
  setup.lattice = box_lat;
  setup.transport = cfg_.transport;
  setup.dt = cfg_.dt;

  StepData data = StepData::quiescent(box_lat);
  for (auto s : kAllSpecies) data.fields[s] = box_field(fields_[s], box_);
  data.uptake[Species::Oxygen] = box_field(coupling.uptake_oxygen, box_);
  data.uptake[Species::Nutrient] = box_field(coupling.uptake_nutrient, box_);
  data.source[Species::IL6] = box_field(coupling.secretion_il6, box_);
  data.source[Species::IL8] = box_field(coupling.secretion_il8, box_);

  VoxelMask box_mask(box_lat);
  for (int k = 0; k < box_lat.nz(); ++k) {
    for (int j = 0; j < box_lat.ny(); ++j) {
      for (int i = 0; i < box_lat.nx(); ++i) {
        const auto g = state_.lattice.index(box_.lo.i + i, box_.lo.j + j, box_.lo.k + k);
        const auto v = box_lat.index(i, j, k);
        box_mask.set(v, state_.pleural_mask[g]);
        data.diffusivity_scale[v] = state_.pleural_mask[g] ? 1.0 : cfg_.outside_mask_diffusivity_scale;
      }
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  ParallelStepResult result;
  if (cfg_.handoff_mode == HandoffMode::SharedFile) {
    const auto dir = out_dir_ ? *out_dir_ / "handoff" : std::filesystem::temp_directory_path() / "mpmsim_handoff";
    result = run_shared_file_step(setup, data, box_mask, box_, state_.mcs, cfg_.workers, cfg_.gmres, dir);
  } else {
    result = run_parallel_step(setup, data, cfg_.workers, cfg_.gmres);
  }
  summary_.pde_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ++summary_.pde_steps;

  for (auto s : kAllSpecies) embed_subfield_into(fields_[s], result.outcome.fields[s], box_);
}

void Simulation::snapshot() {
  if (!audit(state_)) {
    summary_.audits_passed = false;
    log_warning("CPM audit failed at mcs " + std::to_string(state_.mcs));
  }
  if (out_dir_) write_snapshot(fields_, state_, box_, *out_dir_);
  ++summary_.snapshots;
}

void Simulation::advance() {
  const auto mcs = state_.mcs;
  if (should_retrack(mcs, cfg_.retrack_interval)) in_phase(mcs, "retrack", [&] { retrack(); });
  in_phase(mcs, "cpm", [&] { mcs_step(state_, cfg_.cpm, rng_); });
  in_phase(mcs, "growth", [&] {
    summary_.divisions += grow_and_divide(state_, cfg_.cpm, fields_.oxygen()).size();
  });
  if (mcs % cfg_.pde_interval == 0) in_phase(mcs, "pde", [&] { pde_step(); });
  if (state_.mcs % cfg_.snapshot_interval == 0 || state_.mcs == cfg_.total_mcs) {
    in_phase(mcs, "snapshot", [&] { snapshot(); });
  }

  summary_.mcs_completed = state_.mcs;
  summary_.final_tumour_voxels = state_.tumour_voxel_count();
  summary_.live_cells = state_.live_cell_count();
  summary_.final_box = box_;
}

RunSummary Simulation::run() {
  if (state_.mcs == 0 && summary_.snapshots == 0) in_phase(0, "snapshot", [&] { snapshot(); });
  while (state_.mcs < cfg_.total_mcs) advance();
  return summary_;
}

RunSummary run_simulation(const SimConfig& cfg, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

  Simulation sim(cfg, out_dir);
  const auto summary = sim.run();

  const auto b = summary.final_box;
  nlohmann::json j = {
      {"mcs_completed", summary.mcs_completed},
      {"initial_tumour_voxels", summary.initial_tumour_voxels},
      {"final_tumour_voxels", summary.final_tumour_voxels},
      {"live_cells", summary.live_cells},
      {"divisions", summary.divisions},
      {"snapshots", summary.snapshots},
      {"audits_passed", summary.audits_passed},
      {"pde_steps", summary.pde_steps},
      {"pde_seconds", summary.pde_seconds},
      {"final_box", {{"lo", {b.lo.i, b.lo.j, b.lo.k}}, {"hi", {b.hi.i, b.hi.j, b.hi.k}}, {"margin", b.margin}}},
  };
  const auto path = out_dir / "summary.json";
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  out.close();
  if (!out) fail(ErrorCode::IoFailure, "failed writing " + path.string());
  return summary;
}

}  // namespace mpmsim
