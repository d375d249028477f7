#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mpmsim/config.hpp"
#include "mpmsim/driver.hpp"
#include "mpmsim/errors.hpp"
#include "mpmsim/handoff.hpp"
#include "mpmsim/parallel_step.hpp"
#include "mpmsim/snapshot.hpp"
#include "support.hpp"

using namespace mpmsim;
using testing::scratch_dir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t fnv1a(std::uint64_t h, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) {
    h ^= (bits >> (8 * b)) & 0xff;
    h *= 1099511628211ull;
  }
  return h;
}

// Hash of every voxel outside `box`, all species.
std::uint64_t exterior_hash(const FieldSet& fields, const BoundingBox& box) {
  std::uint64_t h = 1469598103934665603ull;
  const auto& lat = fields.lattice();
  for (auto s : kAllSpecies) {
    for (int k = 0; k < lat.nz(); ++k) {
      for (int j = 0; j < lat.ny(); ++j) {
        for (int i = 0; i < lat.nx(); ++i) {
          if (!box.contains({i, j, k})) h = fnv1a(h, fields[s].at(i, j, k));
        }
      }
    }
  }
  return h;
}

bool confined(const CPMState& s) {
  for (std::size_t v = 0; v < s.sigma.size(); ++v) {
    if (s.is_tumour_voxel(v) && !s.pleural_mask[v]) return false;
  }
  return true;
}

bool volumes_consistent(const CPMState& s) {
  std::vector<std::int64_t> counted(s.cells.size(), 0);
  for (auto id : s.sigma) ++counted[id];
  for (std::size_t id = 1; id < s.cells.size(); ++id) {
    if (counted[id] != s.cells[id].volume) return false;
  }
  return true;
}

SimConfig small_config(int total_mcs) {
  SimConfig cfg;
  cfg.total_mcs = total_mcs;
  cfg.snapshot_interval = 10;
  return cfg;
}

std::vector<std::filesystem::path> sorted_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "summary.json") out.push_back(e.path().filename());
  }
  std::sort(out.begin(), out.end());
  return out;
}

#ifdef MPMSIM_CLI
int run_cli(const std::string& args) {
  const std::string cmd = std::string(MPMSIM_CLI) + " -q " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace

TEST_CASE("synthetic pleura: unit shell on 5^3 holds the face neighbours only") {
  const auto mask = generate_synthetic_pleura({5, 5, 5}, 0.5, 1.5, lattice_center({5, 5, 5}));
  const auto& lat = mask.lattice();
  CHECK_FALSE(mask[lat.index(2, 2, 2)]);
  const Index3 faces[6] = {{1, 2, 2}, {3, 2, 2}, {2, 1, 2}, {2, 3, 2}, {2, 2, 1}, {2, 2, 3}};
  for (auto f : faces) CHECK(mask[lat.index(f)]);
  // Per-voxel distance oracle.
  for (int k = 0; k < 5; ++k) {
    for (int j = 0; j < 5; ++j) {
      for (int i = 0; i < 5; ++i) {
        const double r = std::sqrt(double((i - 2) * (i - 2) + (j - 2) * (j - 2) + (k - 2) * (k - 2)));
        CHECK(mask[lat.index(i, j, k)] == (r >= 0.5 && r <= 1.5));
      }
    }
  }
  CHECK(mask.count() == 6 + 12);
}

TEST_CASE("synthetic pleura: large outer radius covers everything but the centre") {
  const Index3 dims{7, 7, 7};
  const double diagonal = std::sqrt(3.0) * 3.0;
  const auto mask = generate_synthetic_pleura(dims, 0.1, diagonal + 0.01, lattice_center(dims));
  CHECK(mask.count() == mask.lattice().size() - 1);
  CHECK_FALSE(mask[mask.lattice().index(3, 3, 3)]);

  // Even-sized cube: the centre falls between voxels, so nothing is excluded.
  const auto even = generate_synthetic_pleura({6, 6, 6}, 0.1, 10.0, lattice_center({6, 6, 6}));
  CHECK(even.count() == even.lattice().size());
}

TEST_CASE("synthetic pleura: centred shell in a cube is symmetric under axis permutation") {
  const Index3 dims{13, 13, 13};
  const auto mask = generate_synthetic_pleura(dims, 2.7, 5.3, lattice_center(dims));
  const auto& lat = mask.lattice();
  for (int k = 0; k < 13; ++k) {
    for (int j = 0; j < 13; ++j) {
      for (int i = 0; i < 13; ++i) {
        const bool v = mask[lat.index(i, j, k)];
        CHECK(v == mask[lat.index(j, i, k)]);
        CHECK(v == mask[lat.index(k, j, i)]);
        CHECK(v == mask[lat.index(i, k, j)]);
      }
    }
  }
}

TEST_CASE("synthetic pleura: degenerate radii are rejected") {
  const auto c = lattice_center({5, 5, 5});
  for (auto [inner, outer] : std::vector<std::pair<double, double>>{{0.0, 1.0}, {-1.0, 2.0}, {2.0, 2.0}, {3.0, 1.0}}) {
    try {
      generate_synthetic_pleura({5, 5, 5}, inner, outer, c);
      FAIL("expected DegenerateShell");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateShell);
    }
  }
}

TEST_CASE("build_mask reads a VMK1 file and checks its dims") {
  const auto dir = scratch_dir("mask_file");
  SimConfig cfg;
  cfg.dims = {12, 10, 8};
  const auto shell = generate_synthetic_pleura(cfg.dims, 2.0, 4.5, lattice_center(cfg.dims));
  write_vmk1(dir / "m.vmk1", shell);
  cfg.mask_file = dir / "m.vmk1";
  const auto loaded = build_mask(cfg);
  CHECK(std::ranges::equal(loaded.bits(), shell.bits()));

  cfg.dims = {12, 10, 9};
  CHECK_THROWS_AS(build_mask(cfg), Error);
  try {
    build_mask(cfg);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
}

TEST_CASE("config: defaults, round trip and error reporting") {
  const auto defaults = config_to_json(SimConfig{});
  CHECK(config_to_json(parse_config("{}")) == defaults);
  CHECK(config_to_json(parse_config(defaults)) == defaults);

  const auto shipped = load_config(std::filesystem::path(MPMSIM_SOURCE_DIR) / "config" / "default.json");
  CHECK(config_to_json(shipped) == defaults);

  const auto custom = parse_config(R"({"lattice": {"dims": [20, 24, 28]}, "workers": 3,
      "handoff_mode": "shared_file", "transport": {"il6": {"boundary": "dirichlet_far_field", "far_field": 0.5}},
      "gmres": {"precondition": "none", "restart": 10}, "seed": {"n_cells": 2, "rng_seed": 9}})");
  CHECK(custom.dims == Index3{20, 24, 28});
  CHECK(custom.workers == 3);
  CHECK(custom.handoff_mode == HandoffMode::SharedFile);
  CHECK(custom.transport[static_cast<std::size_t>(Species::IL6)].boundary == BoundaryKind::DirichletFarField);
  CHECK(custom.transport[static_cast<std::size_t>(Species::IL6)].far_field == 0.5);
  CHECK(custom.gmres.precondition == Preconditioner::None);
  CHECK(custom.seed.rng_seed.value() == 9);
  CHECK(config_to_json(parse_config(config_to_json(custom))) == config_to_json(custom));

  auto expect_config_error = [](const std::string& text, const std::string& key) {
    try {
      parse_config(text);
      FAIL("expected ConfigError for " << text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
      CHECK(std::string(e.what()).find(key) != std::string::npos);
    }
  };
  expect_config_error("{not json", "invalid JSON");
  expect_config_error("[1, 2]", "top level");
  expect_config_error(R"({"dt": "fast"})", "dt");
  expect_config_error(R"({"dt": -1})", "dt");
  expect_config_error(R"({"lattice": {"dims": [4, 4]}})", "lattice.dims");
  expect_config_error(R"({"workers": 0})", "workers");
  expect_config_error(R"({"mask": {"synthetic": {"inner_radius": 5, "outer_radius": 3}}})", "mask.synthetic");
  expect_config_error(R"({"transport": {"oxygen": {"boundary": "periodic"}}})", "transport.oxygen.boundary");
  expect_config_error(R"({"handoff_mode": "pigeon"})", "handoff_mode");
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), Error);
}

TEST_CASE("normalized slice: constant, zero, and cross-section dims") {
  const Lattice3D lat(10, 9, 11);
  const BoundingBox box{{2, 3, 1}, {6, 5, 7}, 0};

  const auto seven = normalized_mid_slice(ScalarField(lat, 7.0), box);
  CHECK(seven.nx == 5);
  CHECK(seven.ny == 3);
  CHECK(seven.k == 4);
  CHECK(seven.values.size() == 15);
  for (double v : seven.values) CHECK(v == 1.0);

  const auto zero = normalized_mid_slice(ScalarField(lat, 0.0), box);
  for (double v : zero.values) CHECK(v == 0.0);

  ScalarField ramp(lat);
  for (int k = 0; k < lat.nz(); ++k) {
    for (int j = 0; j < lat.ny(); ++j) {
      for (int i = 0; i < lat.nx(); ++i) ramp.at(i, j, k) = 1.0 + i + 10.0 * j + 100.0 * k;
    }
  }
  const auto r = normalized_mid_slice(ramp, box);
  const double peak = ramp.at(6, 5, 4);
  for (int j = 0; j < r.ny; ++j) {
    for (int i = 0; i < r.nx; ++i) {
      CHECK(r.values[static_cast<std::size_t>(j * r.nx + i)] == doctest::Approx(ramp.at(2 + i, 3 + j, 4) / peak));
    }
  }
}

TEST_CASE("write_snapshot writes slices, census and box named by mcs") {
  const auto dir = scratch_dir("snapshot");
  Simulation sim(small_config(0));
  const auto files = write_snapshot(sim.fields(), sim.state(), sim.box(), dir);
  REQUIRE(files.slices.size() == kSpeciesCount);
  CHECK(files.slices[0].filename() == "slice_oxygen_mcs000000.csv");
  CHECK(files.census.filename() == "cells_mcs000000.csv");
  CHECK(files.box.filename() == "box_mcs000000.json");

  std::ifstream slice(files.slices[0]);
  std::string line;
  int rows = 0;
  while (std::getline(slice, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == sim.box().extent(0) - 1);
  }
  CHECK(rows == sim.box().extent(1));

  std::ifstream census(files.census);
  std::getline(census, line);
  CHECK(line == "mcs,cell_id,kind,volume,target_volume");
  int cells = 0;
  while (std::getline(census, line)) ++cells;
  CHECK(cells == static_cast<int>(sim.state().live_cell_count()));

  CHECK_THROWS_AS(write_snapshot(sim.fields(), sim.state(), sim.box(), files.census / "sub"), Error);
}

TEST_CASE("handoff: random fields round trip bit-exactly") {
  const auto dir = scratch_dir("handoff");
  std::mt19937_64 rng(77);
  const Lattice3D lat(9, 7, 5, 0.5);
  StepData data = StepData::quiescent(lat);
  for (auto s : kAllSpecies) {
    data.fields[s] = testing::random_field(lat, rng, -1e3, 1e3);
    data.source[s] = testing::random_field(lat, rng);
    data.uptake[s] = testing::random_field(lat, rng);
  }
  data.fields[Species::IL8][3] = 5e-324;
  data.fields[Species::IL8][4] = -0.0;
  data.diffusivity_scale = testing::random_field(lat, rng, 0.01, 1.0);
  VoxelMask mask(lat);
  for (std::size_t v = 0; v < lat.size(); ++v) mask.set(v, rng() % 3 == 0);
  const BoundingBox box{{3, 4, 5}, {11, 10, 9}, 2};

  write_handoff(dir / "in.mpmh", pack_step_input(42, box, data, mask));
  const auto file = read_handoff(dir / "in.mpmh", 42);
  CHECK(file.mcs == 42);
  CHECK(file.box.lo == box.lo);
  CHECK(file.box.hi == box.hi);
  CHECK(file.box.margin == 2);
  CHECK(file.lattice == lat);
  REQUIRE(file.mask.has_value());
  CHECK(std::ranges::equal(*file.mask, mask.bits()));

  const auto back = unpack_step_input(file);
  auto same_bits = [](const ScalarField& a, const ScalarField& b) {
    return std::ranges::equal(a.values(), b.values(), [](double x, double y) {
      return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
    });
  };
  for (auto s : kAllSpecies) {
    CHECK(same_bits(back.fields[s], data.fields[s]));
    CHECK(same_bits(back.source[s], data.source[s]));
    CHECK(same_bits(back.uptake[s], data.uptake[s]));
  }
  CHECK(same_bits(back.diffusivity_scale, data.diffusivity_scale));
}

TEST_CASE("handoff: stale, truncated and malformed files are rejected") {
  const auto dir = scratch_dir("handoff_bad");
  const Lattice3D lat(4, 4, 4);
  FieldSet fields;
  for (auto s : kAllSpecies) fields[s] = ScalarField(lat, 1.5);
  const BoundingBox box{{0, 0, 0}, {3, 3, 3}, 0};
  write_handoff(dir / "f.mpmh", pack_fields(7, box, fields));

  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of([&] { read_handoff(dir / "f.mpmh", 8); }) == ErrorCode::StaleFile);
  CHECK(code_of([&] { read_handoff(dir / "missing.mpmh"); }) == ErrorCode::IoFailure);

  const auto bytes = slurp(dir / "f.mpmh");
  {
    std::ofstream out(dir / "short.mpmh", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 3));
  }
  CHECK(code_of([&] { read_handoff(dir / "short.mpmh"); }) == ErrorCode::IoFailure);
  {
    std::ofstream out(dir / "long.mpmh", std::ios::binary);
    out << bytes << 'x';
  }
  CHECK(code_of([&] { read_handoff(dir / "long.mpmh"); }) == ErrorCode::IoFailure);
  {
    std::ofstream out(dir / "junk.mpmh", std::ios::binary);
    out << "{\"format\": \"something-else\"}\n";
  }
  CHECK(code_of([&] { read_handoff(dir / "junk.mpmh"); }) == ErrorCode::IoFailure);
}

TEST_CASE("shared-file step matches the in-process step exactly") {
  const auto dir = scratch_dir("shared_step");
  std::mt19937_64 rng(5);
  const Lattice3D lat(12, 10, 14);
  StepSetup setup;
  setup.lattice = lat;
  setup.transport = SimConfig{}.transport;
  setup.dt = 1.0;
  StepData data = StepData::quiescent(lat);
  for (auto s : kAllSpecies) data.fields[s] = testing::random_field(lat, rng);
  data.uptake[Species::Oxygen] = testing::random_field(lat, rng, 0.0, 0.1);
  data.source[Species::IL6] = testing::random_field(lat, rng, 0.0, 0.1);
  data.diffusivity_scale = testing::random_field(lat, rng, 0.05, 1.0);
  const VoxelMask mask(lat, true);
  const BoundingBox box{{0, 0, 0}, {11, 9, 13}, 0};

  for (int p : {1, 2, 3}) {
    const auto direct = run_parallel_step(setup, data, p, GMRESConfig{});
    const auto shared = run_shared_file_step(setup, data, mask, box, 3, p, GMRESConfig{}, dir);
    CHECK(testing::max_abs_diff(direct.outcome.fields, shared.outcome.fields) == 0.0);
    CHECK(shared.worker_seconds.size() == static_cast<std::size_t>(p));
    CHECK(std::filesystem::exists(dir / "handoff_in.mpmh"));
    CHECK(read_handoff(dir / "handoff_out.mpmh").mcs == 3);
  }
}

TEST_CASE("total_mcs = 0 emits only the initial snapshot and never solves") {
  const auto dir = scratch_dir("zero_mcs");
  const auto summary = run_simulation(small_config(0), dir);
  CHECK(summary.mcs_completed == 0);
  CHECK(summary.snapshots == 1);
  CHECK(summary.pde_steps == 0);
  const auto files = sorted_files(dir);
  CHECK(files.size() == kSpeciesCount + 2);
  for (const auto& f : files) CHECK(f.string().find("mcs000000") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "summary.json"));
}

TEST_CASE("no uptake and no growth: oxygen stays at far field, tumour volume constant") {
  auto cfg = small_config(30);
  cfg.cpm.uptake_oxygen = 0.0;
  cfg.cpm.uptake_nutrient = 0.0;
  cfg.cpm.growth_rate = 0.0;
  cfg.cpm.initial_target_volume = 1.0;
  cfg.cpm.lambda_volume = 50.0;
  cfg.cpm.temperature = 1.0;
  cfg.gmres.rel_tol = 1e-12;
  Simulation sim(cfg);
  const auto initial = sim.state().tumour_voxel_count();
  while (sim.state().mcs < cfg.total_mcs) {
    sim.advance();
    CHECK(sim.state().tumour_voxel_count() == initial);
  }
  CHECK(sim.summary().pde_steps == 30);
  const double far = cfg.transport[static_cast<std::size_t>(Species::Oxygen)].far_field;
  double worst = 0.0;
  for (double v : sim.fields()[Species::Oxygen].values()) worst = std::max(worst, std::abs(v - far));
  CHECK(worst <= 1e-8);
  CHECK(sim.summary().divisions == 0);
}

TEST_CASE("default small run grows the tumour") {
  auto cfg = small_config(200);
  cfg.seed.n_cells = 1;
  cfg.snapshot_interval = 50;
  Simulation sim(cfg);
  const auto s = sim.run();
  CHECK(s.mcs_completed == 200);
  CHECK(s.final_tumour_voxels > s.initial_tumour_voxels);
  CHECK(s.audits_passed);
  CHECK(s.snapshots == 5);
}

TEST_CASE("PDE steps never touch voxels outside the box") {
  auto cfg = small_config(40);
  cfg.retrack_interval = 50;
  Simulation sim(cfg);
  sim.advance();
  const auto box = sim.box();
  const auto before = exterior_hash(sim.fields(), box);
  for (int m = 0; m < 20; ++m) sim.advance();
  REQUIRE(sim.box().same_extents(box));
  CHECK(exterior_hash(sim.fields(), box) == before);

  // The interior did evolve.
  double interior_change = 0.0;
  for (auto v : sim.state().tumour_voxels()) {
    interior_change = std::max(interior_change, std::abs(sim.fields()[Species::Oxygen].values()[v] - 1.0));
  }
  CHECK(interior_change > 0.0);
}

TEST_CASE("two identical p=1 runs write byte-identical snapshots") {
  auto cfg = small_config(60);
  cfg.snapshot_interval = 20;
  const auto a = scratch_dir("determinism_a");
  const auto b = scratch_dir("determinism_b");
  run_simulation(cfg, a);
  run_simulation(cfg, b);
  const auto files = sorted_files(a);
  REQUIRE(files == sorted_files(b));
  CHECK(files.size() == 4 * (kSpeciesCount + 2));
  for (const auto& f : files) CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f.string());
}

TEST_CASE("shared-file mode reproduces in-process snapshots") {
  auto cfg = small_config(20);
  cfg.workers = 2;
  const auto a = scratch_dir("mode_in_process");
  const auto b = scratch_dir("mode_shared_file");
  run_simulation(cfg, a);
  cfg.handoff_mode = HandoffMode::SharedFile;
  run_simulation(cfg, b);
  CHECK(std::filesystem::exists(b / "handoff" / "handoff_out.mpmh"));
  const auto files = sorted_files(a);
  REQUIRE(files == sorted_files(b));
  for (const auto& f : files) CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f.string());
}

TEST_CASE("confinement and voxel conservation hold throughout a 500-MCS run") {
  auto cfg = small_config(500);
  cfg.snapshot_interval = 25;
  Simulation sim(cfg);
  sim.snapshot();
  while (sim.state().mcs < cfg.total_mcs) {
    sim.advance();
    if (sim.state().mcs % cfg.snapshot_interval == 0) {
      CHECK(audit(sim.state()));
      CHECK(confined(sim.state()));
      CHECK(volumes_consistent(sim.state()));
    }
  }
  CHECK(sim.summary().audits_passed);
  CHECK(sim.summary().snapshots == 21);
}

TEST_CASE("module errors name the mcs and phase") {
  auto cfg = small_config(5);
  cfg.gmres.max_iters = 1;
  cfg.gmres.restart = 1;
  cfg.gmres.rel_tol = 1e-14;
  cfg.gmres.abs_tol = 1e-300;
  Simulation sim(cfg);
  try {
    sim.advance();
    FAIL("expected the PDE phase to fail");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SolverDiverged);
    CHECK(std::string(e.what()).find("mcs 0, phase pde") != std::string::npos);
  }
}

#ifdef MPMSIM_CLI
TEST_CASE("CLI exit codes") {
  const auto dir = scratch_dir("cli");
  {
    std::ofstream(dir / "tiny.json") << R"({"total_mcs": 2, "snapshot_interval": 1})";
    std::ofstream(dir / "broken.json") << "{\"dt\": ";
    std::ofstream(dir / "diverge.json") << R"({"total_mcs": 2, "gmres": {"max_iters": 1, "restart": 1,
        "rel_tol": 1e-14, "abs_tol": 1e-300}})";
    std::ofstream(dir / "blocker") << "x";
  }
  const auto d = dir.string();
  CHECK(run_cli("run --config " + d + "/tiny.json --out " + d + "/ok") == 0);
  CHECK(std::filesystem::exists(dir / "ok" / "summary.json"));
  CHECK(run_cli("run --config " + d + "/broken.json --out " + d + "/x") == 2);
  CHECK(run_cli("run --config " + d + "/absent.json") == 2);
  CHECK(run_cli("run --workers 0") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("mask-gen --dims 8 8 8 --inner 3 --outer 2 --out " + d + "/m.vmk1") == 2);
  CHECK(run_cli("run --config " + d + "/diverge.json --out " + d + "/y") == 3);
  CHECK(run_cli("run --config " + d + "/tiny.json --out " + d + "/blocker/sub") == 4);
  CHECK(run_cli("mask-gen --dims 8 8 8 --inner 1 --outer 3 --out " + d + "/m.vmk1") == 0);
  CHECK(read_vmk1(dir / "m.vmk1").lattice().dims() == Index3{8, 8, 8});
}
#endif
