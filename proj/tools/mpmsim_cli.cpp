#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpmsim/config.hpp"
#include "mpmsim/driver.hpp"
#include "mpmsim/errors.hpp"
#include "mpmsim/lattice.hpp"
#include "mpmsim/log.hpp"
#include "mpmsim/perf.hpp"

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kSolver = 3, kIo = 4 };

int exit_code(mpmsim::ErrorCode code) {
  using mpmsim::ErrorCode;
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::DegenerateShell:
      return kConfig;
    case ErrorCode::IoFailure:
    case ErrorCode::StaleFile:
      return kIo;
    default:
      return kSolver;
  }
}

mpmsim::SimConfig load_or_default(const std::string& path) {
  return path.empty() ? mpmsim::SimConfig{} : mpmsim::load_config(path);
}

int cmd_run(const std::string& config, std::optional<int> workers, const std::string& out,
            std::optional<std::uint64_t> seed) {
  auto cfg = load_or_default(config);
  if (workers) cfg.workers = *workers;
  if (seed) cfg.rng_seed = *seed;
  cfg.validate();
  const auto s = mpmsim::run_simulation(cfg, out);
  std::cout << "mcs " << s.mcs_completed << ", tumour voxels " << s.initial_tumour_voxels << " -> "
            << s.final_tumour_voxels << ", cells " << s.live_cells << ", snapshots " << s.snapshots
            << ", audits " << (s.audits_passed ? "ok" : "FAILED") << ", pde " << s.pde_seconds << " s\n";
  return s.audits_passed ? kOk : kSolver;
}

int cmd_bench(const std::vector<int>& sizes, const std::vector<int>& workers, int steps,
              const std::vector<int>& counts, const std::string& out) {
  mpmsim::SweepConfig sweep;
  for (int n : sizes) sweep.domains.push_back({n, n, n});
  sweep.workers = workers;
  sweep.steps = steps;
  if (!counts.empty()) sweep.forced_counts = counts;
  const auto records = mpmsim::run_sweep(sweep);
  mpmsim::write_bench_csvs(out, records);
  mpmsim::write_summary_csv(std::cout, records);
  bool any_failed = false;
  for (const auto& r : records) any_failed = any_failed || r.error.has_value();
  return any_failed ? kSolver : kOk;
}

int cmd_mask_gen(const std::string& config, std::vector<int> dims, std::optional<double> inner,
                 std::optional<double> outer, const std::string& out) {
  auto cfg = load_or_default(config);
  if (!dims.empty()) cfg.dims = {dims[0], dims[1], dims[2]};
  if (inner) cfg.pleura.inner_radius = *inner;
  if (outer) cfg.pleura.outer_radius = *outer;
  cfg.mask_file.reset();
  const auto mask = mpmsim::build_mask(cfg);
  mpmsim::write_vmk1(std::filesystem::path(out), mask);
  std::cout << out << ": " << mask.count() << " of " << mask.lattice().size() << " voxels in mask\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale pleural tumour growth simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only print warnings");

  std::string config;
  std::string out = "out";
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run a simulation");
  run->add_option("--config", config, "JSON config file (built-in defaults if omitted)")->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "PDE worker count")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "Output directory");
  run->add_option("--seed", seed, "RNG seed");

  std::vector<int> sizes{32, 48, 64};
  std::vector<int> bench_workers{1, 2, 4};
  int steps = 10;
  std::vector<int> counts;
  std::string bench_out = "bench";
  auto* bench = app.add_subcommand("bench", "Speedup / efficiency / load-imbalance sweep");
  bench->add_option("--sizes", sizes, "Cubic domain edge lengths")->check(CLI::PositiveNumber);
  bench->add_option("--workers", bench_workers, "Worker counts")->check(CLI::PositiveNumber);
  bench->add_option("--steps", steps, "Timed steps per cell")->check(CLI::PositiveNumber);
  bench->add_option("--counts", counts, "Forced slab plane counts (creates imbalance)");
  bench->add_option("--out", bench_out, "Directory for bench_raw.csv and bench_summary.csv");

  std::vector<int> dims;
  std::optional<double> inner, outer;
  std::string mask_out = "pleura.vmk1";
  auto* mask = app.add_subcommand("mask-gen", "Write a synthetic pleural shell as a VMK1 file");
  mask->add_option("--config", config, "JSON config supplying dims and shell radii")->check(CLI::ExistingFile);
  mask->add_option("--dims", dims, "nx ny nz")->expected(3);
  mask->add_option("--inner", inner, "Inner shell radius (voxels)");
  mask->add_option("--outer", outer, "Outer shell radius (voxels)");
  mask->add_option("--out", mask_out, "Output VMK1 path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  if (quiet) mpmsim::set_log_level(mpmsim::LogLevel::Warning);

  try {
    if (*run) return cmd_run(config, workers, out, seed);
    if (*bench) return cmd_bench(sizes, bench_workers, steps, counts, bench_out);
    if (*mask) return cmd_mask_gen(config, dims, inner, outer, mask_out);
  } catch (const mpmsim::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  }
  return kOk;
}
