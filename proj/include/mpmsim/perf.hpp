#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpmsim/fvm.hpp"
#include "mpmsim/krylov.hpp"
#include "mpmsim/lattice.hpp"

namespace mpmsim {

/// S_p = T_serial / T_parallel. Throws NonPositiveTime.
double speedup(double t_serial, double t_parallel);

/// E_p = S_p / p.
double efficiency(double s_p, int p);

/// Per-worker solve wall times of one PDE step.
struct StepTiming {
  std::vector<double> worker_seconds;
  Index3 domain;

  int p() const noexcept { return static_cast<int>(worker_seconds.size()); }
};

/// f_l = max(t_i) / mean(t_i) - 1. Throws NonPositiveTime.
double load_imbalance(std::span<const double> worker_seconds);
double load_imbalance(const StepTiming& timing);

double median(std::vector<double> values);

struct BenchRecord {
  Index3 domain;
  int p = 1;
  double t_serial = 0.0;
  double t_parallel = 0.0;
  double speedup = 0.0;
  double efficiency = 0.0;
  double load_imbalance = 0.0;
  /// raw[step][worker], timed steps only.
  std::vector<std::vector<double>> raw;
  /// Max-norm difference of the final fields from the p = 1 run.
  double max_deviation = 0.0;
  std::optional<std::string> error;
};

/// Per-worker medians over the timed steps; T_parallel is the largest.
std::vector<double> per_worker_medians(const std::vector<std::vector<double>>& raw);

/// Fills t_parallel, speedup, efficiency and load_imbalance from `raw`
/// and `t_serial`.
void finalize_record(BenchRecord& record, double t_serial);

struct SweepConfig {
  std::vector<Index3> domains;
  std::vector<int> workers{1, 2, 4};
  int steps = 10;
  GMRESConfig gmres;
  /// Used instead of the balanced split whenever p == forced_counts->size().
  std::optional<std::vector<int>> forced_counts;
};

/// Synthetic benchmark step: a spherical tumour at the box centre consuming
/// oxygen/nutrient and secreting cytokines.
struct BenchProblem {
  StepSetup setup;
  StepData data;
};
BenchProblem make_benchmark_problem(Index3 dims);

std::string domain_label(Index3 dims);

/// Runs every (domain, p) cell on in-process workers. One warm-up step is
/// discarded before `steps` timed steps. Failures are recorded per cell.
std::vector<BenchRecord> run_sweep(const SweepConfig& cfg);

inline constexpr const char* kRawCsvHeader = "domain,p,step,worker,t_solve_s";
inline constexpr const char* kSummaryCsvHeader =
    "domain,p,T_serial_s,T_parallel_s,speedup,efficiency,load_imbalance";

void write_raw_csv(std::ostream& out, const std::vector<BenchRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<BenchRecord>& records);
/// Writes bench_raw.csv and bench_summary.csv into `dir`.
void write_bench_csvs(const std::filesystem::path& dir, const std::vector<BenchRecord>& records);

}  // namespace mpmsim
