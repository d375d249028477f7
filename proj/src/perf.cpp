#include "mpmsim/perf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mpmsim/errors.hpp"
#include "mpmsim/log.hpp"
#include "mpmsim/parallel_step.hpp"

namespace mpmsim {

double speedup(double t_serial, double t_parallel) {
  if (!(t_serial > 0.0) || !(t_parallel > 0.0)) fail(ErrorCode::NonPositiveTime, "speedup needs positive times");
  return t_serial / t_parallel;
}

double efficiency(double s_p, int p) {
  if (p < 1) fail(ErrorCode::InvalidArgument, "efficiency needs p >= 1");
  return s_p / static_cast<double>(p);
}

double load_imbalance(std::span<const double> worker_seconds) {
  if (worker_seconds.empty()) fail(ErrorCode::InvalidArgument, "load imbalance needs at least one worker");
  double peak = 0.0;
  double total = 0.0;
  for (double t : worker_seconds) {
    if (!(t > 0.0)) fail(ErrorCode::NonPositiveTime, "worker times must be positive");
    peak = std::max(peak, t);
    total += t;
  }
  return peak / (total / static_cast<double>(worker_seconds.size())) - 1.0;
}

double load_imbalance(const StepTiming& timing) { return load_imbalance(timing.worker_seconds); }

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::InvalidArgument, "median of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> per_worker_medians(const std::vector<std::vector<double>>& raw) {
  if (raw.empty()) fail(ErrorCode::InvalidArgument, "no timed steps");
  const auto p = raw.front().size();
  std::vector<double> out(p);
  for (std::size_t w = 0; w < p; ++w) {
    std::vector<double> column;
    column.reserve(raw.size());
    for (const auto& step : raw) column.push_back(step.at(w));
    out[w] = median(std::move(column));
  }
  return out;
}

void finalize_record(BenchRecord& record, double t_serial) {
  const auto medians = per_worker_medians(record.raw);
  record.t_parallel = *std::max_element(medians.begin(), medians.end());
  record.t_serial = t_serial;
  record.speedup = speedup(t_serial, record.t_parallel);
  record.efficiency = efficiency(record.speedup, record.p);
  record.load_imbalance = load_imbalance(medians);
}

BenchProblem make_benchmark_problem(Index3 dims) {
  const Lattice3D lat(dims);
  BenchProblem prob;
  prob.setup.lattice = lat;
  prob.setup.dt = 1.0;
  prob.setup.transport = {
      TransportParams{1.0, 0.0, 1.0, BoundaryKind::DirichletFarField},
      TransportParams{0.8, 0.0, 1.0, BoundaryKind::DirichletFarField},
      TransportParams{0.5, 0.05, 0.0, BoundaryKind::NeumannZero},
      TransportParams{0.5, 0.10, 0.0, BoundaryKind::NeumannZero},
  };
  prob.data = StepData::quiescent(lat);
  prob.data.fields.oxygen().fill(1.0);
  prob.data.fields.nutrient().fill(1.0);

  const double ci = 0.5 * (dims.i - 1), cj = 0.5 * (dims.j - 1), ck = 0.5 * (dims.k - 1);
  const double radius = 0.25 * std::min({dims.i, dims.j, dims.k});
  for (std::size_t v = 0; v < lat.size(); ++v) {
    const auto c = lat.coords(v);
    const double r = std::sqrt((c.i - ci) * (c.i - ci) + (c.j - cj) * (c.j - cj) + (c.k - ck) * (c.k - ck));
    if (r > radius) continue;
    prob.data.uptake.oxygen()[v] = 0.05;
    prob.data.uptake.nutrient()[v] = 0.03;
    prob.data.source.il6()[v] = 0.02;
    prob.data.source.il8()[v] = 0.02;
  }
  return prob;
}

std::string domain_label(Index3 dims) {
  std::ostringstream os;
  os << dims.i << 'x' << dims.j << 'x' << dims.k;
  return os.str();
}

namespace {

double max_abs_difference(const FieldSet& a, const FieldSet& b) {
  double worst = 0.0;
  for (std::size_t s = 0; s < kSpeciesCount; ++s) {
    auto x = a.species[s].values();
    auto y = b.species[s].values();
    for (std::size_t n = 0; n < x.size(); ++n) worst = std::max(worst, std::abs(x[n] - y[n]));
  }
  return worst;
}

struct CellRun {
  std::vector<std::vector<double>> raw;
  FieldSet final_fields;
};

CellRun run_cell(const BenchProblem& problem, int p, const SweepConfig& cfg) {
  std::optional<SlabPartition> forced;
  if (cfg.forced_counts && static_cast<int>(cfg.forced_counts->size()) == p) {
    forced = partition_from_counts(*cfg.forced_counts, longest_axis(problem.setup.lattice));
  }
  StepData data = problem.data;
  CellRun run;
  for (int step = 0; step <= cfg.steps; ++step) {
    auto res = run_parallel_step(problem.setup, data, p, cfg.gmres, forced);
    data.fields = std::move(res.outcome.fields);
    if (step > 0) run.raw.push_back(std::move(res.worker_seconds));
  }
  run.final_fields = std::move(data.fields);
  return run;
}

}  // namespace

std::vector<BenchRecord> run_sweep(const SweepConfig& cfg) {
  if (cfg.steps < 1) fail(ErrorCode::InvalidArgument, "sweep needs at least one timed step");
  std::vector<int> workers = cfg.workers;
  if (std::find(workers.begin(), workers.end(), 1) == workers.end()) workers.push_back(1);
  std::sort(workers.begin(), workers.end());
  workers.erase(std::unique(workers.begin(), workers.end()), workers.end());

  std::vector<BenchRecord> records;
  for (const auto& dims : cfg.domains) {
    const auto problem = make_benchmark_problem(dims);
    double t_serial = std::numeric_limits<double>::quiet_NaN();
    std::optional<FieldSet> serial_fields;
    for (int p : workers) {
      BenchRecord rec;
      rec.domain = dims;
      rec.p = p;
      try {
        auto run = run_cell(problem, p, cfg);
        rec.raw = std::move(run.raw);
        if (p == 1) {
          serial_fields = run.final_fields;
          t_serial = per_worker_medians(rec.raw).front();
        } else if (serial_fields) {
          rec.max_deviation = max_abs_difference(*serial_fields, run.final_fields);
        }
        if (std::isnan(t_serial)) fail(ErrorCode::InvalidArgument, "serial baseline failed");
        finalize_record(rec, t_serial);
      } catch (const std::exception& e) {
        rec.error = e.what();
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rec.t_serial = rec.t_parallel = rec.speedup = rec.efficiency = rec.load_imbalance = nan;
        log_warning("bench cell " + domain_label(dims) + " p=" + std::to_string(p) + " failed: " + e.what());
      }
      records.push_back(std::move(rec));
    }
  }
  std::stable_sort(records.begin(), records.end(), [](const BenchRecord& a, const BenchRecord& b) {
    const auto va = Lattice3D(a.domain).size();
    const auto vb = Lattice3D(b.domain).size();
    if (va != vb) return va < vb;
    return a.p < b.p;
  });
  return records;
}

void write_raw_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << kRawCsvHeader << '\n' << std::setprecision(17);
  for (const auto& rec : records) {
    for (std::size_t step = 0; step < rec.raw.size(); ++step) {
      for (std::size_t w = 0; w < rec.raw[step].size(); ++w) {
        out << domain_label(rec.domain) << ',' << rec.p << ',' << step << ',' << w << ',' << rec.raw[step][w]
            << '\n';
      }
    }
  }
}

void write_summary_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << kSummaryCsvHeader << '\n' << std::setprecision(17);
  for (const auto& rec : records) {
    out << domain_label(rec.domain) << ',' << rec.p << ',' << rec.t_serial << ',' << rec.t_parallel << ','
        << rec.speedup << ',' << rec.efficiency << ',' << rec.load_imbalance << '\n';
  }
}

void write_bench_csvs(const std::filesystem::path& dir, const std::vector<BenchRecord>& records) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  std::ofstream raw(dir / "bench_raw.csv");
  std::ofstream summary(dir / "bench_summary.csv");
  if (!raw || !summary) fail(ErrorCode::IoFailure, "cannot open bench CSVs in " + dir.string());
  write_raw_csv(raw, records);
  write_summary_csv(summary, records);
  if (!raw || !summary) fail(ErrorCode::IoFailure, "failed writing bench CSVs");
}

}  // namespace mpmsim
