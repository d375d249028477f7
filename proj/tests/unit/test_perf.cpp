#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "mpmsim/errors.hpp"
#include "mpmsim/perf.hpp"
#include "support.hpp"

using namespace mpmsim;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

void check_definitions(const BenchRecord& r) {
  const auto medians = per_worker_medians(r.raw);
  const double t_par = *std::max_element(medians.begin(), medians.end());
  double mean = 0.0;
  for (double m : medians) mean += m;
  mean /= static_cast<double>(medians.size());
  CHECK(r.t_parallel == t_par);
  CHECK(r.speedup == r.t_serial / r.t_parallel);
  CHECK(r.efficiency == r.speedup / r.p);
  CHECK(r.load_imbalance == doctest::Approx(t_par / mean - 1.0).epsilon(1e-15));
  CHECK(r.load_imbalance >= 0.0);
}

}  // namespace

TEST_CASE("speedup") {
  CHECK(speedup(12.0, 6.0) == 2.0);
  CHECK(speedup(3.7, 3.7) == 1.0);
  CHECK(speedup(10.0, 10.0 / 1.95) == doctest::Approx(1.95).epsilon(1e-15));
  CHECK(code_of([] { speedup(0.0, 1.0); }) == ErrorCode::NonPositiveTime);
  CHECK(code_of([] { speedup(1.0, -2.0); }) == ErrorCode::NonPositiveTime);
}

TEST_CASE("efficiency") {
  CHECK(efficiency(1.95, 4) == doctest::Approx(0.4875).epsilon(1e-15));
  CHECK(efficiency(1.0, 1) == 1.0);
  CHECK(efficiency(1.2, 2) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK_THROWS_AS(efficiency(1.0, 0), Error);
}

TEST_CASE("load_imbalance") {
  CHECK(load_imbalance(std::vector<double>{1.0, 1.0}) == 0.0);
  CHECK(load_imbalance(std::vector<double>{2.0, 1.0, 1.0, 1.0}) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(load_imbalance(std::vector<double>{2.0, 1.0, 1.0, 1.0}) == doctest::Approx(2.0 / 1.25 - 1.0));
  CHECK(load_imbalance(std::vector<double>{0.37}) == 0.0);
  CHECK(load_imbalance(StepTiming{{3.0, 1.0}, {8, 8, 8}}) == doctest::Approx(0.5));
  CHECK(code_of([] { load_imbalance(std::vector<double>{1.0, 0.0}); }) == ErrorCode::NonPositiveTime);
  CHECK_THROWS_AS(load_imbalance(std::vector<double>{}), Error);
}

TEST_CASE("median and per-worker medians") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(median({}), Error);
  const std::vector<std::vector<double>> raw{{1.0, 9.0}, {3.0, 5.0}, {2.0, 7.0}};
  CHECK(per_worker_medians(raw) == std::vector<double>{2.0, 7.0});

  BenchRecord r;
  r.p = 2;
  r.raw = raw;
  finalize_record(r, 14.0);
  CHECK(r.t_parallel == 7.0);
  CHECK(r.speedup == 2.0);
  CHECK(r.efficiency == 1.0);
  CHECK(r.load_imbalance == doctest::Approx(7.0 / 4.5 - 1.0));
}

TEST_CASE("benchmark problem") {
  auto prob = make_benchmark_problem({12, 10, 8});
  CHECK(prob.setup.lattice.dims() == Index3{12, 10, 8});
  CHECK(prob.data.uptake.oxygen().sum() > 0.0);
  CHECK(prob.data.fields.oxygen().min() == 1.0);
  CHECK(prob.data.fields.il6().max() == 0.0);
  CHECK(domain_label({32, 32, 32}) == "32x32x32");
}

TEST_CASE("run_sweep: baseline record and definitions") {
  SweepConfig cfg;
  cfg.domains = {{32, 32, 32}};
  cfg.workers = {1, 2};
  cfg.steps = 3;
  const auto records = run_sweep(cfg);
  REQUIRE(records.size() == 2);
  CHECK(records[0].p == 1);
  CHECK(records[0].speedup == 1.0);
  CHECK(records[0].efficiency == 1.0);
  CHECK(records[0].load_imbalance == 0.0);
  CHECK(records[1].p == 2);
  for (const auto& r : records) {
    CHECK_FALSE(r.error);
    CHECK(r.raw.size() == 3);
    CHECK(r.raw.front().size() == static_cast<std::size_t>(r.p));
    CHECK(r.max_deviation <= 1e-8);
    check_definitions(r);
  }
}

TEST_CASE("run_sweep: forced imbalance") {
  SweepConfig cfg;
  cfg.domains = {{4, 4, 4}};
  cfg.workers = {2};
  cfg.steps = 5;
  cfg.forced_counts = std::vector<int>{3, 1};
  const auto records = run_sweep(cfg);
  REQUIRE(records.size() == 2);  // the p = 1 baseline is added
  CHECK(records[1].p == 2);
  CHECK(records[1].load_imbalance > 0.0);
  check_definitions(records[1]);
}

TEST_CASE("run_sweep: larger domains are not faster") {
  SweepConfig cfg;
  cfg.domains = {{32, 32, 32}, {16, 16, 16}, {24, 24, 24}};
  cfg.workers = {1, 2};
  cfg.steps = 3;
  const auto records = run_sweep(cfg);
  REQUIRE(records.size() == 6);
  // Sorted by (volume, p).
  CHECK(records[0].domain == Index3{16, 16, 16});
  CHECK(records[2].domain == Index3{24, 24, 24});
  CHECK(records[4].domain == Index3{32, 32, 32});
  for (int p = 0; p < 2; ++p) {
    CHECK(records[p].t_parallel <= records[2 + p].t_parallel);
    CHECK(records[2 + p].t_parallel <= records[4 + p].t_parallel);
  }
}

TEST_CASE("run_sweep: failures are recorded per cell") {
  SweepConfig cfg;
  cfg.domains = {{3, 3, 3}};
  cfg.workers = {1, 2};
  cfg.steps = 1;
  cfg.gmres.max_iters = 1;
  cfg.gmres.rel_tol = 1e-15;
  cfg.gmres.abs_tol = 1e-300;
  const auto records = run_sweep(cfg);
  REQUIRE(records.size() == 2);
  for (const auto& r : records) {
    CHECK(r.error.has_value());
    CHECK(std::isnan(r.speedup));
  }
}

TEST_CASE("CSV output") {
  BenchRecord a;
  a.domain = {8, 8, 8};
  a.p = 1;
  a.raw = {{0.5}, {0.25}};
  finalize_record(a, 0.375);
  BenchRecord b;
  b.domain = {8, 8, 8};
  b.p = 2;
  b.raw = {{0.25, 0.125}, {0.125, 0.25}};
  finalize_record(b, 0.375);

  std::ostringstream raw, summary;
  write_raw_csv(raw, {a, b});
  write_summary_csv(summary, {a, b});
  const auto rl = lines_of(raw.str());
  REQUIRE(rl.size() == 1 + 2 + 4);
  CHECK(rl[0] == "domain,p,step,worker,t_solve_s");
  CHECK(rl[1] == "8x8x8,1,0,0,0.5");
  CHECK(rl[6] == "8x8x8,2,1,1,0.25");
  const auto sl = lines_of(summary.str());
  REQUIRE(sl.size() == 3);
  CHECK(sl[0] == "domain,p,T_serial_s,T_parallel_s,speedup,efficiency,load_imbalance");
  CHECK(sl[1] == "8x8x8,1,0.375,0.375,1,1,0");
  CHECK(sl[2] == "8x8x8,2,0.375,0.1875,2,1,0");

  const auto dir = testing::scratch_dir("csv");
  write_bench_csvs(dir, {a, b});
  std::ifstream f(dir / "bench_summary.csv");
  std::string header;
  std::getline(f, header);
  CHECK(header == kSummaryCsvHeader);
  CHECK(std::filesystem::exists(dir / "bench_raw.csv"));
}
