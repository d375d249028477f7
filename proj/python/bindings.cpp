#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <vector>

#include "mpmsim/config.hpp"
#include "mpmsim/driver.hpp"
#include "mpmsim/errors.hpp"
#include "mpmsim/krylov.hpp"
#include "mpmsim/lattice.hpp"
#include "mpmsim/linear_system.hpp"
#include "mpmsim/partition.hpp"
#include "mpmsim/perf.hpp"

namespace py = pybind11;
using namespace mpmsim;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// numpy arrays are indexed [k, j, i] so that C order matches x-fastest.
py::array_t<std::uint8_t> mask_to_numpy(const VoxelMask& mask) {
  const auto d = mask.lattice().dims();
  py::array_t<std::uint8_t> out({d.k, d.j, d.i});
  std::memcpy(out.mutable_data(), mask.bits().data(), mask.bits().size());
  return out;
}

py::tuple box_tuple(const BoundingBox& b) {
  return py::make_tuple(py::make_tuple(b.lo.i, b.lo.j, b.lo.k), py::make_tuple(b.hi.i, b.hi.j, b.hi.k));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the mpmsim tumour-growth simulator";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def("should_retrack", &should_retrack, py::arg("mcs"), py::arg("interval"));

  m.def(
      "bounding_box",
      [](std::tuple<int, int, int> dims, const std::vector<std::tuple<int, int, int>>& voxels, int margin) {
        const Lattice3D lat(std::get<0>(dims), std::get<1>(dims), std::get<2>(dims));
        std::vector<std::size_t> idx;
        idx.reserve(voxels.size());
        for (auto [i, j, k] : voxels) {
          if (!lat.contains({i, j, k})) fail(ErrorCode::BoxOutOfBounds, "voxel outside the lattice");
          idx.push_back(lat.index(i, j, k));
        }
        return box_tuple(bounding_box_of(lat, idx, margin));
      },
      py::arg("dims"), py::arg("voxels"), py::arg("margin"),
      "Tight box around the given (i, j, k) voxels, grown by margin and clipped.");

  m.def(
      "synthetic_pleura",
      [](std::tuple<int, int, int> dims, double inner, double outer, std::optional<std::array<double, 3>> center) {
        const Index3 d{std::get<0>(dims), std::get<1>(dims), std::get<2>(dims)};
        return mask_to_numpy(generate_synthetic_pleura(d, inner, outer, center.value_or(lattice_center(d))));
      },
      py::arg("dims"), py::arg("inner_radius"), py::arg("outer_radius"), py::arg("center") = py::none(),
      "Spherical shell mask as a uint8 array of shape (nz, ny, nx).");

  m.def("speedup", &speedup, py::arg("t_serial"), py::arg("t_parallel"));
  m.def("efficiency", &efficiency, py::arg("speedup"), py::arg("p"));
  m.def(
      "load_imbalance", [](const std::vector<double>& t) { return load_imbalance(t); }, py::arg("worker_seconds"));

  m.def(
      "partition_slabs",
      [](int extent, int p) {
        auto part = partition_slabs(extent, p);
        return py::make_tuple(part.starts, part.counts);
      },
      py::arg("extent"), py::arg("p"), "Balanced (starts, counts) split of an axis.");

  m.def(
      "gmres",
      [](Array a, Array b, double rel_tol, int restart, int max_iters, bool jacobi) {
        if (a.ndim() != 2 || a.shape(0) != a.shape(1) || b.ndim() != 1 || b.shape(0) != a.shape(0)) {
          fail(ErrorCode::DimMismatch, "need a square matrix and a matching right-hand side");
        }
        const auto n = static_cast<std::size_t>(b.shape(0));
        std::vector<double> dense(a.data(), a.data() + n * n);
        std::vector<double> rhs(b.data(), b.data() + n);
        const auto sys = dense_system(dense, n, rhs);
        GMRESConfig cfg;
        cfg.rel_tol = rel_tol;
        cfg.restart = restart;
        cfg.max_iters = max_iters;
        cfg.precondition = jacobi ? Preconditioner::Jacobi : Preconditioner::None;
        const std::vector<double> x0(n, 0.0);
        auto res = gmres_solve(sys, x0, cfg);
        py::dict stats;
        stats["iterations"] = res.stats.iterations;
        stats["restarts"] = res.stats.restarts;
        stats["relative_residual"] = res.stats.final_relative_residual;
        stats["residual_history"] = res.stats.residual_history;
        return py::make_tuple(py::array_t<double>(static_cast<py::ssize_t>(n), res.x.data()), stats);
      },
      py::arg("a"), py::arg("b"), py::arg("rel_tol") = 1e-10, py::arg("restart") = 30, py::arg("max_iters") = 1000,
      py::arg("jacobi") = true, "Restarted GMRES on a dense matrix; returns (x, stats).");

  m.def(
      "run_simulation",
      [](const std::string& config_json, const std::filesystem::path& out_dir) {
        const auto cfg = config_json.empty() ? SimConfig{} : parse_config(config_json);
        RunSummary s;
        {
          py::gil_scoped_release release;
          s = run_simulation(cfg, out_dir);
        }
        py::dict d;
        d["mcs_completed"] = s.mcs_completed;
        d["initial_tumour_voxels"] = s.initial_tumour_voxels;
        d["final_tumour_voxels"] = s.final_tumour_voxels;
        d["live_cells"] = s.live_cells;
        d["divisions"] = s.divisions;
        d["snapshots"] = s.snapshots;
        d["audits_passed"] = s.audits_passed;
        d["pde_steps"] = s.pde_steps;
        d["final_box"] = box_tuple(s.final_box);
        return d;
      },
      py::arg("config_json"), py::arg("out_dir"), "Runs a simulation from a JSON config string ('' = defaults).");

  m.def("default_config", [] { return config_to_json(SimConfig{}); }, "Default configuration as JSON text.");

  m.def(
      "run_sweep",
      [](const std::vector<int>& sizes, const std::vector<int>& workers, int steps) {
        SweepConfig cfg;
        for (int n : sizes) cfg.domains.push_back({n, n, n});
        cfg.workers = workers;
        cfg.steps = steps;
        std::vector<BenchRecord> records;
        {
          py::gil_scoped_release release;
          records = run_sweep(cfg);
        }
        py::list out;
        for (const auto& r : records) {
          py::dict d;
          d["domain"] = domain_label(r.domain);
          d["p"] = r.p;
          d["t_serial"] = r.t_serial;
          d["t_parallel"] = r.t_parallel;
          d["speedup"] = r.speedup;
          d["efficiency"] = r.efficiency;
          d["load_imbalance"] = r.load_imbalance;
          d["max_deviation"] = r.max_deviation;
          d["error"] = r.error;
          out.append(d);
        }
        return out;
      },
      py::arg("sizes"), py::arg("workers"), py::arg("steps") = 3);
}
