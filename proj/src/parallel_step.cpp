#include "mpmsim/parallel_step.hpp"

#include <chrono>
#include <exception>
#include <thread>

#include "mpmsim/errors.hpp"
#include "mpmsim/log.hpp"

namespace mpmsim {

namespace {

struct LocalInputs {
  std::array<ScalarField, kSpeciesCount> field;
  std::array<ScalarField, kSpeciesCount> source;
  std::array<ScalarField, kSpeciesCount> uptake;
  ScalarField extended_scale;
};

WorkerStepResult solve_local(const StepSetup& setup, const SlabLayout& layout, const WorkerTopology& topo,
                             const SlabPartition& part, Communicator& comm, const GMRESConfig& cfg,
                             const LocalInputs& in) {
  std::array<ScalarField, kSpeciesCount> solved;
  std::array<SolveStats, kSpeciesCount> stats;
  std::array<double, kSpeciesCount> clamped_local{};

  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t s = 0; s < kSpeciesCount; ++s) {
    auto sys = assemble_step(in.field[s], setup.transport[s], in.source[s], in.uptake[s], setup.dt, layout,
                             &in.extended_scale);
    SlabKrylovComm kc(comm, layout, topo, static_cast<int>(s));
    auto res = gmres_solve(sys, in.field[s].values(), cfg, kc);
    clamped_local[s] = static_cast<double>(clamp_non_negative(res.x));
    solved[s] = ScalarField(layout.owned_lattice(), std::move(res.x));
    stats[s] = std::move(res.stats);
  }
  const auto t1 = std::chrono::steady_clock::now();

  WorkerStepResult out;
  out.solve_seconds = std::chrono::duration<double>(t1 - t0).count();
  StepOutcome outcome;
  for (std::size_t s = 0; s < kSpeciesCount; ++s) {
    auto g = gather_field(solved[s], setup.lattice, part, comm, static_cast<int>(s));
    const double clamped = comm.global_sum(clamped_local[s]);
    if (g) {
      outcome.fields.species[s] = std::move(*g);
      outcome.clamped[s] = static_cast<std::size_t>(clamped);
    }
  }
  if (comm.rank() == 0) {
    outcome.stats = std::move(stats);
    out.outcome = std::move(outcome);
  }
  return out;
}

void check_group(const SlabPartition& part, const Communicator& comm, const StepSetup& setup) {
  setup.validate();
  if (part.workers() != comm.size()) fail(ErrorCode::InvalidArgument, "partition size != worker count");
  if (part.extent() != setup.lattice.extent(part.axis)) {
    fail(ErrorCode::DimMismatch, "partition does not tile the box axis");
  }
}

}  // namespace

WorkerStepResult distributed_step(const StepSetup& setup, const StepData* root_data, const SlabPartition& part,
                                  Communicator& comm, const GMRESConfig& cfg) {
  check_group(part, comm, setup);
  const auto topo = WorkerTopology::make(comm.rank(), comm.size());
  const SlabLayout layout(setup.lattice, part.range(comm.rank()));
  const bool root = comm.rank() == 0;
  if (root && root_data == nullptr) fail(ErrorCode::InvalidArgument, "rank 0 must supply the step inputs");

  LocalInputs in;
  for (std::size_t s = 0; s < kSpeciesCount; ++s) {
    const auto sp = static_cast<Species>(s);
    const int tag = static_cast<int>(s);
    in.field[s] = scatter_field(root ? &root_data->fields[sp] : nullptr, setup.lattice, part, comm, tag);
    in.source[s] = scatter_field(root ? &root_data->source[sp] : nullptr, setup.lattice, part, comm, tag);
    in.uptake[s] = scatter_field(root ? &root_data->uptake[sp] : nullptr, setup.lattice, part, comm, tag);
  }
  auto owned_scale = scatter_field(root ? &root_data->diffusivity_scale : nullptr, setup.lattice, part, comm, -1);
  in.extended_scale = ScalarField(layout.extended_lattice(), 1.0);
  layout.scatter_owned(owned_scale.values(), in.extended_scale.values());
  halo_exchange(in.extended_scale.values(), layout, topo, comm, -1);

  return solve_local(setup, layout, topo, part, comm, cfg, in);
}

WorkerStepResult distributed_step(const StepSetup& setup, ResidentData resident, const SlabPartition& part,
                                  Communicator& comm, const GMRESConfig& cfg) {
  check_group(part, comm, setup);
  if (resident.data == nullptr) fail(ErrorCode::InvalidArgument, "resident step needs input data");
  const auto& data = *resident.data;
  const auto topo = WorkerTopology::make(comm.rank(), comm.size());
  const SlabLayout layout(setup.lattice, part.range(comm.rank()));

  LocalInputs in;
  for (std::size_t s = 0; s < kSpeciesCount; ++s) {
    const auto sp = static_cast<Species>(s);
    in.field[s] = extract_subfield(data.fields[sp], layout.owned_box());
    in.source[s] = extract_subfield(data.source[sp], layout.owned_box());
    in.uptake[s] = extract_subfield(data.uptake[sp], layout.owned_box());
  }
  in.extended_scale = extract_subfield(data.diffusivity_scale, layout.extended_box());
  return solve_local(setup, layout, topo, part, comm, cfg, in);
}

SlabPartition default_partition(const Lattice3D& lattice, int workers) {
  if (workers < 1) fail(ErrorCode::InvalidArgument, "worker count must be >= 1");
  const int axis = longest_axis(lattice);
  const int extent = lattice.extent(axis);
  if (workers > extent) {
    log_warning("requested " + std::to_string(workers) + " workers but the box has only " +
                std::to_string(extent) + " planes; " + std::to_string(workers - extent) + " workers idle");
    workers = extent;
  }
  return partition_slabs(extent, workers, axis);
}

void run_worker_group(int p, std::chrono::milliseconds timeout,
                      const std::function<void(Communicator&)>& body) {
  InProcessHub hub(p);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(p));

  auto worker = [&](int rank) {
    InProcessTransport transport(hub, rank);
    Communicator comm(transport, timeout);
    try {
      body(comm);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(rank)] = std::current_exception();
      hub.abort(std::string("rank ") + std::to_string(rank) + ": " + e.what());
    }
  };

  if (p == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(static_cast<std::size_t>(p));
    for (int r = 0; r < p; ++r) threads.emplace_back(worker, r);
  }

  // Report the root cause, not the aborts it triggered in the other ranks.
  std::exception_ptr aborted;
  for (auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::CommAborted) throw;
      if (!aborted) aborted = e;
    }
  }
  if (aborted) std::rethrow_exception(aborted);
}

ParallelStepResult run_parallel_step(const StepSetup& setup, const StepData& data, int workers,
                                     const GMRESConfig& cfg, const std::optional<SlabPartition>& forced,
                                     std::chrono::milliseconds timeout) {
  ParallelStepResult result;
  result.partition = forced ? *forced : default_partition(setup.lattice, workers);
  const int p = result.partition.workers();
  result.worker_seconds.assign(static_cast<std::size_t>(p), 0.0);

  std::optional<StepOutcome> root_outcome;
  run_worker_group(p, timeout, [&](Communicator& comm) {
    auto r = distributed_step(setup, comm.rank() == 0 ? &data : nullptr, result.partition, comm, cfg);
    result.worker_seconds[static_cast<std::size_t>(comm.rank())] = r.solve_seconds;
    if (comm.rank() == 0) root_outcome = std::move(r.outcome);
  });
  result.outcome = std::move(*root_outcome);
  return result;
}

}  // namespace mpmsim
