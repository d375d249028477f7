#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

#include "mpmsim/fvm.hpp"
#include "mpmsim/partition.hpp"

namespace mpmsim {

struct WorkerStepResult {
  /// Gathered result; present at rank 0 only.
  std::optional<StepOutcome> outcome;
  /// Assembly + GMRES wall time of this worker, all four species.
  double solve_seconds = 0.0;
};

/// Inputs already resident on every worker, as when each one reads the
/// shared handoff file: the worker takes its own slab directly.
struct ResidentData {
  const StepData* data = nullptr;
};

/// One PDE step executed by a single worker of a slab-partitioned group.
/// Rank 0 supplies `root_data`; other ranks pass nullptr and receive their
/// slabs through scatter_field. Collective: all ranks must call it.
WorkerStepResult distributed_step(const StepSetup& setup, const StepData* root_data, const SlabPartition& part,
                                  Communicator& comm, const GMRESConfig& cfg);

/// Same step, but every rank already holds the full inputs.
WorkerStepResult distributed_step(const StepSetup& setup, ResidentData resident, const SlabPartition& part,
                                  Communicator& comm, const GMRESConfig& cfg);

/// Partition used for `workers` workers on `lattice`: balanced slabs along
/// the longest axis, worker count capped at that axis' extent.
SlabPartition default_partition(const Lattice3D& lattice, int workers);

struct ParallelStepResult {
  StepOutcome outcome;
  std::vector<double> worker_seconds;
  SlabPartition partition;
};

/// Runs `body` on `p` in-process worker threads sharing one mailbox hub and
/// joins them. If any worker throws, the group is aborted and the first
/// root-cause error (not the resulting CommAborted) is rethrown.
void run_worker_group(int p, std::chrono::milliseconds timeout,
                      const std::function<void(Communicator&)>& body);

/// Runs distributed_step on `workers` in-process worker threads.
ParallelStepResult run_parallel_step(const StepSetup& setup, const StepData& data, int workers,
                                     const GMRESConfig& cfg, const std::optional<SlabPartition>& forced = std::nullopt,
                                     std::chrono::milliseconds timeout = std::chrono::seconds(30));

}  // namespace mpmsim
