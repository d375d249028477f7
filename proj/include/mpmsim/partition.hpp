#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <vector>

#include "mpmsim/krylov.hpp"
#include "mpmsim/lattice.hpp"
#include "mpmsim/slab.hpp"
#include "mpmsim/transport.hpp"

namespace mpmsim {

/// Balanced 1D split of a box axis into per-worker plane ranges.
struct SlabPartition {
  int axis = 0;
  std::vector<int> starts;
  std::vector<int> counts;

  int workers() const noexcept { return static_cast<int>(counts.size()); }
  int extent() const noexcept;
  SlabRange range(int rank) const;
  /// Rank owning `plane`.
  int owner(int plane) const;
};

/// counts = extent / p, plus one for the first extent % p workers.
/// Throws MoreWorkersThanPlanes when p > extent.
SlabPartition partition_slabs(int extent, int p, int axis = 0);

/// Arbitrary (possibly unbalanced) split; used to force load imbalance.
SlabPartition partition_from_counts(std::vector<int> counts, int axis = 0);

/// Longest lattice axis; ties resolve x, then y, then z.
int longest_axis(const Lattice3D& lattice) noexcept;

struct WorkerTopology {
  int rank = 0;
  int p = 1;
  std::optional<int> lower;
  std::optional<int> upper;

  static WorkerTopology make(int rank, int p);
};

enum class MessageTag : int {
  HaloToLower = 1,
  HaloToUpper = 2,
  Scatter = 3,
  Gather = 4,
  Reduce = 5,
  Broadcast = 6,
};

/// Collective operations over a transport. Every rank must call the
/// collectives in the same order (bulk-synchronous phases).
class Communicator {
 public:
  explicit Communicator(Transport& transport, std::chrono::milliseconds timeout = std::chrono::seconds(30));

  int rank() const noexcept { return transport_.rank(); }
  int size() const noexcept { return transport_.size(); }
  std::chrono::milliseconds timeout() const noexcept { return timeout_; }

  void send(int dest, MessageTag tag, const WireHeader& header, std::span<const double> values);
  WireMessage recv(int source, MessageTag tag);

  /// Rank-ascending reduction at rank 0, then broadcast, so every rank sees
  /// the bit-identical total.
  double global_sum(double local);
  /// All ranks' values in rank order at rank 0; empty elsewhere.
  std::vector<double> gather_scalars(double local);
  void abort(const std::string& reason) { transport_.abort(reason); }

 private:
  Transport& transport_;
  std::chrono::milliseconds timeout_;
};

struct HaloBuffers {
  std::vector<double> lower_send, lower_recv, upper_send, upper_recv;

  explicit HaloBuffers(std::size_t plane = 0)
      : lower_send(plane), lower_recv(plane), upper_send(plane), upper_recv(plane) {}
};

/// Fills the ghost planes of an extended-block vector with the neighbours'
/// adjacent owned planes. Box-boundary faces are left alone.
void halo_exchange(std::span<double> extended, const SlabLayout& layout, const WorkerTopology& topo,
                   Communicator& comm, HaloBuffers& buffers, int species = 0);
void halo_exchange(std::span<double> extended, const SlabLayout& layout, const WorkerTopology& topo,
                   Communicator& comm, int species = 0);

/// Rank 0 passes the global box field; every rank receives its owned slab.
ScalarField scatter_field(const ScalarField* global, const Lattice3D& global_lattice, const SlabPartition& part,
                          Communicator& comm, int species = 0);

/// Inverse of scatter_field: the global field at rank 0, nullopt elsewhere.
std::optional<ScalarField> gather_field(const ScalarField& local, const Lattice3D& global_lattice,
                                        const SlabPartition& part, Communicator& comm, int species = 0);

/// KrylovComm over one worker's slab.
class SlabKrylovComm final : public KrylovComm {
 public:
  SlabKrylovComm(Communicator& comm, const SlabLayout& layout, WorkerTopology topo, int species = 0)
      : comm_(comm), layout_(layout), topo_(topo), buffers_(layout.plane_size()), species_(species) {}

  double global_sum(double local) override { return comm_.global_sum(local); }
  void refresh_halo(std::span<double> columns) override {
    halo_exchange(columns, layout_, topo_, comm_, buffers_, species_);
  }

 private:
  Communicator& comm_;
  const SlabLayout& layout_;
  WorkerTopology topo_;
  HaloBuffers buffers_;
  int species_;
};

}  // namespace mpmsim
