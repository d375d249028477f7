#include "mpmsim/partition.hpp"

#include <numeric>
#include <string>

#include "mpmsim/errors.hpp"

namespace mpmsim {

int SlabPartition::extent() const noexcept { return std::accumulate(counts.begin(), counts.end(), 0); }

SlabRange SlabPartition::range(int rank) const {
  if (rank < 0 || rank >= workers()) fail(ErrorCode::InvalidArgument, "rank outside partition");
  const auto r = static_cast<std::size_t>(rank);
  return {axis, starts[r], counts[r]};
}

int SlabPartition::owner(int plane) const {
  for (int r = 0; r < workers(); ++r) {
    const auto u = static_cast<std::size_t>(r);
    if (plane >= starts[u] && plane < starts[u] + counts[u]) return r;
  }
  fail(ErrorCode::InvalidArgument, "plane " + std::to_string(plane) + " outside partition");
}

SlabPartition partition_slabs(int extent, int p, int axis) {
  if (extent < 1 || p < 1) fail(ErrorCode::InvalidArgument, "partition needs extent >= 1 and p >= 1");
  if (p > extent) {
    fail(ErrorCode::MoreWorkersThanPlanes,
         std::to_string(p) + " workers for " + std::to_string(extent) + " planes");
  }
  const int base = extent / p;
  const int extra = extent % p;
  std::vector<int> counts(static_cast<std::size_t>(p));
  for (int r = 0; r < p; ++r) counts[static_cast<std::size_t>(r)] = base + (r < extra ? 1 : 0);
  return partition_from_counts(std::move(counts), axis);
}

SlabPartition partition_from_counts(std::vector<int> counts, int axis) {
  if (counts.empty()) fail(ErrorCode::InvalidArgument, "partition needs at least one worker");
  if (axis < 0 || axis > 2) fail(ErrorCode::InvalidArgument, "partition axis must be 0, 1 or 2");
  SlabPartition part;
  part.axis = axis;
  part.starts.reserve(counts.size());
  int offset = 0;
  for (int c : counts) {
    if (c < 1) fail(ErrorCode::InvalidArgument, "every slab needs at least one plane");
    part.starts.push_back(offset);
    offset += c;
  }
  part.counts = std::move(counts);
  return part;
}

int longest_axis(const Lattice3D& lattice) noexcept {
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (lattice.extent(a) > lattice.extent(axis)) axis = a;
  }
  return axis;
}

WorkerTopology WorkerTopology::make(int rank, int p) {
  if (p < 1 || rank < 0 || rank >= p) fail(ErrorCode::InvalidArgument, "invalid worker rank");
  WorkerTopology topo{rank, p, std::nullopt, std::nullopt};
  if (rank > 0) topo.lower = rank - 1;
  if (rank + 1 < p) topo.upper = rank + 1;
  return topo;
}

Communicator::Communicator(Transport& transport, std::chrono::milliseconds timeout)
    : transport_(transport), timeout_(timeout) {}

void Communicator::send(int dest, MessageTag tag, const WireHeader& header, std::span<const double> values) {
  transport_.send(dest, static_cast<int>(tag), encode_message(header, values));
}

WireMessage Communicator::recv(int source, MessageTag tag) {
  auto bytes = transport_.recv(source, static_cast<int>(tag), timeout_);
  return decode_message(bytes);
}

double Communicator::global_sum(double local) {
  const int p = size();
  if (p == 1) return local;
  const double one[1] = {local};
  if (rank() != 0) {
    send(0, MessageTag::Reduce, {-1, 0, 1}, one);
    return recv(0, MessageTag::Broadcast).values.at(0);
  }
  double total = local;
  for (int r = 1; r < p; ++r) total += recv(r, MessageTag::Reduce).values.at(0);
  const double out[1] = {total};
  for (int r = 1; r < p; ++r) send(r, MessageTag::Broadcast, {-1, 0, 1}, out);
  return total;
}

std::vector<double> Communicator::gather_scalars(double local) {
  const double one[1] = {local};
  if (rank() != 0) {
    send(0, MessageTag::Gather, {-1, rank(), 1}, one);
    return {};
  }
  std::vector<double> all{local};
  for (int r = 1; r < size(); ++r) all.push_back(recv(r, MessageTag::Gather).values.at(0));
  return all;
}

void halo_exchange(std::span<double> extended, const SlabLayout& layout, const WorkerTopology& topo,
                   Communicator& comm, HaloBuffers& buffers, int species) {
  if (topo.p == 1) return;
  const auto& ext = layout.extended_lattice();
  const int axis = layout.axis();
  const auto& range = layout.range();
  if (extended.size() != ext.size()) fail(ErrorCode::DimMismatch, "halo exchange on a mis-sized vector");

  const auto plane = layout.plane_size();
  if (buffers.lower_send.size() != plane) buffers = HaloBuffers(plane);

  if (topo.lower) {
    copy_plane_out(ext, extended, axis, layout.first_owned_plane(), buffers.lower_send);
    comm.send(*topo.lower, MessageTag::HaloToLower, {species, range.start, plane}, buffers.lower_send);
  }
  if (topo.upper) {
    copy_plane_out(ext, extended, axis, layout.last_owned_plane(), buffers.upper_send);
    comm.send(*topo.upper, MessageTag::HaloToUpper, {species, range.start + range.count - 1, plane},
              buffers.upper_send);
  }
  if (topo.lower) {
    auto msg = comm.recv(*topo.lower, MessageTag::HaloToUpper);
    if (msg.header.plane != range.start - 1 || msg.values.size() != plane) {
      fail(ErrorCode::DimMismatch, "unexpected lower halo plane " + std::to_string(msg.header.plane));
    }
    copy_plane_in(ext, extended, axis, layout.lower_ghost_plane(), msg.values);
  }
  if (topo.upper) {
    auto msg = comm.recv(*topo.upper, MessageTag::HaloToLower);
    if (msg.header.plane != range.start + range.count || msg.values.size() != plane) {
      fail(ErrorCode::DimMismatch, "unexpected upper halo plane " + std::to_string(msg.header.plane));
    }
    copy_plane_in(ext, extended, axis, layout.upper_ghost_plane(), msg.values);
  }
}

void halo_exchange(std::span<double> extended, const SlabLayout& layout, const WorkerTopology& topo,
                   Communicator& comm, int species) {
  HaloBuffers buffers(layout.plane_size());
  halo_exchange(extended, layout, topo, comm, buffers, species);
}

namespace {

BoundingBox slab_box(const Lattice3D& global, const SlabRange& r) {
  auto box = BoundingBox::whole(global);
  box.lo[r.axis] = r.start;
  box.hi[r.axis] = r.start + r.count - 1;
  return box;
}

}  // namespace

ScalarField scatter_field(const ScalarField* global, const Lattice3D& global_lattice, const SlabPartition& part,
                          Communicator& comm, int species) {
  if (part.workers() != comm.size()) fail(ErrorCode::InvalidArgument, "partition size != communicator size");
  if (part.extent() != global_lattice.extent(part.axis)) {
    fail(ErrorCode::DimMismatch, "partition does not tile the box axis");
  }
  const auto mine = part.range(comm.rank());
  const Lattice3D local_lattice(slab_box(global_lattice, mine).dims(), global_lattice.h());

  if (comm.rank() != 0) {
    auto msg = comm.recv(0, MessageTag::Scatter);
    if (msg.header.plane != mine.start || msg.values.size() != local_lattice.size()) {
      fail(ErrorCode::DimMismatch, "scatter payload does not match the local slab");
    }
    return ScalarField(local_lattice, std::move(msg.values));
  }

  if (global == nullptr || global->lattice().dims() != global_lattice.dims()) {
    fail(ErrorCode::DimMismatch, "rank 0 must provide the global box field");
  }
  for (int r = 1; r < comm.size(); ++r) {
    const auto range = part.range(r);
    auto piece = extract_subfield(*global, slab_box(global_lattice, range));
    comm.send(r, MessageTag::Scatter, {species, range.start, piece.size()}, piece.values());
  }
  return extract_subfield(*global, slab_box(global_lattice, mine));
}

std::optional<ScalarField> gather_field(const ScalarField& local, const Lattice3D& global_lattice,
                                        const SlabPartition& part, Communicator& comm, int species) {
  if (part.workers() != comm.size()) fail(ErrorCode::InvalidArgument, "partition size != communicator size");
  const auto mine = part.range(comm.rank());
  if (local.lattice().dims() != slab_box(global_lattice, mine).dims()) {
    fail(ErrorCode::DimMismatch, "local slab does not match the partition");
  }
  if (comm.rank() != 0) {
    comm.send(0, MessageTag::Gather, {species, mine.start, local.size()}, local.values());
    return std::nullopt;
  }
  ScalarField global(global_lattice);
  embed_subfield_into(global, local, slab_box(global_lattice, mine));
  for (int r = 1; r < comm.size(); ++r) {
    const auto range = part.range(r);
    auto msg = comm.recv(r, MessageTag::Gather);
    const auto box = slab_box(global_lattice, range);
    if (msg.header.plane != range.start || msg.values.size() != box.volume()) {
      fail(ErrorCode::DimMismatch, "gather payload from rank " + std::to_string(r) + " does not match its slab");
    }
    embed_subfield_into(global, ScalarField(Lattice3D(box.dims(), global_lattice.h()), std::move(msg.values)),
                        box);
  }
  return global;
}

}  // namespace mpmsim
