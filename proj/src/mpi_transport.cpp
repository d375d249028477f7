#include "mpmsim/mpi_transport.hpp"

#include <thread>

#include "mpmsim/errors.hpp"
#include "mpmsim/log.hpp"

namespace mpmsim {

MpiTransport::MpiTransport(MPI_Comm comm) : comm_(comm) {
  MPI_Comm_rank(comm_, &rank_);
  MPI_Comm_size(comm_, &size_);
}

MpiTransport::~MpiTransport() { reap(true); }

void MpiTransport::reap(bool wait_all) {
  while (!pending_.empty()) {
    int done = 0;
    if (wait_all) {
      MPI_Wait(&pending_.front().request, MPI_STATUS_IGNORE);
      done = 1;
    } else {
      MPI_Test(&pending_.front().request, &done, MPI_STATUS_IGNORE);
    }
    if (!done) break;
    pending_.pop_front();
  }
}

void MpiTransport::send(int dest, int tag, Bytes payload) {
  if (dest < 0 || dest >= size_) fail(ErrorCode::InvalidArgument, "send to invalid rank " + std::to_string(dest));
  pending_.push_back({MPI_REQUEST_NULL, std::move(payload)});
  auto& p = pending_.back();
  MPI_Isend(p.payload.data(), static_cast<int>(p.payload.size()), MPI_BYTE, dest, tag, comm_, &p.request);
  reap(false);
}

Bytes MpiTransport::recv(int source, int tag, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  MPI_Status status;
  int flag = 0;
  for (;;) {
    MPI_Iprobe(source, tag, comm_, &flag, &status);
    if (flag) break;
    reap(false);
    if (std::chrono::steady_clock::now() >= deadline) {
      fail(ErrorCode::CommTimeout, "rank " + std::to_string(rank_) + " timed out waiting for rank " +
                                       std::to_string(source) + " tag " + std::to_string(tag));
    }
    std::this_thread::yield();
  }
  int count = 0;
  MPI_Get_count(&status, MPI_BYTE, &count);
  Bytes payload(static_cast<std::size_t>(count));
  MPI_Recv(payload.data(), count, MPI_BYTE, source, tag, comm_, MPI_STATUS_IGNORE);
  return payload;
}

void MpiTransport::abort(const std::string& reason) {
  log_warning("aborting MPI job: " + reason);
  MPI_Abort(comm_, 3);
}

}  // namespace mpmsim
