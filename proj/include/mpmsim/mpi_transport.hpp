#pragma once

#include <chrono>
#include <deque>
#include <string>

#include <mpi.h>

#include "mpmsim/transport.hpp"

namespace mpmsim {

/// Transport over MPI_COMM_WORLD (or a given communicator), one rank per
/// process. Sends are non-blocking; their buffers are held until complete.
class MpiTransport final : public Transport {
 public:
  explicit MpiTransport(MPI_Comm comm = MPI_COMM_WORLD);
  ~MpiTransport() override;

  MpiTransport(const MpiTransport&) = delete;
  MpiTransport& operator=(const MpiTransport&) = delete;

  int rank() const override { return rank_; }
  int size() const override { return size_; }
  void send(int dest, int tag, Bytes payload) override;
  Bytes recv(int source, int tag, std::chrono::milliseconds timeout) override;
  /// Terminates every process of the communicator.
  void abort(const std::string& reason) override;

 private:
  struct Pending {
    MPI_Request request;
    Bytes payload;
  };
  void reap(bool wait_all);

  MPI_Comm comm_;
  int rank_ = 0;
  int size_ = 1;
  std::deque<Pending> pending_;
};

}  // namespace mpmsim
