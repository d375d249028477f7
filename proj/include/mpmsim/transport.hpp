#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mpmsim {

using Bytes = std::vector<std::byte>;

/// 16-byte little-endian prefix of every payload: species id, plane index,
/// value count. The values follow as little-endian IEEE-754 doubles.
struct WireHeader {
  std::int32_t species = 0;
  std::int32_t plane = 0;
  std::uint64_t count = 0;

  friend bool operator==(const WireHeader&, const WireHeader&) = default;
};
inline constexpr std::size_t kWireHeaderBytes = 16;

struct WireMessage {
  WireHeader header;
  std::vector<double> values;
};

Bytes encode_message(const WireHeader& header, std::span<const double> values);
WireMessage decode_message(std::span<const std::byte> bytes);

/// Point-to-point byte transport between `size()` ranks. Messages with the
/// same (source, destination, tag) are delivered in send order; sends never
/// block on the receiver.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual int rank() const = 0;
  virtual int size() const = 0;
  virtual void send(int dest, int tag, Bytes payload) = 0;
  /// Throws CommTimeout after `timeout`, CommAborted if the group aborted.
  virtual Bytes recv(int source, int tag, std::chrono::milliseconds timeout) = 0;
  /// Marks the group failed so peers blocked in recv() give up promptly.
  virtual void abort(const std::string& reason) { (void)reason; }
};

/// Shared mailboxes for worker threads of one process.
class InProcessHub {
 public:
  explicit InProcessHub(int size);

  int size() const noexcept { return static_cast<int>(boxes_.size()); }
  void post(int source, int dest, int tag, Bytes payload);
  Bytes take(int source, int dest, int tag, std::chrono::milliseconds timeout);
  void abort(const std::string& reason);

 private:
  struct Mailbox {
    std::mutex mutex;
    std::condition_variable ready;
    std::map<std::pair<int, int>, std::deque<Bytes>> queues;  // (source, tag)
  };

  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::mutex abort_mutex_;
  bool aborted_ = false;
  std::string abort_reason_;
};

class InProcessTransport final : public Transport {
 public:
  InProcessTransport(InProcessHub& hub, int rank) : hub_(hub), rank_(rank) {}

  int rank() const override { return rank_; }
  int size() const override { return hub_.size(); }
  void send(int dest, int tag, Bytes payload) override { hub_.post(rank_, dest, tag, std::move(payload)); }
  Bytes recv(int source, int tag, std::chrono::milliseconds timeout) override {
    return hub_.take(source, rank_, tag, timeout);
  }
  void abort(const std::string& reason) override { hub_.abort(reason); }

 private:
  InProcessHub& hub_;
  int rank_;
};

}  // namespace mpmsim
