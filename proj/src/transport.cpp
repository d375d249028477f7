#include "mpmsim/transport.hpp"

#include <bit>
#include <cstring>

#include "mpmsim/errors.hpp"

namespace mpmsim {

namespace {

template <typename T>
void put_le(std::byte* out, T value) noexcept {
  auto bits = std::bit_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t b = 0; b < sizeof(T); ++b) out[b] = static_cast<std::byte>((bits >> (8 * b)) & 0xFFu);
}

template <typename T>
T get_le(const std::byte* in) noexcept {
  std::make_unsigned_t<T> bits = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    bits |= static_cast<std::make_unsigned_t<T>>(std::to_integer<unsigned>(in[b])) << (8 * b);
  }
  return std::bit_cast<T>(bits);
}

}  // namespace

Bytes encode_message(const WireHeader& header, std::span<const double> values) {
  if (header.count != values.size()) fail(ErrorCode::DimMismatch, "wire header count does not match payload");
  Bytes out(kWireHeaderBytes + values.size() * sizeof(double));
  put_le(out.data(), header.species);
  put_le(out.data() + 4, header.plane);
  put_le(out.data() + 8, header.count);
  std::byte* dst = out.data() + kWireHeaderBytes;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(dst, values.data(), values.size() * sizeof(double));
  } else {
    for (std::size_t n = 0; n < values.size(); ++n) put_le(dst + 8 * n, std::bit_cast<std::uint64_t>(values[n]));
  }
  return out;
}

WireMessage decode_message(std::span<const std::byte> bytes) {
  if (bytes.size() < kWireHeaderBytes) fail(ErrorCode::DimMismatch, "wire message shorter than its header");
  WireMessage msg;
  msg.header.species = get_le<std::int32_t>(bytes.data());
  msg.header.plane = get_le<std::int32_t>(bytes.data() + 4);
  msg.header.count = get_le<std::uint64_t>(bytes.data() + 8);
  if (bytes.size() != kWireHeaderBytes + msg.header.count * sizeof(double)) {
    fail(ErrorCode::DimMismatch, "wire payload length does not match header count");
  }
  msg.values.resize(msg.header.count);
  const std::byte* src = bytes.data() + kWireHeaderBytes;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(msg.values.data(), src, msg.values.size() * sizeof(double));
  } else {
    for (std::size_t n = 0; n < msg.values.size(); ++n) {
      msg.values[n] = std::bit_cast<double>(get_le<std::uint64_t>(src + 8 * n));
    }
  }
  return msg;
}

InProcessHub::InProcessHub(int size) {
  if (size < 1) fail(ErrorCode::InvalidArgument, "hub needs at least one rank");
  boxes_.reserve(static_cast<std::size_t>(size));
  for (int r = 0; r < size; ++r) boxes_.push_back(std::make_unique<Mailbox>());
}

void InProcessHub::post(int source, int dest, int tag, Bytes payload) {
  if (dest < 0 || dest >= size()) fail(ErrorCode::InvalidArgument, "send to invalid rank");
  auto& box = *boxes_[static_cast<std::size_t>(dest)];
  {
    std::lock_guard lock(box.mutex);
    box.queues[{source, tag}].push_back(std::move(payload));
  }
  box.ready.notify_all();
}

Bytes InProcessHub::take(int source, int dest, int tag, std::chrono::milliseconds timeout) {
  auto& box = *boxes_[static_cast<std::size_t>(dest)];
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::unique_lock lock(box.mutex);
  for (;;) {
    auto it = box.queues.find({source, tag});
    if (it != box.queues.end() && !it->second.empty()) {
      Bytes out = std::move(it->second.front());
      it->second.pop_front();
      return out;
    }
    {
      std::lock_guard abort_lock(abort_mutex_);
      if (aborted_) fail(ErrorCode::CommAborted, "worker group aborted: " + abort_reason_);
    }
    if (box.ready.wait_until(lock, deadline) == std::cv_status::timeout) {
      auto again = box.queues.find({source, tag});
      if (again != box.queues.end() && !again->second.empty()) continue;
      fail(ErrorCode::CommTimeout, "rank " + std::to_string(dest) + " timed out waiting on rank " +
                                       std::to_string(source) + " (tag " + std::to_string(tag) + ")");
    }
  }
}

void InProcessHub::abort(const std::string& reason) {
  {
    std::lock_guard lock(abort_mutex_);
    if (aborted_) return;
    aborted_ = true;
    abort_reason_ = reason;
  }
  for (auto& box : boxes_) {
    std::lock_guard lock(box->mutex);
    box->ready.notify_all();
  }
}

}  // namespace mpmsim
