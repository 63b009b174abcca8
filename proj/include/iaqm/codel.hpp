#pragma once

#include <deque>
#include <optional>

#include "iaqm/queue_disc.hpp"

namespace iaqm::aqm {

/// Control-law state of one CoDel instance.
struct CodelState {
  // Moment the sojourn time was first seen above target; unset otherwise.
  std::optional<SimTime> first_above_time;
  SimTime drop_next;
  uint32_t count = 0;
  uint32_t last_count = 0;
  bool dropping = false;
};

/// t + interval / sqrt(count), rounded to the nearest nanosecond.
SimTime control_law(SimTime t, SimTime interval, uint32_t count);

/// A FIFO driven by the CoDel control law. Used directly by Codel and once
/// per sub-queue by FqCodel. `backlog_bytes` is the byte count the
/// "at most one MTU queued" exemption is checked against; it is kept up to
/// date by push/dequeue and may be shared between several queues.
class CodelQueue {
 public:
  static constexpr uint64_t kMtuBytes = 1514;

  explicit CodelQueue(uint64_t* backlog_bytes = nullptr, uint32_t* backlog_packets = nullptr);

  CodelQueue(const CodelQueue&) = delete;
  CodelQueue& operator=(const CodelQueue&) = delete;
  CodelQueue(CodelQueue&&) = default;
  CodelQueue& operator=(CodelQueue&&) = default;

  void bind(uint64_t* backlog_bytes, uint32_t* backlog_packets) {
    backlog_bytes_ = backlog_bytes;
    backlog_packets_ = backlog_packets;
  }

  void push(Packet pkt, SimTime now);
  std::optional<Dequeued> dequeue(SimTime now, const AqmParams& params, QueueStats& stats);

  bool empty() const { return fifo_.empty(); }
  size_t size() const { return fifo_.size(); }
  uint64_t bytes() const { return bytes_; }
  const CodelState& state() const { return state_; }

 private:
  struct Popped {
    std::optional<Packet> pkt;
    bool ok_to_drop = false;
  };

  Popped pop_and_check(SimTime now, const AqmParams& params);
  // Marks an ECT packet (true) or drops it (false) according to params.
  bool act_on(Packet& pkt, const AqmParams& params, QueueStats& stats);

  std::deque<Packet> fifo_;
  uint64_t bytes_ = 0;
  uint64_t* backlog_bytes_;
  uint32_t* backlog_packets_;
  CodelState state_;
};

class Codel final : public QueueDisc {
 public:
  explicit Codel(AqmParams params = {});
  Codel(const Codel&) = delete;
  Codel& operator=(const Codel&) = delete;

  EnqueueResult enqueue(Packet pkt, SimTime now) override;
  std::optional<Dequeued> dequeue(SimTime now) override;
  void set_params(SimTime target, SimTime interval) override;

  uint32_t queued_packets() const override { return packets_; }
  uint64_t queued_bytes() const override { return bytes_; }
  uint32_t hard_limit() const override { return params_.hard_limit; }
  const QueueStats& stats() const override { return stats_; }

  const AqmParams& params() const { return params_; }
  const CodelState& state() const { return queue_.state(); }

 private:
  AqmParams params_;
  QueueStats stats_;
  uint64_t bytes_ = 0;
  uint32_t packets_ = 0;
  CodelQueue queue_;
};

class TailDrop final : public QueueDisc {
 public:
  explicit TailDrop(uint32_t hard_limit = 1000);

  EnqueueResult enqueue(Packet pkt, SimTime now) override;
  std::optional<Dequeued> dequeue(SimTime now) override;
  void set_params(SimTime, SimTime) override {}

  uint32_t queued_packets() const override { return static_cast<uint32_t>(fifo_.size()); }
  uint64_t queued_bytes() const override { return bytes_; }
  uint32_t hard_limit() const override { return hard_limit_; }
  const QueueStats& stats() const override { return stats_; }

 private:
  uint32_t hard_limit_;
  std::deque<Packet> fifo_;
  uint64_t bytes_ = 0;
  QueueStats stats_;
};

}  // namespace iaqm::aqm
