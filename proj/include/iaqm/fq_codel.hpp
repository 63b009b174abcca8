#pragma once

#include <deque>
#include <vector>

#include "iaqm/codel.hpp"

namespace iaqm::aqm {

/// Flow-queue CoDel: hashed per-flow sub-queues served by deficit round
/// robin, new flows ahead of old flows, CoDel applied per sub-queue.
class FqCodel final : public QueueDisc {
 public:
  static constexpr uint32_t kDefaultFlows = 1024;
  static constexpr int64_t kDefaultQuantum = 1514;

  enum class ListMembership { kNone, kNew, kOld };

  struct SubQueue {
    CodelQueue queue;
    int64_t deficit = 0;
    ListMembership list = ListMembership::kNone;
  };

  FqCodel(AqmParams params, uint64_t hash_seed, uint32_t flows = kDefaultFlows,
          int64_t quantum = kDefaultQuantum);
  FqCodel(const FqCodel&) = delete;
  FqCodel& operator=(const FqCodel&) = delete;

  EnqueueResult enqueue(Packet pkt, SimTime now) override;
  std::optional<Dequeued> dequeue(SimTime now) override;
  void set_params(SimTime target, SimTime interval) override;

  uint32_t queued_packets() const override { return packets_; }
  uint64_t queued_bytes() const override { return bytes_; }
  uint32_t hard_limit() const override { return params_.hard_limit; }
  const QueueStats& stats() const override { return stats_; }

  uint32_t flow_index(const sim::FlowId& flow) const;
  const SubQueue& sub_queue(uint32_t index) const { return subs_.at(index); }
  const std::deque<uint32_t>& new_flows() const { return new_flows_; }
  const std::deque<uint32_t>& old_flows() const { return old_flows_; }
  const AqmParams& params() const { return params_; }
  int64_t quantum() const { return quantum_; }

 private:
  AqmParams params_;
  uint64_t hash_seed_;
  int64_t quantum_;
  std::vector<SubQueue> subs_;
  std::deque<uint32_t> new_flows_;
  std::deque<uint32_t> old_flows_;
  uint64_t bytes_ = 0;
  uint32_t packets_ = 0;
  QueueStats stats_;
};

}  // namespace iaqm::aqm
