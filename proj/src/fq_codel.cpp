#include "iaqm/fq_codel.hpp"

#include <stdexcept>

#include "iaqm/rng.hpp"

namespace iaqm::aqm {

FqCodel::FqCodel(AqmParams params, uint64_t hash_seed, uint32_t flows, int64_t quantum)
    : params_(params), hash_seed_(hash_seed), quantum_(quantum), subs_(flows) {
  validate_params(params_.target, params_.interval);
  if (params_.hard_limit == 0) throw std::invalid_argument("hard limit must be >= 1");
  if (flows == 0) throw std::invalid_argument("FQ-CoDel needs at least one sub-queue");
  if (quantum <= 0) throw std::invalid_argument("FQ-CoDel quantum must be positive");
  for (auto& sq : subs_) sq.queue.bind(&bytes_, &packets_);
}

uint32_t FqCodel::flow_index(const sim::FlowId& f) const {
  uint64_t h = sim::splitmix64(hash_seed_ ^ f.src_addr);
  h = sim::splitmix64(h ^ (static_cast<uint64_t>(f.dst_addr) << 1));
  h = sim::splitmix64(h ^ ((static_cast<uint64_t>(f.src_port) << 24) |
                           (static_cast<uint64_t>(f.dst_port) << 8) | f.protocol));
  return static_cast<uint32_t>(h % subs_.size());
}

EnqueueResult FqCodel::enqueue(Packet pkt, SimTime now) {
  ++stats_.arrivals;
  if (packets_ >= params_.hard_limit) {
    ++stats_.overflow_drops;
    return EnqueueResult::kDropped;
  }
  const uint32_t idx = flow_index(pkt.flow);
  SubQueue& sq = subs_[idx];
  sq.queue.push(pkt, now);
  if (sq.list == ListMembership::kNone) {
    sq.list = ListMembership::kNew;
    sq.deficit = quantum_;
    new_flows_.push_back(idx);
  }
  return EnqueueResult::kQueued;
}

std::optional<Dequeued> FqCodel::dequeue(SimTime now) {
  for (;;) {
    std::deque<uint32_t>* list = nullptr;
    if (!new_flows_.empty()) {
      list = &new_flows_;
    } else if (!old_flows_.empty()) {
      list = &old_flows_;
    } else {
      return std::nullopt;
    }
    const uint32_t idx = list->front();
    SubQueue& sq = subs_[idx];

    if (sq.deficit <= 0) {
      sq.deficit += quantum_;
      list->pop_front();
      old_flows_.push_back(idx);
      sq.list = ListMembership::kOld;
      continue;
    }

    auto out = sq.queue.dequeue(now, params_, stats_);
    if (!out) {
      list->pop_front();
      // An emptied new flow waits one round on the old list so that a flow
      // cannot regain new-flow priority just by draining.
      if (list == &new_flows_ && !old_flows_.empty()) {
        old_flows_.push_back(idx);
        sq.list = ListMembership::kOld;
      } else {
        sq.list = ListMembership::kNone;
      }
      continue;
    }
    sq.deficit -= out->packet.size_bytes;
    return out;
  }
}

void FqCodel::set_params(SimTime target, SimTime interval) {
  validate_params(target, interval);
  params_.target = target;
  params_.interval = interval;
}

}  // namespace iaqm::aqm
