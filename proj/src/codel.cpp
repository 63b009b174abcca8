#include "iaqm/codel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace iaqm::aqm {

void validate_params(SimTime target, SimTime interval) {
  if (target.nanos() <= 0 || interval.nanos() <= 0) {
    throw std::invalid_argument("AQM target and interval must be positive");
  }
  if (target >= interval) {
    throw std::invalid_argument("AQM target (" + std::to_string(target.nanos()) +
                                " ns) must be below interval (" +
                                std::to_string(interval.nanos()) + " ns)");
  }
}

SimTime control_law(SimTime t, SimTime interval, uint32_t count) {
  const double spacing =
      static_cast<double>(interval.nanos()) / std::sqrt(static_cast<double>(count));
  return t + SimTime::FromNanos(std::llround(spacing));
}

CodelQueue::CodelQueue(uint64_t* backlog_bytes, uint32_t* backlog_packets)
    : backlog_bytes_(backlog_bytes), backlog_packets_(backlog_packets) {}

void CodelQueue::push(Packet pkt, SimTime now) {
  pkt.enqueued_at = now;
  bytes_ += pkt.size_bytes;
  if (backlog_bytes_ != nullptr) *backlog_bytes_ += pkt.size_bytes;
  if (backlog_packets_ != nullptr) ++*backlog_packets_;
  fifo_.push_back(pkt);
}

CodelQueue::Popped CodelQueue::pop_and_check(SimTime now, const AqmParams& params) {
  Popped r;
  if (fifo_.empty()) {
    state_.first_above_time.reset();
    return r;
  }
  r.pkt = fifo_.front();
  fifo_.pop_front();
  bytes_ -= r.pkt->size_bytes;
  if (backlog_bytes_ != nullptr) *backlog_bytes_ -= r.pkt->size_bytes;
  if (backlog_packets_ != nullptr) --*backlog_packets_;

  const SimTime sojourn = now - r.pkt->enqueued_at;
  const uint64_t backlog = backlog_bytes_ != nullptr ? *backlog_bytes_ : bytes_;
  if (sojourn < params.target || backlog <= kMtuBytes) {
    state_.first_above_time.reset();
  } else if (!state_.first_above_time) {
    state_.first_above_time = now;
  } else if (now >= *state_.first_above_time + params.interval) {
    r.ok_to_drop = true;
  }
  return r;
}

bool CodelQueue::act_on(Packet& pkt, const AqmParams& params, QueueStats& stats) {
  if (params.ecn_enabled && pkt.mark_ce()) {
    ++stats.marked;
    return true;
  }
  ++stats.aqm_drops;
  return false;
}

std::optional<Dequeued> CodelQueue::dequeue(SimTime now, const AqmParams& params,
                                            QueueStats& stats) {
  Popped r = pop_and_check(now, params);
  if (!r.pkt) {
    state_.dropping = false;
    return std::nullopt;
  }

  if (state_.dropping) {
    if (!r.ok_to_drop) {
      state_.dropping = false;
    } else {
      while (state_.dropping && now >= state_.drop_next) {
        ++state_.count;
        if (act_on(*r.pkt, params, stats)) {
          state_.drop_next = control_law(state_.drop_next, params.interval, state_.count);
          return Dequeued{*r.pkt, Verdict::kMarkedCe};
        }
        r = pop_and_check(now, params);
        if (!r.pkt) {
          state_.dropping = false;
          return std::nullopt;
        }
        if (!r.ok_to_drop) {
          state_.dropping = false;
        } else {
          state_.drop_next = control_law(state_.drop_next, params.interval, state_.count);
        }
      }
    }
  } else if (r.ok_to_drop) {
    state_.dropping = true;
    // Re-entering soon after the last dropping phase resumes near the old rate.
    const bool recent = now - state_.drop_next < params.interval * 16;
    state_.count = (state_.count > 2 && recent) ? state_.count - 2 : 1;
    state_.last_count = state_.count;
    state_.drop_next = control_law(now, params.interval, state_.count);
    if (act_on(*r.pkt, params, stats)) {
      return Dequeued{*r.pkt, Verdict::kMarkedCe};
    }
    r = pop_and_check(now, params);
    if (!r.pkt) return std::nullopt;
  }

  ++stats.forwarded;
  return Dequeued{*r.pkt, Verdict::kForward};
}

Codel::Codel(AqmParams params) : params_(params), queue_(&bytes_, &packets_) {
  validate_params(params_.target, params_.interval);
  if (params_.hard_limit == 0) throw std::invalid_argument("hard limit must be >= 1");
}

EnqueueResult Codel::enqueue(Packet pkt, SimTime now) {
  ++stats_.arrivals;
  if (packets_ >= params_.hard_limit) {
    ++stats_.overflow_drops;
    return EnqueueResult::kDropped;
  }
  queue_.push(pkt, now);
  return EnqueueResult::kQueued;
}

std::optional<Dequeued> Codel::dequeue(SimTime now) {
  return queue_.dequeue(now, params_, stats_);
}

void Codel::set_params(SimTime target, SimTime interval) {
  validate_params(target, interval);
  params_.target = target;
  params_.interval = interval;
}

TailDrop::TailDrop(uint32_t hard_limit) : hard_limit_(hard_limit) {
  if (hard_limit_ == 0) throw std::invalid_argument("hard limit must be >= 1");
}

EnqueueResult TailDrop::enqueue(Packet pkt, SimTime now) {
  ++stats_.arrivals;
  if (fifo_.size() >= hard_limit_) {
    ++stats_.overflow_drops;
    return EnqueueResult::kDropped;
  }
  pkt.enqueued_at = now;
  bytes_ += pkt.size_bytes;
  fifo_.push_back(pkt);
  return EnqueueResult::kQueued;
}

std::optional<Dequeued> TailDrop::dequeue(SimTime) {
  if (fifo_.empty()) return std::nullopt;
  Packet p = fifo_.front();
  fifo_.pop_front();
  bytes_ -= p.size_bytes;
  ++stats_.forwarded;
  return Dequeued{p, Verdict::kForward};
}

}  // namespace iaqm::aqm
