#include "iaqm/event_queue.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace iaqm::sim {

void EventQueue::schedule(SimTime at, std::function<void()> action) {
  if (at < now_) {
    throw std::logic_error("event scheduled in the past: " +
                           std::to_string(at.nanos()) + " < " +
                           std::to_string(now_.nanos()));
  }
  heap_.push_back(TimedEvent{at, next_seq_++, std::move(action)});
  std::push_heap(heap_.begin(), heap_.end(), later);
}

std::optional<TimedEvent> EventQueue::pop_next() {
  if (heap_.empty()) return std::nullopt;
  std::pop_heap(heap_.begin(), heap_.end(), later);
  TimedEvent ev = std::move(heap_.back());
  heap_.pop_back();
  now_ = ev.at;
  return ev;
}

SimTime EventQueue::next_time() const {
  return heap_.empty() ? SimTime::Max() : heap_.front().at;
}

uint64_t Simulator::run_until(SimTime end) {
  uint64_t n = 0;
  while (!events_.empty() && events_.next_time() <= end) {
    auto ev = events_.pop_next();
    ev->action();
    ++n;
  }
  processed_ += n;
  return n;
}

uint64_t Simulator::run() { return run_until(SimTime::Max()); }

}  // namespace iaqm::sim
