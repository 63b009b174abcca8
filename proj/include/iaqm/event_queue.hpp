#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "iaqm/sim_time.hpp"

namespace iaqm::sim {

struct TimedEvent {
  SimTime at;
  uint64_t seq = 0;
  std::function<void()> action;
};

/// Min-heap of events ordered by (time, insertion sequence).
class EventQueue {
 public:
  /// Throws std::logic_error when `at` precedes the current clock.
  void schedule(SimTime at, std::function<void()> action);

  /// Removes the earliest event and advances the clock to it. Empty
  /// optional means the simulation has nothing left to do.
  std::optional<TimedEvent> pop_next();

  SimTime now() const { return now_; }
  bool empty() const { return heap_.empty(); }
  size_t size() const { return heap_.size(); }
  SimTime next_time() const;

 private:
  static bool later(const TimedEvent& a, const TimedEvent& b) {
    if (a.at != b.at) return a.at > b.at;
    return a.seq > b.seq;
  }

  std::vector<TimedEvent> heap_;
  uint64_t next_seq_ = 0;
  SimTime now_;
};

/// Thin driver around EventQueue.
class Simulator {
 public:
  SimTime now() const { return events_.now(); }

  void at(SimTime when, std::function<void()> action) {
    events_.schedule(when, std::move(action));
  }
  void after(SimTime delay, std::function<void()> action) {
    events_.schedule(now() + delay, std::move(action));
  }

  /// Processes events with time <= end. Returns the number processed.
  uint64_t run_until(SimTime end);
  uint64_t run();

  uint64_t processed() const { return processed_; }

 private:
  EventQueue events_;
  uint64_t processed_ = 0;
};

}  // namespace iaqm::sim
