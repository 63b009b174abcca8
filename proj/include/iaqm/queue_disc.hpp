#pragma once

#include <cstdint>
#include <optional>

#include "iaqm/packet.hpp"
#include "iaqm/sim_time.hpp"

namespace iaqm::aqm {

using sim::Packet;
using sim::SimTime;

enum class EnqueueResult { kQueued, kDropped };
enum class Verdict { kForward, kMarkedCe };

struct Dequeued {
  Packet packet;
  Verdict verdict = Verdict::kForward;
};

/// Counters shared by every discipline.
/// arrivals = forwarded + marked + overflow_drops + aqm_drops + queued.
struct QueueStats {
  uint64_t arrivals = 0;
  uint64_t forwarded = 0;
  uint64_t marked = 0;
  uint64_t overflow_drops = 0;
  uint64_t aqm_drops = 0;

  uint64_t drops() const { return overflow_drops + aqm_drops; }
};

struct AqmParams {
  SimTime target = SimTime::FromMillis(5);
  SimTime interval = SimTime::FromMillis(100);
  uint32_t hard_limit = 1000;
  bool ecn_enabled = true;
};

/// Validates target < interval and both positive; throws std::invalid_argument.
void validate_params(SimTime target, SimTime interval);

class QueueDisc {
 public:
  virtual ~QueueDisc() = default;

  virtual EnqueueResult enqueue(Packet pkt, SimTime now) = 0;
  virtual std::optional<Dequeued> dequeue(SimTime now) = 0;

  /// Takes effect for later control-law evaluations; queued packets and
  /// control-law state are kept. Tail-drop accepts and ignores it.
  virtual void set_params(SimTime target, SimTime interval) = 0;

  virtual uint32_t queued_packets() const = 0;
  virtual uint64_t queued_bytes() const = 0;
  virtual uint32_t hard_limit() const = 0;
  virtual const QueueStats& stats() const = 0;

  /// 100 * queued / hard_limit.
  double occupancy() const {
    return 100.0 * static_cast<double>(queued_packets()) /
           static_cast<double>(hard_limit());
  }
};

}  // namespace iaqm::aqm
