#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "iaqm/event_queue.hpp"
#include "iaqm/packet.hpp"
#include "iaqm/queue_disc.hpp"

namespace iaqm::sim {

struct LinkConfig {
  uint64_t bandwidth_bps = 0;
  SimTime prop_delay;
};

/// size*8/bandwidth rounded half-up to whole nanoseconds.
SimTime serialization_delay(uint32_t size_bytes, uint64_t bandwidth_bps);

/// Serialization plus propagation. Throws std::invalid_argument for a zero
/// bandwidth.
SimTime transmit_delay(const Packet& pkt, const LinkConfig& link);

/// Unidirectional link: an egress queue discipline feeding a serializer,
/// followed by a propagation delay.
class Link {
 public:
  using Receiver = std::function<void(Packet&&)>;

  Link(Simulator& sim, LinkConfig config, std::unique_ptr<aqm::QueueDisc> disc);

  void set_receiver(Receiver r) { receiver_ = std::move(r); }

  void send(Packet pkt);
  void set_config(LinkConfig config);

  const LinkConfig& config() const { return config_; }
  aqm::QueueDisc& disc() { return *disc_; }
  const aqm::QueueDisc& disc() const { return *disc_; }

  bool busy() const { return busy_; }
  uint64_t departed() const { return departed_; }
  uint64_t in_flight() const { return in_flight_; }
  /// Start of the most recent transmission and its end.
  SimTime last_tx_start() const { return last_tx_start_; }
  SimTime last_tx_end() const { return last_tx_end_; }

 private:
  void start_next();

  Simulator& sim_;
  LinkConfig config_;
  std::unique_ptr<aqm::QueueDisc> disc_;
  Receiver receiver_;
  bool busy_ = false;
  uint64_t departed_ = 0;
  uint64_t in_flight_ = 0;
  SimTime last_tx_start_;
  SimTime last_tx_end_;
};

}  // namespace iaqm::sim
