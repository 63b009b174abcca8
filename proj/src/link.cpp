#include "iaqm/link.hpp"

#include <stdexcept>

namespace iaqm::sim {

SimTime serialization_delay(uint32_t size_bytes, uint64_t bandwidth_bps) {
  if (bandwidth_bps == 0) throw std::invalid_argument("link bandwidth must be positive");
  const unsigned __int128 num =
      static_cast<unsigned __int128>(size_bytes) * 8u * 1'000'000'000u;
  const unsigned __int128 ns = (num + bandwidth_bps / 2) / bandwidth_bps;
  return SimTime::FromNanos(static_cast<int64_t>(ns));
}

SimTime transmit_delay(const Packet& pkt, const LinkConfig& link) {
  return serialization_delay(pkt.size_bytes, link.bandwidth_bps) + link.prop_delay;
}

Link::Link(Simulator& sim, LinkConfig config, std::unique_ptr<aqm::QueueDisc> disc)
    : sim_(sim), config_(config), disc_(std::move(disc)) {
  if (config_.bandwidth_bps == 0) throw std::invalid_argument("link bandwidth must be positive");
  if (!disc_) throw std::invalid_argument("link needs a queue discipline");
}

void Link::set_config(LinkConfig config) {
  if (config.bandwidth_bps == 0) throw std::invalid_argument("link bandwidth must be positive");
  config_ = config;
}

void Link::send(Packet pkt) {
  disc_->enqueue(std::move(pkt), sim_.now());
  if (!busy_) start_next();
}

void Link::start_next() {
  auto out = disc_->dequeue(sim_.now());
  if (!out) {
    busy_ = false;
    return;
  }
  busy_ = true;
  const SimTime tx = serialization_delay(out->packet.size_bytes, config_.bandwidth_bps);
  last_tx_start_ = sim_.now();
  last_tx_end_ = last_tx_start_ + tx;
  ++departed_;
  ++in_flight_;
  sim_.at(last_tx_end_, [this] { start_next(); });
  sim_.at(last_tx_end_ + config_.prop_delay, [this, p = std::move(out->packet)]() mutable {
    --in_flight_;
    if (receiver_) receiver_(std::move(p));
  });
}

}  // namespace iaqm::sim
