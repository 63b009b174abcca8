#pragma once

#include <cstdint>

#include "iaqm/sim_time.hpp"

namespace iaqm::sim {

/// IP ECN field codepoints.
enum class Ecn : uint8_t { kNotEct = 0, kEct1 = 1, kEct0 = 2, kCe = 3 };

inline bool is_ect(Ecn e) { return e == Ecn::kEct0 || e == Ecn::kEct1; }

namespace tcp_flag {
inline constexpr uint8_t kSyn = 0x01;
inline constexpr uint8_t kAck = 0x02;
inline constexpr uint8_t kFin = 0x04;
inline constexpr uint8_t kEce = 0x08;
inline constexpr uint8_t kCwr = 0x10;
}  // namespace tcp_flag

inline constexpr uint32_t kDataPacketBytes = 1500;
inline constexpr uint32_t kControlPacketBytes = 64;

using NodeId = uint32_t;

/// 5-tuple. Addresses are node ids.
struct FlowId {
  uint32_t src_addr = 0;
  uint32_t dst_addr = 0;
  uint16_t src_port = 0;
  uint16_t dst_port = 0;
  uint8_t protocol = 6;

  FlowId reversed() const {
    return FlowId{dst_addr, src_addr, dst_port, src_port, protocol};
  }
  bool operator==(const FlowId&) const = default;
};

struct Packet {
  FlowId flow;
  uint64_t seq = 0;  // byte sequence number of the first payload byte
  uint64_t ack = 0;  // cumulative acknowledgement (bytes)
  uint32_t size_bytes = kDataPacketBytes;
  Ecn ecn = Ecn::kNotEct;
  uint8_t tcp_flags = 0;
  SimTime sent_at;
  SimTime echo_ts;      // sent_at of the segment that triggered an ACK
  SimTime enqueued_at;  // set by queue disciplines
  bool is_probe = false;

  bool has(uint8_t flag) const { return (tcp_flags & flag) != 0; }
  NodeId dst() const { return flow.dst_addr; }

  /// Sets CE on an ECN-capable packet. Returns false (and leaves the packet
  /// untouched) for Not-ECT.
  bool mark_ce() {
    if (ecn == Ecn::kCe) return true;
    if (!is_ect(ecn)) return false;
    ecn = Ecn::kCe;
    return true;
  }

  /// ECE signal counted toward congestion statistics: negotiation packets
  /// (SYN present) never count.
  bool counts_as_ece() const { return has(tcp_flag::kEce) && !has(tcp_flag::kSyn); }
};

}  // namespace iaqm::sim
