#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <set>

#include "iaqm/event_queue.hpp"
#include "iaqm/packet.hpp"

namespace iaqm::tcp {

using sim::Packet;
using sim::SimTime;

struct CubicParams {
  double c = 0.4;
  double beta = 0.7;
};

/// Time (s) for the cubic curve to climb back to w_max after a reduction.
double cubic_k(double w_max, const CubicParams& p = {});

/// C*(t-K)^3 + w_max, never below one packet.
double cubic_window(double t_since_epoch, double w_max, const CubicParams& p = {});

/// Window of a Reno flow with the same loss history (CUBIC TCP-friendly
/// estimate): beta*w_max + 3(1-beta)/(1+beta) * t/rtt.
double reno_friendly_window(double t_since_epoch, double rtt, double w_max,
                            const CubicParams& p = {});

enum class CongestionSignal { kEceEcho, kPacketLoss };

/// Sender-side congestion state. Windows are in packets.
struct ConnectionState {
  double cwnd = 10.0;
  double w_max = 0.0;
  SimTime epoch_start;
  double ssthresh = std::numeric_limits<double>::infinity();
  bool in_cwr = false;
  SimTime cwr_until;
  bool ecn_negotiated = false;
  bool send_cwr = false;  // next data segment carries CWR
  SimTime rtt_est = SimTime::FromMillis(100);
  SimTime rtt_var = SimTime::FromMillis(50);
  bool has_rtt_sample = false;
  uint64_t reductions = 0;
  SimTime last_reduction = SimTime::FromNanos(-1);
};

/// Clears in_cwr once a smoothed RTT has passed since the last reduction.
void refresh_cwr(ConnectionState& conn, SimTime now);

/// Multiplicative decrease, at most once per smoothed RTT. Returns true when
/// the window was reduced. An ECE echo additionally arms send_cwr.
bool on_congestion_signal(ConnectionState& conn, CongestionSignal kind, SimTime now,
                          const CubicParams& params = {});

/// ECN setup outcome for a pair of endpoints.
bool negotiate_ecn(bool initiator_capable, bool responder_capable);

/// SYN: carries ECE+CWR when the initiator is ECN-capable. Never ECT.
Packet make_syn(const sim::FlowId& flow, bool ecn_capable, SimTime now);
/// SYN-ACK: carries ECE iff the SYN requested ECN and the responder agrees.
Packet make_syn_ack(const Packet& syn, bool responder_capable, SimTime now);

struct ReceiverState {
  bool ecn_negotiated = false;
  bool ece_pending = false;
  uint64_t rcv_next = 0;  // next expected segment index
  std::set<uint64_t> out_of_order;
  uint64_t delivered_bytes = 0;  // in-order bytes handed to the application
};

/// Consumes a data segment and returns the pure ACK to send back.
Packet receiver_on_data(ReceiverState& rcv, const Packet& pkt);

struct SenderStats {
  uint64_t segments_sent = 0;
  uint64_t bytes_sent = 0;
  uint64_t retransmits = 0;
  uint64_t timeouts = 0;
  uint64_t ece_reductions = 0;
  uint64_t loss_reductions = 0;
};

/// Bulk-transfer CUBIC sender with ECN, fast retransmit and a coarse RTO.
class TcpSender {
 public:
  using Emit = std::function<void(Packet)>;

  struct Options {
    bool ecn_capable = true;
    bool tcp_friendly = false;
    double initial_cwnd = 10.0;
    CubicParams cubic;
    SimTime min_rto = SimTime::FromMillis(200);
  };

  TcpSender(sim::Simulator& sim, sim::FlowId flow, Options opts, Emit emit);
  TcpSender(const TcpSender&) = delete;
  TcpSender& operator=(const TcpSender&) = delete;

  void start();
  void on_packet(const Packet& pkt);

  const ConnectionState& state() const { return conn_; }
  const SenderStats& stats() const { return stats_; }
  bool established() const { return established_; }
  uint64_t snd_una() const { return snd_una_; }
  uint64_t snd_nxt() const { return snd_nxt_; }
  const sim::FlowId& flow() const { return flow_; }

  /// Invoked after every window reduction (for invariant checks).
  std::function<void(const ConnectionState&, SimTime)> on_reduction;

 private:
  void try_send();
  void send_segment(uint64_t seg, bool retransmission);
  void on_ack(const Packet& ack);
  void grow(uint64_t acked);
  void update_rtt(SimTime sample);
  void arm_rto();
  void on_rto();
  void send_syn();
  SimTime rto() const;

  sim::Simulator& sim_;
  sim::FlowId flow_;
  Options opts_;
  Emit emit_;
  ConnectionState conn_;
  SenderStats stats_;

  bool established_ = false;
  uint64_t snd_una_ = 0;
  uint64_t snd_nxt_ = 0;
  uint64_t high_sent_ = 0;
  uint32_t dupacks_ = 0;
  bool in_recovery_ = false;
  double inflation_ = 0.0;  // fast-recovery window inflation in segments
  uint64_t recover_ = 0;
  bool rto_armed_ = false;
  bool rto_event_pending_ = false;
  SimTime rto_deadline_;
  int backoff_ = 1;
};

/// Receiving endpoint: answers SYNs and ACKs every data segment.
class TcpReceiver {
 public:
  using Emit = std::function<void(Packet)>;

  TcpReceiver(bool ecn_capable, Emit emit) : ecn_capable_(ecn_capable), emit_(std::move(emit)) {}

  void on_packet(const Packet& pkt, SimTime now);

  const ReceiverState& state() const { return rcv_; }
  uint64_t delivered_bytes() const { return rcv_.delivered_bytes; }

 private:
  bool ecn_capable_;
  Emit emit_;
  ReceiverState rcv_;
};

}  // namespace iaqm::tcp
