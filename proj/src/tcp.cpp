#include "iaqm/tcp.hpp"

#include <algorithm>
#include <cmath>

namespace iaqm::tcp {

using sim::tcp_flag::kAck;
using sim::tcp_flag::kCwr;
using sim::tcp_flag::kEce;
using sim::tcp_flag::kSyn;

double cubic_k(double w_max, const CubicParams& p) {
  return std::cbrt(w_max * (1.0 - p.beta) / p.c);
}

double cubic_window(double t_since_epoch, double w_max, const CubicParams& p) {
  const double d = t_since_epoch - cubic_k(w_max, p);
  return std::max(1.0, p.c * d * d * d + w_max);
}

double reno_friendly_window(double t_since_epoch, double rtt, double w_max,
                            const CubicParams& p) {
  if (rtt <= 0.0) return p.beta * w_max;
  return p.beta * w_max + 3.0 * (1.0 - p.beta) / (1.0 + p.beta) * (t_since_epoch / rtt);
}

void refresh_cwr(ConnectionState& conn, SimTime now) {
  if (conn.in_cwr && now >= conn.cwr_until) conn.in_cwr = false;
}

bool on_congestion_signal(ConnectionState& conn, CongestionSignal kind, SimTime now,
                          const CubicParams& params) {
  refresh_cwr(conn, now);
  if (conn.in_cwr) return false;
  conn.w_max = conn.cwnd;
  conn.cwnd = std::max(1.0, params.beta * conn.cwnd);
  conn.ssthresh = conn.cwnd;
  conn.epoch_start = now;
  conn.in_cwr = true;
  conn.cwr_until = now + conn.rtt_est;
  if (kind == CongestionSignal::kEceEcho) conn.send_cwr = true;
  ++conn.reductions;
  conn.last_reduction = now;
  return true;
}

bool negotiate_ecn(bool initiator_capable, bool responder_capable) {
  return initiator_capable && responder_capable;
}

Packet make_syn(const sim::FlowId& flow, bool ecn_capable, SimTime now) {
  Packet p;
  p.flow = flow;
  p.size_bytes = sim::kControlPacketBytes;
  p.ecn = sim::Ecn::kNotEct;
  p.tcp_flags = kSyn;
  if (ecn_capable) p.tcp_flags |= kEce | kCwr;
  p.sent_at = now;
  return p;
}

Packet make_syn_ack(const Packet& syn, bool responder_capable, SimTime now) {
  Packet p;
  p.flow = syn.flow.reversed();
  p.size_bytes = sim::kControlPacketBytes;
  p.ecn = sim::Ecn::kNotEct;
  p.tcp_flags = kSyn | kAck;
  if (responder_capable && syn.has(kEce) && syn.has(kCwr)) p.tcp_flags |= kEce;
  p.sent_at = now;
  p.echo_ts = syn.sent_at;
  return p;
}

Packet receiver_on_data(ReceiverState& rcv, const Packet& pkt) {
  if (rcv.ecn_negotiated) {
    if (pkt.has(kCwr)) rcv.ece_pending = false;
    if (pkt.ecn == sim::Ecn::kCe) rcv.ece_pending = true;
  }
  const uint64_t seg = pkt.seq / sim::kDataPacketBytes;
  if (seg == rcv.rcv_next) {
    ++rcv.rcv_next;
    rcv.delivered_bytes += sim::kDataPacketBytes;
    for (auto it = rcv.out_of_order.begin();
         it != rcv.out_of_order.end() && *it == rcv.rcv_next;
         it = rcv.out_of_order.erase(it)) {
      ++rcv.rcv_next;
      rcv.delivered_bytes += sim::kDataPacketBytes;
    }
  } else if (seg > rcv.rcv_next) {
    rcv.out_of_order.insert(seg);
  }

  Packet ack;
  ack.flow = pkt.flow.reversed();
  ack.ack = rcv.rcv_next * sim::kDataPacketBytes;
  ack.size_bytes = sim::kControlPacketBytes;
  ack.ecn = sim::Ecn::kNotEct;
  ack.tcp_flags = kAck;
  if (rcv.ece_pending) ack.tcp_flags |= kEce;
  ack.echo_ts = pkt.sent_at;
  return ack;
}

TcpSender::TcpSender(sim::Simulator& sim, sim::FlowId flow, Options opts, Emit emit)
    : sim_(sim), flow_(flow), opts_(opts), emit_(std::move(emit)) {
  conn_.cwnd = opts_.initial_cwnd;
}

void TcpSender::start() { send_syn(); }

void TcpSender::send_syn() {
  if (established_) return;
  emit_(make_syn(flow_, opts_.ecn_capable, sim_.now()));
  sim_.after(SimTime::FromSeconds(1), [this] { send_syn(); });
}

void TcpSender::on_packet(const Packet& pkt) {
  if (pkt.has(kSyn)) {
    if (!pkt.has(kAck) || established_) return;
    established_ = true;
    conn_.ecn_negotiated = opts_.ecn_capable && pkt.has(kEce);
    update_rtt(sim_.now() - pkt.echo_ts);
    try_send();
    return;
  }
  if (established_ && pkt.has(kAck)) on_ack(pkt);
}

SimTime TcpSender::rto() const {
  const SimTime base = std::max(opts_.min_rto, conn_.rtt_est * 2);
  return base * backoff_;
}

void TcpSender::update_rtt(SimTime sample) {
  if (sample.nanos() <= 0) return;
  if (!conn_.has_rtt_sample) {
    conn_.rtt_est = sample;
    conn_.rtt_var = sample / 2;
    conn_.has_rtt_sample = true;
    return;
  }
  const int64_t err = std::llabs(conn_.rtt_est.nanos() - sample.nanos());
  conn_.rtt_var = SimTime::FromNanos((3 * conn_.rtt_var.nanos() + err) / 4);
  conn_.rtt_est = SimTime::FromNanos((7 * conn_.rtt_est.nanos() + sample.nanos()) / 8);
}

void TcpSender::grow(uint64_t acked) {
  for (uint64_t i = 0; i < acked; ++i) {
    if (conn_.cwnd < conn_.ssthresh) {
      conn_.cwnd += 1.0;
      continue;
    }
    const double t = (sim_.now() - conn_.epoch_start).seconds();
    const double rtt = conn_.rtt_est.seconds();
    double target = cubic_window(t + rtt, conn_.w_max, opts_.cubic);
    if (opts_.tcp_friendly) {
      target = std::max(target, reno_friendly_window(t, rtt, conn_.w_max, opts_.cubic));
    }
    target = std::min(target, 1.5 * conn_.cwnd);
    if (target > conn_.cwnd) {
      conn_.cwnd += (target - conn_.cwnd) / conn_.cwnd;
    } else {
      conn_.cwnd += 0.01 / conn_.cwnd;
    }
  }
}

void TcpSender::on_ack(const Packet& ack) {
  const SimTime now = sim_.now();
  refresh_cwr(conn_, now);
  const uint64_t ack_seg = ack.ack / sim::kDataPacketBytes;

  if (ack_seg > snd_una_) {
    const uint64_t acked = ack_seg - snd_una_;
    snd_una_ = ack_seg;
    snd_nxt_ = std::max(snd_nxt_, snd_una_);
    update_rtt(now - ack.echo_ts);
    dupacks_ = 0;
    backoff_ = 1;
    if (in_recovery_) {
      if (snd_una_ >= recover_) {
        in_recovery_ = false;
        inflation_ = 0.0;
      } else {
        // Partial ACK: deflate by what left the network, resend the next hole.
        inflation_ = std::max(0.0, inflation_ - static_cast<double>(acked)) + 1.0;
        send_segment(snd_una_, true);
      }
    } else if (!conn_.in_cwr) {
      grow(acked);
    }
    if (snd_nxt_ > snd_una_) {
      arm_rto();
    } else {
      rto_armed_ = false;
    }
  } else if (ack_seg == snd_una_ && snd_nxt_ > snd_una_) {
    ++dupacks_;
    if (in_recovery_) inflation_ += 1.0;
    if (dupacks_ == 3 && !in_recovery_) {
      in_recovery_ = true;
      recover_ = snd_nxt_;
      inflation_ = 3.0;
      if (on_congestion_signal(conn_, CongestionSignal::kPacketLoss, now, opts_.cubic)) {
        ++stats_.loss_reductions;
        if (on_reduction) on_reduction(conn_, now);
      }
      send_segment(snd_una_, true);
    }
  }

  if (conn_.ecn_negotiated && ack.has(kEce)) {
    if (on_congestion_signal(conn_, CongestionSignal::kEceEcho, now, opts_.cubic)) {
      ++stats_.ece_reductions;
      if (on_reduction) on_reduction(conn_, now);
    }
  }
  try_send();
}

void TcpSender::try_send() {
  if (!established_) return;
  const double window = std::floor(conn_.cwnd) + (in_recovery_ ? inflation_ : 0.0);
  while (static_cast<double>(snd_nxt_ - snd_una_) < window) {
    send_segment(snd_nxt_, snd_nxt_ < high_sent_);
    ++snd_nxt_;
    high_sent_ = std::max(high_sent_, snd_nxt_);
  }
  if (!rto_armed_ && snd_nxt_ > snd_una_) arm_rto();
}

void TcpSender::send_segment(uint64_t seg, bool retransmission) {
  Packet p;
  p.flow = flow_;
  p.seq = seg * sim::kDataPacketBytes;
  p.size_bytes = sim::kDataPacketBytes;
  p.ecn = conn_.ecn_negotiated ? sim::Ecn::kEct0 : sim::Ecn::kNotEct;
  p.tcp_flags = kAck;
  if (conn_.send_cwr) {
    p.tcp_flags |= kCwr;
    conn_.send_cwr = false;
  }
  p.sent_at = sim_.now();
  ++stats_.segments_sent;
  stats_.bytes_sent += p.size_bytes;
  if (retransmission) ++stats_.retransmits;
  emit_(p);
}

// One timer event is kept in flight; re-arming only moves the deadline and
// the event reschedules itself when it fires early.
void TcpSender::arm_rto() {
  rto_armed_ = true;
  rto_deadline_ = sim_.now() + rto();
  if (rto_event_pending_) return;
  rto_event_pending_ = true;
  sim_.at(rto_deadline_, [this] { on_rto(); });
}

void TcpSender::on_rto() {
  rto_event_pending_ = false;
  if (!rto_armed_) return;
  if (sim_.now() < rto_deadline_) {
    rto_event_pending_ = true;
    sim_.at(rto_deadline_, [this] { on_rto(); });
    return;
  }
  rto_armed_ = false;
  if (snd_nxt_ <= snd_una_) return;
  const SimTime now = sim_.now();
  ++stats_.timeouts;
  conn_.w_max = conn_.cwnd;
  conn_.ssthresh = std::max(2.0, opts_.cubic.beta * conn_.cwnd);
  conn_.cwnd = 1.0;
  conn_.epoch_start = now;
  conn_.in_cwr = true;
  conn_.cwr_until = now + conn_.rtt_est;
  ++conn_.reductions;
  conn_.last_reduction = now;
  if (on_reduction) on_reduction(conn_, now);
  in_recovery_ = false;
  inflation_ = 0.0;
  dupacks_ = 0;
  snd_nxt_ = snd_una_;
  backoff_ = std::min(backoff_ * 2, 64);
  try_send();
  arm_rto();
}

void TcpReceiver::on_packet(const Packet& pkt, SimTime now) {
  if (pkt.has(kSyn)) {
    rcv_.ecn_negotiated = ecn_capable_ && pkt.has(kEce) && pkt.has(kCwr);
    emit_(make_syn_ack(pkt, ecn_capable_, now));
    return;
  }
  if (pkt.size_bytes == sim::kControlPacketBytes) return;
  emit_(receiver_on_data(rcv_, pkt));
}

}  // namespace iaqm::tcp
