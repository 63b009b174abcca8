#include <doctest.h>

#include <cmath>
#include <memory>

#include "iaqm/codel.hpp"
#include "iaqm/network.hpp"
#include "iaqm/tcp.hpp"

using namespace iaqm;
using namespace iaqm::tcp;
using sim::Ecn;
using sim::FlowId;
using namespace sim::tcp_flag;

TEST_CASE("cubic window") {
  const double k = cubic_k(100.0);
  CHECK(k == doctest::Approx(std::cbrt(75.0)).epsilon(1e-15));
  CHECK(cubic_window(k, 100.0) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(cubic_window(0.0, 100.0) == doctest::Approx(70.0).epsilon(1e-12));
  const double d = 2.0 - std::cbrt(75.0);
  CHECK(cubic_window(2.0, 100.0) == doctest::Approx(0.4 * d * d * d + 100.0).epsilon(1e-12));
  CHECK(cubic_window(2.0, 100.0) == doctest::Approx(95.64).epsilon(1e-3));
  CHECK(cubic_window(0.0, 1.0) >= 1.0);
}

TEST_CASE("cubic window is continuous and increasing past K") {
  for (double w : {2.0, 10.0, 100.0, 1000.0}) {
    const double k = cubic_k(w);
    double prev = cubic_window(k, w);
    for (double t = k + 0.01; t < k + 5.0; t += 0.01) {
      const double v = cubic_window(t, w);
      REQUIRE(v > prev);
      REQUIRE(v - prev < 1.0);
      prev = v;
    }
  }
}

TEST_CASE("congestion signal reduces once per rtt") {
  ConnectionState c;
  c.cwnd = 100.0;
  c.rtt_est = sim::SimTime::FromMillis(40);
  const auto t0 = sim::SimTime::FromSeconds(1);
  CHECK(on_congestion_signal(c, CongestionSignal::kEceEcho, t0));
  CHECK(c.cwnd == doctest::Approx(70.0));
  CHECK(c.w_max == 100.0);
  CHECK(c.send_cwr);
  CHECK(c.in_cwr);
  CHECK(c.epoch_start == t0);

  CHECK_FALSE(on_congestion_signal(c, CongestionSignal::kEceEcho, t0 + sim::SimTime::FromMillis(39)));
  CHECK(c.cwnd == doctest::Approx(70.0));
  CHECK(on_congestion_signal(c, CongestionSignal::kEceEcho, t0 + sim::SimTime::FromMillis(40)));
  CHECK(c.cwnd == doctest::Approx(49.0));

  ConnectionState l;
  l.cwnd = 10.0;
  CHECK(on_congestion_signal(l, CongestionSignal::kPacketLoss, t0));
  CHECK(l.cwnd == doctest::Approx(7.0));
  CHECK_FALSE(l.send_cwr);

  ConnectionState one;
  one.cwnd = 1.0;
  on_congestion_signal(one, CongestionSignal::kPacketLoss, t0);
  CHECK(one.cwnd == 1.0);
}

TEST_CASE("ecn negotiation") {
  CHECK(negotiate_ecn(true, true));
  CHECK_FALSE(negotiate_ecn(true, false));
  CHECK_FALSE(negotiate_ecn(false, true));

  const FlowId f{1, 2, 3, 4, 6};
  const auto syn = make_syn(f, true, {});
  CHECK(syn.has(kSyn));
  CHECK(syn.has(kEce));
  CHECK(syn.has(kCwr));
  CHECK(syn.ecn == Ecn::kNotEct);
  CHECK_FALSE(syn.counts_as_ece());

  const auto yes = make_syn_ack(syn, true, {});
  CHECK(yes.has(kEce));
  CHECK_FALSE(yes.counts_as_ece());
  CHECK(yes.flow == f.reversed());
  CHECK_FALSE(make_syn_ack(syn, false, {}).has(kEce));
  CHECK_FALSE(make_syn_ack(make_syn(f, false, {}), true, {}).has(kEce));
}

TEST_CASE("receiver echoes ECE until CWR") {
  ReceiverState r;
  r.ecn_negotiated = true;
  sim::Packet d;
  d.flow = FlowId{1, 2, 3, 4, 6};
  d.ecn = Ecn::kEct0;

  d.seq = 0;
  auto ack = receiver_on_data(r, d);
  CHECK_FALSE(ack.has(kEce));
  CHECK(ack.size_bytes == sim::kControlPacketBytes);
  CHECK(ack.ecn == Ecn::kNotEct);

  d.seq = 1500;
  d.ecn = Ecn::kCe;
  CHECK(receiver_on_data(r, d).has(kEce));
  d.seq = 3000;
  d.ecn = Ecn::kEct0;
  CHECK(receiver_on_data(r, d).has(kEce));
  d.seq = 4500;
  d.tcp_flags = kAck | kCwr;
  ack = receiver_on_data(r, d);
  CHECK_FALSE(ack.has(kEce));
  CHECK(ack.ack == 6000);
  CHECK(r.delivered_bytes == 6000);
}

TEST_CASE("receiver reassembles out of order segments") {
  ReceiverState r;
  sim::Packet d;
  d.seq = 3000;
  CHECK(receiver_on_data(r, d).ack == 0);
  d.seq = 0;
  CHECK(receiver_on_data(r, d).ack == 1500);
  d.seq = 1500;
  CHECK(receiver_on_data(r, d).ack == 4500);
  CHECK(r.delivered_bytes == 4500);
}

namespace {

struct Pair {
  sim::Simulator sim;
  sim::Network net{sim};
  sim::Dumbbell d;
  std::unique_ptr<TcpSender> tx;
  std::unique_ptr<TcpReceiver> rx;
  uint64_t ect = 0, not_ect = 0;

  Pair(bool tx_ecn, bool rx_ecn, uint32_t limit = 1000) {
    sim::DumbbellSpec spec;
    spec.b_links = {{200'000'000, sim::SimTime::FromMillis(20)}};
    spec.a_links = {{100'000'000, sim::SimTime{}}};
    spec.bottleneck = {20'000'000, sim::SimTime{}};
    spec.monitor_b_link = spec.b_links[0];
    spec.monitor_a_link = spec.a_links[0];
    d = sim::build_dumbbell(net, spec, std::make_unique<aqm::TailDrop>(limit));
    const auto b = d.hosts_b[0], a = d.hosts_a[0];
    TcpSender::Options o;
    o.ecn_capable = tx_ecn;
    tx = std::make_unique<TcpSender>(sim, FlowId{b, a, 1000, 5001, 6}, o,
                                     [this, b](sim::Packet p) { net.send_from(b, p); });
    rx = std::make_unique<TcpReceiver>(rx_ecn, [this, a](sim::Packet p) { net.send_from(a, p); });
    net.set_handler(b, [this](sim::Packet&& p) { tx->on_packet(p); });
    net.set_handler(a, [this](sim::Packet&& p) {
      if (p.size_bytes == sim::kDataPacketBytes) (sim::is_ect(p.ecn) ? ect : not_ect)++;
      rx->on_packet(p, sim.now());
    });
    tx->start();
  }
};

}  // namespace

TEST_CASE("data is ECT0 only when both ends negotiate") {
  Pair both(true, true);
  both.sim.run_until(sim::SimTime::FromSeconds(2));
  CHECK(both.tx->state().ecn_negotiated);
  CHECK(both.ect > 0);
  CHECK(both.not_ect == 0);

  Pair refused(true, false);
  refused.sim.run_until(sim::SimTime::FromSeconds(2));
  CHECK(refused.tx->established());
  CHECK_FALSE(refused.tx->state().ecn_negotiated);
  CHECK(refused.ect == 0);
  CHECK(refused.not_ect > 0);
}

TEST_CASE("bulk transfer fills the bottleneck and recovers from losses") {
  Pair p(true, true, 30);
  p.sim.run_until(sim::SimTime::FromSeconds(10));
  const double goodput = static_cast<double>(p.rx->delivered_bytes()) * 8.0 / 10.0;
  CHECK(goodput > 0.8 * 20e6);
  CHECK(p.tx->stats().loss_reductions > 0);
  CHECK(p.rx->delivered_bytes() <= p.tx->stats().bytes_sent);
  CHECK(p.tx->state().cwnd >= 1.0);
  CHECK(p.tx->snd_una() * sim::kDataPacketBytes <= p.rx->delivered_bytes());
}
