#include "iaqm/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "iaqm/codel.hpp"
#include "iaqm/fq_codel.hpp"
#include "iaqm/network.hpp"
#include "iaqm/rng.hpp"
#include "iaqm/tcp.hpp"
#include "iaqm/tuner.hpp"

namespace iaqm::harness {

using sim::FlowId;
using sim::LinkConfig;
using sim::NodeId;
using sim::Packet;

bool AuditReport::clean() const {
  return ce_on_non_ect == 0 && ece_echo_mismatches == 0 && reductions_within_rtt == 0 &&
         negotiation_ece_counted == 0 && conservation_ok &&
         ce_packets_seen + marks_in_flight == marks;
}

namespace {

LinkConfig make_link(double mbps, double delay_ms) {
  return LinkConfig{static_cast<uint64_t>(std::llround(mbps * 1e6)),
                    SimTime::FromSecondsF(delay_ms / 1e3)};
}

LinkConfig monitor_b_link(const ScenarioConfig& cfg) {
  return make_link(cfg.access_bw_mbps, cfg.access_delay_ms);
}
LinkConfig monitor_a_link(const ScenarioConfig& cfg) {
  return make_link(cfg.receiver_bw_mbps, cfg.receiver_delay_ms);
}
LinkConfig bottleneck_link(const ScenarioConfig& cfg) {
  const double bw = cfg.scenario == ScenarioKind::kFixed ? cfg.bottleneck_bw_mbps
                                                         : cfg.random_bottleneck_bw_mbps;
  return make_link(bw, cfg.bottleneck_delay_ms);
}

std::unique_ptr<aqm::QueueDisc> make_disc(const ScenarioConfig& cfg) {
  aqm::AqmParams p;
  p.target = SimTime::FromSecondsF(cfg.target_us / 1e6);
  p.interval = SimTime::FromSecondsF(cfg.interval_us / 1e6);
  p.hard_limit = static_cast<uint32_t>(cfg.hard_limit_pkts);
  p.ecn_enabled = cfg.ecn;
  switch (cfg.discipline) {
    case Discipline::kTailDrop:
      return std::make_unique<aqm::TailDrop>(p.hard_limit);
    case Discipline::kCodel:
      return std::make_unique<aqm::Codel>(p);
    case Discipline::kFqCodel:
      return std::make_unique<aqm::FqCodel>(p, sim::derive_seed(cfg.seed, "fq_hash"));
  }
  throw std::logic_error("unknown discipline");
}

// Probe flow identity; protocol 17 keeps it apart from every TCP tuple.
constexpr uint16_t kProbePort = 7;
constexpr uint8_t kProbeProtocol = 17;

class Scenario {
 public:
  Scenario(const ScenarioConfig& cfg, const predictor::CongestionPredictor* predictor,
           const RunOptions& opts)
      : cfg_(cfg), predictor_(predictor), opts_(opts), net_(sim_) {}

  RunResult run();

 private:
  void build();
  void start_flows();
  void schedule_probes(int epoch);
  void sample_occupancy();
  void begin_epoch(int epoch);
  void end_epoch(int epoch);
  void on_r1_arrival(const Packet& pkt, NodeId from);
  void on_r2_arrival(const Packet& pkt, NodeId from);
  void finish_audit();
  int64_t last_bin_count(int epoch) const;
  std::vector<double> last_bins(int epoch, int n) const;

  const ScenarioConfig& cfg_;
  const predictor::CongestionPredictor* predictor_;
  RunOptions opts_;
  sim::Simulator sim_;
  sim::Network net_;
  sim::Dumbbell bell_;

  std::vector<std::unique_ptr<tcp::TcpSender>> senders_;
  std::vector<std::unique_ptr<tcp::TcpReceiver>> receivers_;
  std::vector<bool> shadow_ece_;          // audit: expected ECE state per receiver
  std::vector<SimTime> allowed_reduction_;
  std::vector<uint64_t> seen_timeouts_;

  SimTime epoch_len_;
  SimTime bin_len_;
  int epochs_ = 0;
  double normalizer_ = 0.0;
  SimTime base_rtt_;

  std::vector<int64_t> bins_;
  std::vector<int64_t> fine_bins_;

  // Per-epoch accumulators.
  std::vector<double> probe_sum_us_;
  std::vector<int> probe_count_;
  double occ_sum_ = 0.0;
  double occ_max_ = 0.0;
  uint64_t occ_samples_ = 0;
  double occ_total_sum_ = 0.0;
  uint64_t occ_total_samples_ = 0;
  double occ_total_max_ = 0.0;
  uint64_t delivered_at_start_ = 0;
  uint64_t drops_at_start_ = 0;
  uint64_t marks_at_start_ = 0;
  double last_mrtt_us_ = 0.0;
  double cumulative_power_ = 0.0;

  std::unique_ptr<tuner::Agent> agent_;
  tuner::Agent::Decision decision_;
  int64_t observed_ = 0;
  double target_us_ = 0.0;
  double interval_us_ = 0.0;

  RunResult result_;
};

void Scenario::build() {
  sim::DumbbellSpec spec;
  const int n = cfg_.hosts_per_side;
  if (cfg_.scenario == ScenarioKind::kFixed) {
    spec.b_links.assign(n, make_link(cfg_.access_bw_mbps, cfg_.access_delay_ms));
    spec.a_links.assign(n, make_link(cfg_.receiver_bw_mbps, cfg_.receiver_delay_ms));
  } else {
    sim::RandomStream topo(cfg_.seed, "topology");
    auto draw = [&] {
      return make_link(topo.uniform(cfg_.random_bw_min_mbps, cfg_.random_bw_max_mbps),
                       topo.uniform(cfg_.random_delay_min_ms, cfg_.random_delay_max_ms));
    };
    for (int i = 0; i < n; ++i) spec.b_links.push_back(draw());
    for (int i = 0; i < n; ++i) spec.a_links.push_back(draw());
  }
  spec.bottleneck = bottleneck_link(cfg_);
  spec.monitor_b_link = monitor_b_link(cfg_);
  spec.monitor_a_link = monitor_a_link(cfg_);
  spec.router_hard_limit = static_cast<uint32_t>(cfg_.hard_limit_pkts);
  bell_ = sim::build_dumbbell(net_, spec, make_disc(cfg_));

  net_.add_observer(bell_.r1, [this](const Packet& p, NodeId from) { on_r1_arrival(p, from); });
  if (opts_.audit) {
    net_.add_observer(bell_.r2, [this](const Packet& p, NodeId from) { on_r2_arrival(p, from); });
  }

  tcp::TcpSender::Options topts;
  topts.ecn_capable = cfg_.ecn;
  topts.tcp_friendly = cfg_.tcp_friendly;
  shadow_ece_.assign(n, false);
  allowed_reduction_.assign(n, SimTime{});
  seen_timeouts_.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const NodeId b = bell_.hosts_b[i];
    const NodeId a = bell_.hosts_a[i];
    const FlowId flow{b, a, static_cast<uint16_t>(10000 + i), 5001, 6};
    senders_.push_back(std::make_unique<tcp::TcpSender>(
        sim_, flow, topts, [this, b](Packet p) { net_.send_from(b, std::move(p)); }));
    tcp::TcpSender* sender = senders_.back().get();
    net_.set_handler(b, [sender](Packet&& p) { sender->on_packet(p); });

    receivers_.push_back(std::make_unique<tcp::TcpReceiver>(cfg_.ecn, [this, a, i](Packet p) {
      if (opts_.audit && !p.has(sim::tcp_flag::kSyn)) {
        if (p.has(sim::tcp_flag::kEce)) ++result_.audit.ece_acks;
        if (p.has(sim::tcp_flag::kEce) != shadow_ece_[i]) ++result_.audit.ece_echo_mismatches;
      }
      net_.send_from(a, std::move(p));
    }));
    tcp::TcpReceiver* receiver = receivers_.back().get();
    net_.set_handler(a, [this, receiver, i](Packet&& p) {
      if (opts_.audit && !p.has(sim::tcp_flag::kSyn) && p.size_bytes == sim::kDataPacketBytes &&
          receiver->state().ecn_negotiated) {
        if (p.has(sim::tcp_flag::kCwr)) shadow_ece_[i] = false;
        if (p.ecn == sim::Ecn::kCe) shadow_ece_[i] = true;
      }
      receiver->on_packet(p, sim_.now());
    });

    if (opts_.audit) {
      sender->on_reduction = [this, sender, i](const tcp::ConnectionState& st, SimTime now) {
        const uint64_t timeouts = sender->stats().timeouts;
        const bool by_timeout = timeouts != seen_timeouts_[i];
        seen_timeouts_[i] = timeouts;
        if (!by_timeout) {
          ++result_.audit.reductions_checked;
          if (now < allowed_reduction_[i]) ++result_.audit.reductions_within_rtt;
        }
        allowed_reduction_[i] = st.cwr_until;
      };
    }
  }

  // Monitor pair: B side originates, A side reflects.
  net_.set_handler(bell_.monitor_a, [this](Packet&& p) {
    Packet r;
    r.flow = p.flow.reversed();
    r.size_bytes = sim::kControlPacketBytes;
    r.ecn = sim::Ecn::kNotEct;
    r.is_probe = true;
    r.sent_at = sim_.now();
    r.echo_ts = p.sent_at;
    net_.send_from(bell_.monitor_a, std::move(r));
  });
  net_.set_handler(bell_.monitor_b, [this](Packet&& p) {
    const SimTime now = sim_.now();
    const auto epoch = static_cast<int>(now.nanos() / epoch_len_.nanos());
    if (epoch >= epochs_) return;
    probe_sum_us_[epoch] += (now - p.echo_ts).micros();
    ++probe_count_[epoch];
  });
}

void Scenario::on_r1_arrival(const Packet& p, NodeId from) {
  if (from != bell_.r2) return;
  if (opts_.audit && p.has(sim::tcp_flag::kSyn) && p.has(sim::tcp_flag::kEce)) {
    ++result_.audit.negotiation_ece_seen;
    if (p.counts_as_ece()) ++result_.audit.negotiation_ece_counted;
  }
  if (!p.counts_as_ece()) return;
  const SimTime now = sim_.now();
  const auto bin = static_cast<size_t>(now.nanos() / bin_len_.nanos());
  if (bin < bins_.size()) ++bins_[bin];
  if (opts_.fine_count > 0 && now >= opts_.fine_start) {
    const auto fine =
        static_cast<size_t>((now - opts_.fine_start).nanos() / opts_.fine_bin_width.nanos());
    if (fine < fine_bins_.size()) ++fine_bins_[fine];
  }
}

void Scenario::on_r2_arrival(const Packet& p, NodeId from) {
  if (from != bell_.r1 || p.ecn != sim::Ecn::kCe) return;
  ++result_.audit.ce_packets_seen;
  bool negotiated = false;
  for (const auto& s : senders_) {
    if (s->flow() == p.flow) negotiated = s->state().ecn_negotiated;
  }
  if (!negotiated || p.size_bytes != sim::kDataPacketBytes) ++result_.audit.ce_on_non_ect;
}

void Scenario::start_flows() {
  sim::RandomStream starts(cfg_.seed, "flow_starts");
  for (auto& s : senders_) {
    const double at_s = cfg_.scenario == ScenarioKind::kFixed
                            ? starts.uniform(0.0, cfg_.start_jitter_ms / 1e3)
                            : starts.uniform(0.0, cfg_.random_start_max_s);
    tcp::TcpSender* sender = s.get();
    sim_.at(SimTime::FromSecondsF(at_s), [sender] { sender->start(); });
  }
}

void Scenario::schedule_probes(int epoch) {
  const int n = cfg_.probes_per_epoch;
  const SimTime begin = epoch_len_ * epoch;
  for (int j = 0; j < n; ++j) {
    const SimTime at = begin + SimTime::FromNanos(epoch_len_.nanos() * (2 * j + 1) / (2 * n));
    sim_.at(at, [this] {
      Packet p;
      p.flow = FlowId{bell_.monitor_b, bell_.monitor_a, kProbePort, kProbePort, kProbeProtocol};
      p.size_bytes = sim::kControlPacketBytes;
      p.ecn = sim::Ecn::kNotEct;
      p.is_probe = true;
      p.sent_at = sim_.now();
      net_.send_from(bell_.monitor_b, std::move(p));
    });
  }
}

void Scenario::sample_occupancy() {
  const double occ = bell_.bottleneck->disc().occupancy();
  occ_sum_ += occ;
  occ_max_ = std::max(occ_max_, occ);
  ++occ_samples_;
  occ_total_sum_ += occ;
  occ_total_max_ = std::max(occ_total_max_, occ);
  ++occ_total_samples_;
  const SimTime next = sim_.now() + SimTime::FromMillis(1);
  if (next < epoch_len_ * epochs_) sim_.at(next, [this] { sample_occupancy(); });
}

int64_t Scenario::last_bin_count(int epoch) const {
  // Most recent complete bin before the start of `epoch`.
  const int64_t end_bin = (epoch_len_ * epoch).nanos() / bin_len_.nanos();
  return end_bin > 0 ? bins_[end_bin - 1] : 0;
}

std::vector<double> Scenario::last_bins(int epoch, int n) const {
  // The n bins ending at the close of `epoch`; zeros before time 0.
  const int64_t end_bin = (epoch_len_ * (epoch + 1)).nanos() / bin_len_.nanos();
  std::vector<double> out;
  for (int64_t b = end_bin - n; b < end_bin; ++b) {
    out.push_back(b >= 0 ? static_cast<double>(bins_[b]) : 0.0);
  }
  return out;
}

void Scenario::begin_epoch(int epoch) {
  schedule_probes(epoch);
  if (!agent_) return;
  observed_ = last_bin_count(epoch);
  decision_ = agent_->decide(static_cast<double>(observed_));
  bell_.bottleneck->disc().set_params(decision_.setting.target, decision_.setting.interval);
  ++result_.set_params_calls;
  target_us_ = decision_.setting.target.micros();
  interval_us_ = decision_.setting.interval.micros();
}

void Scenario::end_epoch(int epoch) {
  const auto& stats = bell_.bottleneck->disc().stats();
  uint64_t delivered = 0;
  for (const auto& r : receivers_) delivered += r->delivered_bytes();

  EpochRow row;
  row.epoch_index = epoch;
  row.target_us = target_us_;
  row.interval_us = interval_us_;
  row.throughput_bps =
      static_cast<double>(delivered - delivered_at_start_) * 8.0 / epoch_len_.seconds();
  if (probe_count_[epoch] > 0) {
    last_mrtt_us_ = probe_sum_us_[epoch] / probe_count_[epoch];
  } else {
    row.probe_missing = true;
  }
  row.mrtt_us = last_mrtt_us_;
  row.power = tuner::power_reward({row.throughput_bps, row.mrtt_us / 1e6}, normalizer_);
  row.reward = row.power;
  cumulative_power_ += row.power;
  row.cumulative_power = cumulative_power_;
  row.occupancy_pct = occ_samples_ > 0 ? occ_sum_ / static_cast<double>(occ_samples_) : 0.0;
  row.max_occupancy_pct = occ_max_;
  row.drops = stats.drops() - drops_at_start_;
  row.marks = stats.marked - marks_at_start_;

  if (agent_) {
    row.observed_count = observed_;
    row.state = decision_.state;
    row.action = decision_.action;
    const auto window = last_bins(epoch, predictor_->config().shape.steps);
    const double predicted = predictor_->predict_next(window);
    row.predicted_next = predicted;
    agent_->learn(decision_, row.reward, predicted);
  } else {
    row.observed_count = last_bin_count(epoch);
  }
  result_.epochs.push_back(row);

  delivered_at_start_ = delivered;
  drops_at_start_ = stats.drops();
  marks_at_start_ = stats.marked;
  occ_sum_ = 0.0;
  occ_max_ = 0.0;
  occ_samples_ = 0;
}

void Scenario::finish_audit() {
  auto& a = result_.audit;
  const auto& disc = bell_.bottleneck->disc();
  const auto& st = disc.stats();
  a.overflow_drops = st.overflow_drops;
  a.aqm_drops = st.aqm_drops;
  a.marks = st.marked;
  a.marks_in_flight = st.marked - a.ce_packets_seen;
  a.conservation_ok = st.arrivals == st.forwarded + st.marked + st.drops() + disc.queued_packets() &&
                      a.ce_packets_seen <= st.marked &&
                      st.marked - a.ce_packets_seen <= bell_.bottleneck->in_flight();
}

RunResult Scenario::run() {
  cfg_.validate();
  if (cfg_.intelligent && predictor_ == nullptr) {
    throw std::invalid_argument("intelligent run needs a predictor");
  }
  epoch_len_ = SimTime::FromSecondsF(cfg_.epoch_ms / 1e3);
  bin_len_ = SimTime::FromSecondsF(cfg_.bin_ms / 1e3);
  const SimTime duration = SimTime::FromSeconds(cfg_.duration_s);
  epochs_ = static_cast<int>(duration.nanos() / epoch_len_.nanos());
  if (epochs_ < 1) throw std::invalid_argument("duration shorter than one epoch");
  bins_.assign(static_cast<size_t>(duration.nanos() / bin_len_.nanos()) + 1, 0);
  fine_bins_.assign(opts_.fine_count, 0);
  probe_sum_us_.assign(epochs_, 0.0);
  probe_count_.assign(epochs_, 0);

  build();
  base_rtt_ = monitor_base_rtt(cfg_);
  normalizer_ = static_cast<double>(bell_.bottleneck->config().bandwidth_bps) / base_rtt_.seconds();
  last_mrtt_us_ = base_rtt_.micros();
  target_us_ = cfg_.target_us;
  interval_us_ = cfg_.interval_us;

  if (cfg_.intelligent) {
    tuner::TunerConfig tc;
    tc.alpha = cfg_.alpha;
    tc.gamma = cfg_.gamma;
    tc.epsilon = cfg_.epsilon;
    tc.epoch = epoch_len_;
    agent_ = std::make_unique<tuner::Agent>(tc, cfg_.seed);
  }

  start_flows();
  sim_.at(SimTime{}, [this] {
    begin_epoch(0);
    sample_occupancy();
  });
  for (int k = 0; k < epochs_; ++k) {
    sim_.at(epoch_len_ * (k + 1), [this, k] {
      end_epoch(k);
      if (k + 1 < epochs_) begin_epoch(k + 1);
    });
  }
  sim_.run_until(epoch_len_ * epochs_);

  if (opts_.audit) finish_audit();

  RunSummary& s = result_.summary;
  s.scenario = cfg_.scenario == ScenarioKind::kFixed ? "fixed" : "random";
  s.discipline = to_string(cfg_.discipline);
  s.intelligent = cfg_.intelligent;
  s.seed = cfg_.seed;
  s.epochs = epochs_;
  s.normalizer = normalizer_;
  s.base_rtt_us = base_rtt_.micros();
  s.mean_occupancy_pct =
      occ_total_samples_ > 0 ? occ_total_sum_ / static_cast<double>(occ_total_samples_) : 0.0;
  s.max_occupancy_pct = occ_total_max_;
  double mrtt = 0.0;
  double thr = 0.0;
  for (const auto& r : result_.epochs) {
    mrtt += r.mrtt_us;
    thr += r.throughput_bps;
    s.drops += r.drops;
    s.marks += r.marks;
    if (r.probe_missing) ++s.probe_missing_epochs;
  }
  s.mean_mrtt_us = mrtt / epochs_;
  s.mean_throughput_bps = thr / epochs_;
  s.final_cumulative_power = cumulative_power_;

  result_.ece_bins = bins_;
  result_.ece_bins.resize(static_cast<size_t>(duration.nanos() / bin_len_.nanos()));
  result_.fine_bins = fine_bins_;
  result_.events_processed = sim_.processed();
  return std::move(result_);
}

}  // namespace

SimTime monitor_base_rtt(const ScenarioConfig& cfg) {
  Packet probe;
  probe.size_bytes = sim::kControlPacketBytes;
  const SimTime one_way = sim::transmit_delay(probe, monitor_b_link(cfg)) +
                          sim::transmit_delay(probe, bottleneck_link(cfg)) +
                          sim::transmit_delay(probe, monitor_a_link(cfg));
  return one_way * 2;
}

RunResult run_scenario(const ScenarioConfig& cfg, const predictor::CongestionPredictor* predictor,
                       const RunOptions& options) {
  Scenario s(cfg, predictor, options);
  return s.run();
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

void write_epochs_csv(std::ostream& out, const std::vector<EpochRow>& rows) {
  out << "epoch_index,observed_count,state,action,target_us,interval_us,throughput_bps,"
         "mrtt_us,reward,predicted_next,occupancy_pct,drops,marks,power,cumulative_power,"
         "max_occupancy_pct,probe_missing\n";
  for (const auto& r : rows) {
    out << r.epoch_index << ',' << r.observed_count << ',';
    if (r.state >= 0) out << r.state;
    out << ',';
    if (r.action >= 0) out << r.action;
    out << ',' << format_double(r.target_us) << ',' << format_double(r.interval_us) << ','
        << format_double(r.throughput_bps) << ',' << format_double(r.mrtt_us) << ','
        << format_double(r.reward) << ',';
    if (r.predicted_next) out << format_double(*r.predicted_next);
    out << ',' << format_double(r.occupancy_pct) << ',' << r.drops << ',' << r.marks << ','
        << format_double(r.power) << ',' << format_double(r.cumulative_power) << ','
        << format_double(r.max_occupancy_pct) << ',' << (r.probe_missing ? 1 : 0) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<RunSummary>& rows) {
  out << "scenario,discipline,intelligent,seed,epochs,normalizer,base_rtt_us,"
         "mean_occupancy_pct,max_occupancy_pct,mean_mrtt_us,mean_throughput_bps,"
         "final_cumulative_power,drops,marks,probe_missing_epochs\n";
  for (const auto& s : rows) {
    out << s.scenario << ',' << s.discipline << ',' << (s.intelligent ? 1 : 0) << ',' << s.seed
        << ',' << s.epochs << ',' << format_double(s.normalizer) << ','
        << format_double(s.base_rtt_us) << ',' << format_double(s.mean_occupancy_pct) << ','
        << format_double(s.max_occupancy_pct) << ',' << format_double(s.mean_mrtt_us) << ','
        << format_double(s.mean_throughput_bps) << ',' << format_double(s.final_cumulative_power)
        << ',' << s.drops << ',' << s.marks << ',' << s.probe_missing_epochs << '\n';
  }
}

}  // namespace iaqm::harness
