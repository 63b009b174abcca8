#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "iaqm/config.hpp"
#include "iaqm/predictor.hpp"
#include "iaqm/sim_time.hpp"

namespace iaqm::harness {

using sim::SimTime;

/// One decision epoch. Tuner fields are -1 (or empty in CSV) on static runs.
struct EpochRow {
  int epoch_index = 0;
  int64_t observed_count = 0;
  int state = -1;
  int action = -1;
  double target_us = 0.0;
  double interval_us = 0.0;
  double throughput_bps = 0.0;
  double mrtt_us = 0.0;
  double reward = 0.0;
  std::optional<double> predicted_next;
  double occupancy_pct = 0.0;
  uint64_t drops = 0;
  uint64_t marks = 0;
  double power = 0.0;
  double cumulative_power = 0.0;
  double max_occupancy_pct = 0.0;
  bool probe_missing = false;
};

struct RunSummary {
  std::string scenario;
  std::string discipline;
  bool intelligent = false;
  uint64_t seed = 0;
  int epochs = 0;
  double normalizer = 0.0;
  double base_rtt_us = 0.0;
  double mean_occupancy_pct = 0.0;
  double max_occupancy_pct = 0.0;
  double mean_mrtt_us = 0.0;
  double mean_throughput_bps = 0.0;
  double final_cumulative_power = 0.0;
  uint64_t drops = 0;
  uint64_t marks = 0;
  int probe_missing_epochs = 0;
};

/// End-to-end ECN checks collected while the run executes.
struct AuditReport {
  uint64_t ce_packets_seen = 0;       // CE arriving downstream of the bottleneck
  uint64_t ce_on_non_ect = 0;         // CE on a packet whose flow never negotiated ECN
  uint64_t ece_acks = 0;
  uint64_t ece_echo_mismatches = 0;   // ACK ECE flag differs from the CE/CWR history
  uint64_t reductions_checked = 0;
  uint64_t reductions_within_rtt = 0; // non-timeout reductions closer than one srtt
  uint64_t negotiation_ece_seen = 0;  // SYN-ACKs carrying ECE arriving at R1
  uint64_t negotiation_ece_counted = 0;
  uint64_t overflow_drops = 0;
  uint64_t aqm_drops = 0;
  uint64_t marks = 0;
  uint64_t marks_in_flight = 0;       // marked but still on the wire at the end
  bool conservation_ok = true;

  bool clean() const;
};

struct RunOptions {
  bool audit = false;
  /// Optional fine-grained ECE binning (the re-train collection window).
  SimTime fine_bin_width = SimTime::FromMillis(1);
  SimTime fine_start;
  size_t fine_count = 0;
};

struct RunResult {
  std::vector<EpochRow> epochs;
  RunSummary summary;
  std::vector<int64_t> ece_bins;   // bin_ms bins over the whole run
  std::vector<int64_t> fine_bins;  // fine_count bins from fine_start
  AuditReport audit;
  uint64_t set_params_calls = 0;
  uint64_t events_processed = 0;
};

/// Builds the dumbbell, starts one bulk CUBIC transfer per host pair, runs
/// the monitor probes and, when cfg.intelligent, the tuning loop. The
/// intelligent loop needs a predictor; std::invalid_argument otherwise.
RunResult run_scenario(const ScenarioConfig& cfg,
                       const predictor::CongestionPredictor* predictor = nullptr,
                       const RunOptions& options = {});

/// Round-trip time of a 64 B probe over the idle monitor path.
SimTime monitor_base_rtt(const ScenarioConfig& cfg);

std::string format_double(double v);

void write_epochs_csv(std::ostream& out, const std::vector<EpochRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<RunSummary>& rows);

}  // namespace iaqm::harness
