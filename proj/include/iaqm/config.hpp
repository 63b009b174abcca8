#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace iaqm::harness {

enum class Discipline { kTailDrop, kCodel, kFqCodel };
enum class ScenarioKind { kFixed, kRandom };

std::string to_string(Discipline d);
Discipline parse_discipline(const std::string& s);

/// Every knob of a run. Defaults reproduce the fixed dumbbell: hosts B
/// 200 Mbps / 20 ms to R1, R1-R2 20 Mbps / 0 ms, R2 to hosts A
/// 100 Mbps / 0 ms, FQ-CoDel with ECN at 5 ms / 100 ms.
struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::kFixed;
  Discipline discipline = Discipline::kFqCodel;
  bool ecn = true;
  bool intelligent = false;
  int duration_s = 300;
  uint64_t seed = 1;

  int hosts_per_side = 20;
  double access_bw_mbps = 200.0;
  double access_delay_ms = 20.0;
  double bottleneck_bw_mbps = 20.0;
  double bottleneck_delay_ms = 0.0;
  double receiver_bw_mbps = 100.0;
  double receiver_delay_ms = 0.0;
  double start_jitter_ms = 100.0;

  double random_bw_min_mbps = 50.0;
  double random_bw_max_mbps = 200.0;
  double random_delay_min_ms = 1.0;
  double random_delay_max_ms = 20.0;
  double random_start_max_s = 10.0;
  double random_bottleneck_bw_mbps = 10.0;

  double target_us = 5000.0;
  double interval_us = 100000.0;
  int hard_limit_pkts = 1000;
  bool tcp_friendly = false;

  double alpha = 0.5;
  double gamma = 0.8;
  double epsilon = 0.5;
  double epoch_ms = 1000.0;
  double bin_ms = 100.0;
  int probes_per_epoch = 10;

  int predictor_epochs = 100;
  std::string predictor_checkpoint;
  std::string trace_file;
  int synth_length = 6000;
  double synth_p_on = 0.4;
  double synth_mean_on_run = 20.0;
  double synth_lambda = 20.0;

  int retrain_samples = 6000;
  double retrain_bin_ms = 1.0;
  double retrain_start_s = 10.0;

  std::vector<double> sweep_targets_us{50, 500, 1000, 2000, 4000, 6000};
  std::vector<uint64_t> sweep_seeds{1, 2, 3};
  int sweep_duration_s = 60;
  double sweep_warmup_s = 5.0;
  std::vector<uint64_t> compare_seeds{1, 2, 3, 4, 5};

  std::string out_dir = "out";

  /// Throws std::invalid_argument naming the offending key.
  void validate() const;
};

/// Applies one `key = value` assignment. Unknown keys and unparsable values
/// throw std::invalid_argument.
void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines; '#' starts a comment; blank lines ignored.
ScenarioConfig parse_config(std::istream& in, ScenarioConfig base = {});
ScenarioConfig load_config(const std::filesystem::path& path, ScenarioConfig base = {});

/// Renders the config back as `key = value` lines (all keys).
std::string dump_config(const ScenarioConfig& cfg);

/// Documented key names, in dump order.
std::vector<std::string> config_keys();

}  // namespace iaqm::harness
