#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "iaqm/config.hpp"
#include "iaqm/predictor.hpp"
#include "iaqm/scenario.hpp"

namespace iaqm::harness {

/// Spearman rank correlation with average ranks for ties. NaN when either
/// side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct SweepRow {
  std::string discipline;
  double target_us = 0.0;
  double interval_us = 0.0;
  double mean_mrtt_us = 0.0;
  double mean_throughput_bps = 0.0;
  int runs = 0;
};

/// Per-discipline, per-target means over cfg.sweep_seeds, each run lasting
/// cfg.sweep_duration_s with the first cfg.sweep_warmup_s excluded.
/// Interval is always 20x target.
std::vector<SweepRow> target_sweep(const ScenarioConfig& cfg,
                                   const std::vector<Discipline>& disciplines = {
                                       Discipline::kCodel, Discipline::kFqCodel});
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct CompareRow {
  std::string discipline;
  std::string arm;
  std::string seed;  // a seed, or "mean"
  double final_cumulative_power = 0.0;
  double mean_occupancy_pct = 0.0;
  double max_occupancy_pct = 0.0;
  double mean_mrtt_us = 0.0;
  double mean_throughput_bps = 0.0;
};

/// Runs two arms over cfg.compare_seeds and appends per-seed rows followed by
/// one mean row per arm.
void compare_arms(const ScenarioConfig& arm_a, const std::string& label_a,
                  const ScenarioConfig& arm_b, const std::string& label_b,
                  const std::vector<uint64_t>& seeds,
                  const predictor::CongestionPredictor* predictor,
                  std::vector<CompareRow>& out);

/// Intelligent versus static, for CoDel and FQ-CoDel, everything else equal.
std::vector<CompareRow> compare_iaqm(const ScenarioConfig& cfg,
                                     const predictor::CongestionPredictor& predictor);
void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows);

/// The configured trace file, or a synthetic bursty trace.
predictor::EceSeries training_trace(const ScenarioConfig& cfg);

struct PretrainResult {
  predictor::CongestionPredictor predictor;
  predictor::FitReport report;
};

PretrainResult pretrain_predictor(const ScenarioConfig& cfg);

/// The checkpoint named by cfg.predictor_checkpoint when present, else a
/// fresh pre-training run.
predictor::CongestionPredictor load_or_train_predictor(const ScenarioConfig& cfg);

struct RetrainDemo {
  predictor::EceSeries trace;  // fine ECE bins collected from the random scenario
  predictor::FitReport before;
  predictor::FitReport after;
  predictor::CongestionPredictor retrained;
};

/// Collects cfg.retrain_samples bins of cfg.retrain_bin_ms from the random
/// scenario starting at cfg.retrain_start_s, scores the transferred model on
/// them, then re-trains it for one epoch.
RetrainDemo retrain_demo(const ScenarioConfig& cfg, const predictor::CongestionPredictor& pretrained);

struct LabeledFit {
  std::string label;
  predictor::FitReport report;
};
void write_fit_report_csv(std::ostream& out, const std::vector<LabeledFit>& rows);

}  // namespace iaqm::harness
