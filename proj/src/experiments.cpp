#include "iaqm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace iaqm::harness {

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("spearman needs two equal-length samples of size >= 2");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = mean_of(rx);
  const double my = mean_of(ry);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

std::vector<SweepRow> target_sweep(const ScenarioConfig& cfg,
                                   const std::vector<Discipline>& disciplines) {
  std::vector<SweepRow> rows;
  for (Discipline d : disciplines) {
    for (double target : cfg.sweep_targets_us) {
      SweepRow row;
      row.discipline = to_string(d);
      row.target_us = target;
      row.interval_us = 20.0 * target;
      double mrtt = 0.0;
      double thr = 0.0;
      for (uint64_t seed : cfg.sweep_seeds) {
        ScenarioConfig c = cfg;
        c.discipline = d;
        c.intelligent = false;
        c.seed = seed;
        c.duration_s = cfg.sweep_duration_s;
        c.target_us = target;
        c.interval_us = 20.0 * target;
        const RunResult r = run_scenario(c);
        double m = 0.0;
        double t = 0.0;
        int n = 0;
        for (const auto& e : r.epochs) {
          if ((e.epoch_index + 1) * c.epoch_ms <= cfg.sweep_warmup_s * 1e3) continue;
          m += e.mrtt_us;
          t += e.throughput_bps;
          ++n;
        }
        mrtt += m / n;
        thr += t / n;
        ++row.runs;
      }
      row.mean_mrtt_us = mrtt / row.runs;
      row.mean_throughput_bps = thr / row.runs;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "discipline,target_us,interval_us,mean_mrtt_us,mean_throughput_bps,runs\n";
  for (const auto& r : rows) {
    out << r.discipline << ',' << format_double(r.target_us) << ','
        << format_double(r.interval_us) << ',' << format_double(r.mean_mrtt_us) << ','
        << format_double(r.mean_throughput_bps) << ',' << r.runs << '\n';
  }
}

void compare_arms(const ScenarioConfig& arm_a, const std::string& label_a,
                  const ScenarioConfig& arm_b, const std::string& label_b,
                  const std::vector<uint64_t>& seeds,
                  const predictor::CongestionPredictor* predictor,
                  std::vector<CompareRow>& out) {
  if (seeds.empty()) throw std::invalid_argument("compare needs at least one seed");
  for (const auto& [arm, label] : {std::pair{&arm_a, &label_a}, std::pair{&arm_b, &label_b}}) {
    CompareRow mean;
    mean.discipline = to_string(arm->discipline);
    mean.arm = *label;
    mean.seed = "mean";
    for (uint64_t seed : seeds) {
      ScenarioConfig c = *arm;
      c.seed = seed;
      const RunSummary s = run_scenario(c, predictor).summary;
      CompareRow row{mean.discipline,        *label,
                     std::to_string(seed),   s.final_cumulative_power,
                     s.mean_occupancy_pct,   s.max_occupancy_pct,
                     s.mean_mrtt_us,         s.mean_throughput_bps};
      out.push_back(row);
      mean.final_cumulative_power += row.final_cumulative_power;
      mean.mean_occupancy_pct += row.mean_occupancy_pct;
      mean.max_occupancy_pct += row.max_occupancy_pct;
      mean.mean_mrtt_us += row.mean_mrtt_us;
      mean.mean_throughput_bps += row.mean_throughput_bps;
    }
    const auto n = static_cast<double>(seeds.size());
    mean.final_cumulative_power /= n;
    mean.mean_occupancy_pct /= n;
    mean.max_occupancy_pct /= n;
    mean.mean_mrtt_us /= n;
    mean.mean_throughput_bps /= n;
    out.push_back(mean);
  }
}

std::vector<CompareRow> compare_iaqm(const ScenarioConfig& cfg,
                                     const predictor::CongestionPredictor& predictor) {
  std::vector<CompareRow> rows;
  for (Discipline d : {Discipline::kCodel, Discipline::kFqCodel}) {
    ScenarioConfig smart = cfg;
    smart.discipline = d;
    smart.intelligent = true;
    ScenarioConfig fixed = smart;
    fixed.intelligent = false;
    compare_arms(smart, "intelligent", fixed, "static", cfg.compare_seeds, &predictor, rows);
  }
  return rows;
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
  out << "discipline,arm,seed,final_cumulative_power,mean_occupancy_pct,max_occupancy_pct,"
         "mean_mrtt_us,mean_throughput_bps\n";
  for (const auto& r : rows) {
    out << r.discipline << ',' << r.arm << ',' << r.seed << ','
        << format_double(r.final_cumulative_power) << ',' << format_double(r.mean_occupancy_pct)
        << ',' << format_double(r.max_occupancy_pct) << ',' << format_double(r.mean_mrtt_us)
        << ',' << format_double(r.mean_throughput_bps) << '\n';
  }
}

predictor::EceSeries training_trace(const ScenarioConfig& cfg) {
  if (!cfg.trace_file.empty()) return predictor::read_trace_csv(cfg.trace_file);
  predictor::SynthParams p;
  p.p_on = cfg.synth_p_on;
  p.mean_on_run = cfg.synth_mean_on_run;
  p.lambda = cfg.synth_lambda;
  return predictor::synth_trace(cfg.seed, static_cast<size_t>(cfg.synth_length), p);
}

PretrainResult pretrain_predictor(const ScenarioConfig& cfg) {
  const auto trace = training_trace(cfg);
  predictor::CongestionPredictor model(
      predictor::PredictorConfig::for_samples(static_cast<int>(trace.size()), cfg.seed));
  auto report = model.pretrain(trace, cfg.predictor_epochs);
  return {std::move(model), std::move(report)};
}

predictor::CongestionPredictor load_or_train_predictor(const ScenarioConfig& cfg) {
  if (!cfg.predictor_checkpoint.empty() && std::filesystem::exists(cfg.predictor_checkpoint)) {
    return predictor::CongestionPredictor::load(std::filesystem::path(cfg.predictor_checkpoint));
  }
  return pretrain_predictor(cfg).predictor;
}

RetrainDemo retrain_demo(const ScenarioConfig& cfg,
                         const predictor::CongestionPredictor& pretrained) {
  ScenarioConfig c = cfg;
  c.scenario = ScenarioKind::kRandom;
  c.intelligent = false;
  const SimTime width = SimTime::FromSecondsF(cfg.retrain_bin_ms / 1e3);
  const SimTime start = SimTime::FromSecondsF(cfg.retrain_start_s);
  const SimTime end = start + width * cfg.retrain_samples;
  c.duration_s = static_cast<int>(std::ceil(end.seconds())) + 1;

  RunOptions opts;
  opts.fine_bin_width = width;
  opts.fine_start = start;
  opts.fine_count = static_cast<size_t>(cfg.retrain_samples);
  RunResult run = run_scenario(c, nullptr, opts);

  predictor::EceSeries trace;
  trace.interval_width = width;
  trace.counts = std::move(run.fine_bins);

  RetrainDemo demo{trace, pretrained.evaluate(trace), {}, pretrained};
  demo.after = demo.retrained.retrain_one_epoch(trace);
  return demo;
}

void write_fit_report_csv(std::ostream& out, const std::vector<LabeledFit>& rows) {
  out << "label,rmse_train,rmse_test,mae_train,mae_test,epochs,split,train_rows,test_rows,"
         "wall_seconds\n";
  for (const auto& [label, r] : rows) {
    out << label << ',' << format_double(r.rmse_train) << ',' << format_double(r.rmse_test) << ','
        << format_double(r.mae_train) << ',' << format_double(r.mae_test) << ',' << r.epochs << ','
        << format_double(r.split) << ',' << r.train_rows << ',' << r.test_rows << ','
        << format_double(r.wall_seconds) << '\n';
  }
}

}  // namespace iaqm::harness
