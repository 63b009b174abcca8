// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
//
//   acceptance [--known-fail ID,ID,...]
//
// Exit status is the number of failing checks not listed with --known-fail.
// The same lines are written to acceptance_report.txt in the working directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "codel_trace.hpp"
#include "gradcheck.hpp"
#include "toy_mdp.hpp"
#include "iaqm/config.hpp"
#include "iaqm/experiments.hpp"
#include "iaqm/lstm.hpp"
#include "iaqm/scenario.hpp"
#include "iaqm/series.hpp"
#include "iaqm/tuner.hpp"

using namespace iaqm;
using harness::Discipline;

namespace {

// Tolerances.
constexpr int kExpectedNeurons = 30;
constexpr int kWindowSeries = 100;
constexpr double kQArithmeticTol = 1e-12;
constexpr int kBoundUpdates = 100000;
constexpr double kToyTol = 1e-2;
constexpr long kToyIterations = 100000;
constexpr int kGradPoints = 24;
constexpr double kGradTol = 1e-4;
constexpr double kMrttRho = 0.8;
constexpr double kThroughputRho = -0.5;
constexpr double kPretrainRmse = 0.15;
constexpr double kRetrainRatio = 2.0;
constexpr double kRetrainSeconds = 10.0;

// Runtime budgets in seconds.
constexpr double kBudgetFast = 1.0;
constexpr double kBudgetToy = 5.0;
constexpr double kBudgetGrad = 10.0;
constexpr double kBudgetEcn = 30.0;
constexpr double kBudgetSweep = 600.0;
constexpr double kBudgetCompare = 1200.0;
constexpr double kBudgetPredictor = 300.0;
constexpr double kBudgetDeterminism = 60.0;

struct Line {
  std::string id;
  bool pass = false;
  std::string detail;
};

std::vector<Line> lines;

void report(const std::string& id, bool pass, const std::string& detail) {
  lines.push_back({id, pass, detail});
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << detail << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void sizing() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = predictor::neurons_per_layer(10, 6000, 3);
  const double s = seconds_since(t0);
  report("1", n == kExpectedNeurons && s < 1e-3,
         fmt("neurons_per_layer(10, 6000, 3) = %d (expect %d), %.2e s", n, kExpectedNeurons, s));
}

void windowing() {
  const auto t0 = std::chrono::steady_clock::now();
  sim::RandomStream rng(101);
  long pairs = 0;
  long mismatches = 0;
  for (int k = 0; k < kWindowSeries; ++k) {
    const int steps = static_cast<int>(rng.uniform_int(1, 12));
    const auto len = static_cast<size_t>(rng.uniform_int(steps + 1, 300));
    std::vector<double> series(len);
    for (auto& v : series) v = static_cast<double>(rng.uniform_int(0, 1000));
    const auto w = predictor::build_windows(series, steps);
    const auto rows = static_cast<Eigen::Index>(len) - steps;
    if (w.rows() != rows || w.steps() != steps) {
      ++mismatches;
      continue;
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      const std::vector<double> slice(series.begin() + r, series.begin() + r + steps);
      bool same = series[static_cast<size_t>(r + steps)] == w.y(r);
      for (int c = 0; c < steps; ++c) same = same && slice[static_cast<size_t>(c)] == w.x(r, c);
      mismatches += !same;
      ++pairs;
    }
  }
  const double s = seconds_since(t0);
  report("2", mismatches == 0 && s < kBudgetFast,
         fmt("%d series, %ld (X row, y) pairs, %ld mismatches, %.3f s", kWindowSeries, pairs,
             mismatches, s));
}

void q_arithmetic() {
  const auto t0 = std::chrono::steady_clock::now();
  tuner::QTable q;
  tuner::q_update(q, 0, 0, 1.0, 0, 0.5, 0.8);
  const double first = q.at(0, 0);
  tuner::q_update(q, 0, 0, 1.0, 0, 0.5, 0.8);
  const double second = q.at(0, 0);
  const bool hand = std::abs(first - 0.5) <= kQArithmeticTol &&
                    std::abs(second - 0.95) <= kQArithmeticTol;

  tuner::QTable b;
  sim::RandomStream rng(303);
  double worst = 0.0;
  for (int i = 0; i < kBoundUpdates; ++i) {
    const int state = static_cast<int>(rng.uniform_int(0, 99));
    const int action = static_cast<int>(rng.uniform_int(0, 99));
    const double r = rng.uniform();
    tuner::q_update(b, state, action, r, static_cast<int>(rng.uniform_int(0, 99)), 0.5, 0.8);
    // Only the updated entry changes, so tracking it bounds every step.
    worst = std::max(worst, std::abs(b.at(state, action)));
  }
  worst = std::max(worst, b.max_abs());
  const double bound = 1.0 / (1.0 - 0.8);
  const double s = seconds_since(t0);
  report("3", hand && worst <= bound && s < kBudgetFast,
         fmt("0 -> %.15g -> %.15g; max |Q| %.6f <= %.6f over %d updates, %.3f s", first, second,
             worst, bound, kBoundUpdates, s));
}

void toy_mdp_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = toy_mdp::q_learn(0.8, kToyIterations, kToyTol, 404);
  const double s = seconds_since(t0);
  report("4", r.error <= kToyTol && r.iterations_to_tolerance > 0 && s < kBudgetToy,
         fmt("max-norm error %.2e after %ld iterations, tolerance first met at %ld, %.3f s",
             r.error, kToyIterations, r.iterations_to_tolerance, s));
}

void gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const double worst = gradcheck::worst_over_points(kGradPoints, 505);
  const double s = seconds_since(t0);
  report("5", worst < kGradTol && s < kBudgetGrad,
         fmt("worst relative error %.2e over %d points (< %.0e), %.3f s", worst, kGradPoints,
             kGradTol, s));
}

void codel_control_law() {
  const auto t0 = std::chrono::steady_clock::now();
  const int64_t first_above = 8'000'000;
  const int64_t interval = 100'000'000;
  const auto expect = codel_trace::oracle_times(first_above, interval, 5);
  aqm::Codel q;
  const auto got = codel_trace::run(aqm::SimTime::FromMillis(8), aqm::SimTime::FromMillis(8),
                                    aqm::SimTime::FromNanos(expect.back()), expect, q);
  bool ok = got.size() == expect.size();
  for (size_t i = 0; ok && i < expect.size(); ++i) {
    ok = got[i].at.nanos() == expect[i] && got[i].count == i + 1;
  }
  ok = ok && got[0].at.nanos() == first_above + interval;
  const int64_t gap4 = ok ? (got[4].at - got[3].at).nanos() : -1;
  ok = ok && gap4 == 50'000'000;
  const double s = seconds_since(t0);
  report("6", ok && s < kBudgetFast,
         fmt("%zu actions, first at %lld ns (expect %lld), count-4 gap %lld ns (expect 50000000), "
             "%.3f s",
             got.size(), got.empty() ? -1LL : static_cast<long long>(got[0].at.nanos()),
             static_cast<long long>(first_above + interval), static_cast<long long>(gap4), s));
}

void ecn_semantics() {
  const auto t0 = std::chrono::steady_clock::now();
  harness::RunOptions audit;
  audit.audit = true;

  struct Case {
    const char* name;
    Discipline d;
    int limit;
  };
  harness::AuditReport total;
  bool ok = true;
  uint64_t overflow_in_small_limit = 0;
  for (const Case c : {Case{"codel", Discipline::kCodel, 1000},
                       Case{"fq_codel", Discipline::kFqCodel, 1000},
                       Case{"codel-limit-40", Discipline::kCodel, 40}}) {
    harness::ScenarioConfig cfg;
    cfg.duration_s = 30;
    cfg.discipline = c.d;
    cfg.hard_limit_pkts = c.limit;
    const auto a = harness::run_scenario(cfg, nullptr, audit).audit;
    ok = ok && a.clean();
    if (c.limit == 40) overflow_in_small_limit = a.overflow_drops;
    total.ce_packets_seen += a.ce_packets_seen;
    total.ce_on_non_ect += a.ce_on_non_ect;
    total.ece_acks += a.ece_acks;
    total.ece_echo_mismatches += a.ece_echo_mismatches;
    total.reductions_checked += a.reductions_checked;
    total.reductions_within_rtt += a.reductions_within_rtt;
    total.negotiation_ece_seen += a.negotiation_ece_seen;
    total.negotiation_ece_counted += a.negotiation_ece_counted;
    total.overflow_drops += a.overflow_drops;
  }
  harness::ScenarioConfig tail;
  tail.duration_s = 30;
  tail.discipline = Discipline::kTailDrop;
  tail.hard_limit_pkts = 40;
  const auto t = harness::run_scenario(tail, nullptr, audit).audit;
  ok = ok && t.clean() && t.marks == 0 && t.overflow_drops > 0 && t.ce_packets_seen == 0;

  // The checks must have had something to look at.
  ok = ok && total.ce_packets_seen > 0 && total.ece_acks > 0 && total.reductions_checked > 0 &&
       total.negotiation_ece_seen > 0 && overflow_in_small_limit > 0;
  const double s = seconds_since(t0);
  report("7", ok && s < kBudgetEcn,
         fmt("CE seen %llu (on non-ECT %llu); ECE acks %llu (echo mismatches %llu); "
             "reductions %llu (within one RTT %llu); SYN ECE %llu (counted %llu); "
             "overflow drops %llu + tail-drop %llu with %llu marks; %.1f s",
             (unsigned long long)total.ce_packets_seen, (unsigned long long)total.ce_on_non_ect,
             (unsigned long long)total.ece_acks, (unsigned long long)total.ece_echo_mismatches,
             (unsigned long long)total.reductions_checked,
             (unsigned long long)total.reductions_within_rtt,
             (unsigned long long)total.negotiation_ece_seen,
             (unsigned long long)total.negotiation_ece_counted,
             (unsigned long long)total.overflow_drops, (unsigned long long)t.overflow_drops,
             (unsigned long long)t.marks, s));
}

std::string join(const std::vector<double>& v, double scale) {
  std::ostringstream o;
  for (size_t i = 0; i < v.size(); ++i) o << (i ? " " : "") << std::llround(v[i] * scale);
  return o.str();
}

void sweep_trends() {
  const auto t0 = std::chrono::steady_clock::now();
  const harness::ScenarioConfig cfg;
  const auto rows = harness::target_sweep(cfg, {Discipline::kCodel, Discipline::kFqCodel});
  const double s = seconds_since(t0);
  const size_t n = cfg.sweep_targets_us.size();
  std::vector<double> mrtt[2], thr[2];
  for (size_t i = 0; i < rows.size(); ++i) {
    mrtt[i / n].push_back(rows[i].mean_mrtt_us);
    thr[i / n].push_back(rows[i].mean_throughput_bps);
  }
  const char* names[2] = {"codel", "fq_codel"};
  const char* ids_mrtt[2] = {"8a", "8b"};
  const char* ids_thr[2] = {"8c", "8d"};
  for (int d = 0; d < 2; ++d) {
    const double rho = harness::spearman(cfg.sweep_targets_us, mrtt[d]);
    report(ids_mrtt[d], rho >= kMrttRho && s < kBudgetSweep,
           fmt("%s rho(target, mRTT) = %.3f (>= %.1f); mRTT us: %s", names[d], rho, kMrttRho,
               join(mrtt[d], 1.0).c_str()));
  }
  for (int d = 0; d < 2; ++d) {
    const double rho = harness::spearman(cfg.sweep_targets_us, thr[d]);
    report(ids_thr[d], rho <= kThroughputRho && s < kBudgetSweep,
           fmt("%s rho(target, throughput) = %.3f (<= %.1f); kbit/s: %s", names[d], rho,
               kThroughputRho, join(thr[d], 1e-3).c_str()));
  }
  int worse = 0;
  for (size_t i = 0; i < n; ++i) worse += mrtt[1][i] > mrtt[0][i];
  report("8e", worse == 0 && s < kBudgetSweep,
         fmt("fq_codel mRTT <= codel at %zu of %zu targets; sweep took %.1f s", n - worse, n, s));
}

harness::PretrainResult predictor_pipeline() {
  const auto t0 = std::chrono::steady_clock::now();
  harness::ScenarioConfig cfg;
  auto pre = harness::pretrain_predictor(cfg);
  report("10a", pre.report.rmse_test <= kPretrainRmse,
         fmt("pretrain %d epochs on %d samples: test RMSE %.4f (<= %.2f), %.1f s",
             pre.report.epochs, cfg.synth_length, pre.report.rmse_test, kPretrainRmse,
             pre.report.wall_seconds));
  const auto demo = harness::retrain_demo(cfg, pre.predictor);
  const double before = demo.before.rmse_test;
  const double after = demo.after.rmse_test;
  report("10b", std::isfinite(after) && after <= kRetrainRatio * before,
         fmt("re-train on %zu simulated samples: test RMSE %.4f -> %.4f (<= %.1fx)",
             demo.trace.size(), before, after, kRetrainRatio));
  const double total = seconds_since(t0);
  report("10c", demo.after.wall_seconds < kRetrainSeconds && total < kBudgetPredictor,
         fmt("re-train wall time %.2f s (< %.0f s); pipeline %.1f s", demo.after.wall_seconds,
             kRetrainSeconds, total));
  return pre;
}

void intelligent_vs_static(const predictor::CongestionPredictor& model) {
  const auto t0 = std::chrono::steady_clock::now();
  const harness::ScenarioConfig cfg;
  const auto rows = harness::compare_iaqm(cfg, model);
  const double s = seconds_since(t0);
  auto mean_of = [&](const std::string& d, const std::string& arm) {
    for (const auto& r : rows) {
      if (r.discipline == d && r.arm == arm && r.seed == "mean") return r;
    }
    throw std::runtime_error("missing mean row");
  };
  const char* names[2] = {"codel", "fq_codel"};
  const char* ids_power[2] = {"9a", "9b"};
  const char* ids_occ[2] = {"9c", "9d"};
  for (int d = 0; d < 2; ++d) {
    const auto smart = mean_of(names[d], "intelligent");
    const auto fixed = mean_of(names[d], "static");
    report(ids_power[d], smart.final_cumulative_power >= fixed.final_cumulative_power &&
                             s < kBudgetCompare,
           fmt("%s cumulative power intelligent %.2f vs static %.2f over %zu seeds x %d s",
               names[d], smart.final_cumulative_power, fixed.final_cumulative_power,
               cfg.compare_seeds.size(), cfg.duration_s));
  }
  for (int d = 0; d < 2; ++d) {
    const auto smart = mean_of(names[d], "intelligent");
    const auto fixed = mean_of(names[d], "static");
    report(ids_occ[d], smart.mean_occupancy_pct < fixed.mean_occupancy_pct && s < kBudgetCompare,
           fmt("%s mean occupancy intelligent %.3f%% vs static %.3f%%; compare took %.1f s",
               names[d], smart.mean_occupancy_pct, fixed.mean_occupancy_pct, s));
  }
}

void determinism(const predictor::CongestionPredictor& model) {
  const auto t0 = std::chrono::steady_clock::now();
  auto render = [&](const harness::ScenarioConfig& c) {
    const auto r = harness::run_scenario(c, c.intelligent ? &model : nullptr);
    std::ostringstream o;
    harness::write_epochs_csv(o, r.epochs);
    harness::write_summary_csv(o, {r.summary});
    return o.str();
  };
  int identical = 0;
  int total = 0;
  for (const auto kind : {harness::ScenarioKind::kFixed, harness::ScenarioKind::kRandom}) {
    for (const bool smart : {false, true}) {
      harness::ScenarioConfig c;
      c.scenario = kind;
      c.intelligent = smart;
      c.duration_s = 30;
      c.seed = 11;
      identical += render(c) == render(c);
      ++total;
    }
  }
  const double s = seconds_since(t0);
  report("11", identical == total && s < kBudgetDeterminism,
         fmt("%d of %d configurations byte-identical across two runs, %.1f s", identical, total,
             s));
}

std::set<std::string> parse_known(int argc, char** argv) {
  std::set<std::string> known;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) != "--known-fail") continue;
    std::stringstream ss(argv[i + 1]);
    std::string id;
    while (std::getline(ss, id, ',')) known.insert(id);
  }
  return known;
}

}  // namespace

int main(int argc, char** argv) {
  const auto known = parse_known(argc, argv);
  sizing();
  windowing();
  q_arithmetic();
  toy_mdp_convergence();
  gradient_check();
  codel_control_law();
  ecn_semantics();
  sweep_trends();
  const auto pre = predictor_pipeline();
  intelligent_vs_static(pre.predictor);
  determinism(pre.predictor);

  int failed = 0;
  int unexpected = 0;
  std::cout << "\nsummary\n";
  for (const auto& l : lines) {
    if (l.pass) {
      if (known.count(l.id)) std::cout << "  [" << l.id << "] listed as known failure but passes\n";
      continue;
    }
    ++failed;
    const bool expected = known.count(l.id) > 0;
    unexpected += !expected;
    std::cout << "  [" << l.id << "] FAIL" << (expected ? " (known, see README)" : " (unexpected)")
              << '\n';
  }
  std::cout << lines.size() - failed << " of " << lines.size() << " checks passed, " << failed
            << " failed, " << unexpected << " unexpected\n";

  std::ofstream file("acceptance_report.txt");
  for (const auto& l : lines) {
    file << (l.pass ? "PASS" : "FAIL") << " [" << l.id << "] " << l.detail
         << (!l.pass && known.count(l.id) ? " (known)" : "") << '\n';
  }
  return unexpected;
}
