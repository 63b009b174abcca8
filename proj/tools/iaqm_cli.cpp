#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "iaqm/config.hpp"
#include "iaqm/experiments.hpp"
#include "iaqm/scenario.hpp"

namespace fs = std::filesystem;
using namespace iaqm;
using namespace iaqm::harness;

namespace {

struct CommonFlags {
  std::string config;
  uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int duration_s = 0;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key = value config file");
  cmd->add_option_function<uint64_t>(
      "--seed", [&f](uint64_t s) { f.seed = s; f.seed_set = true; }, "master seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--duration-s", f.duration_s, "simulated seconds (sweep: per run)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--set", f.sets, "config override key=value (repeatable)");
}

ScenarioConfig resolve(const CommonFlags& f, bool sweep) {
  ScenarioConfig cfg;
  if (!f.config.empty()) cfg = load_config(f.config, cfg);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + kv);
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed_set) cfg.seed = f.seed;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.duration_s > 0) (sweep ? cfg.sweep_duration_s : cfg.duration_s) = f.duration_s;
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  return cfg;
}

std::ofstream open_out(const ScenarioConfig& cfg, const std::string& name) {
  const fs::path p = fs::path(cfg.out_dir) / name;
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

fs::path checkpoint_path(const ScenarioConfig& cfg) {
  return cfg.predictor_checkpoint.empty() ? fs::path(cfg.out_dir) / "predictor.ckpt"
                                          : fs::path(cfg.predictor_checkpoint);
}

predictor::CongestionPredictor obtain_predictor(ScenarioConfig cfg) {
  const fs::path ckpt = checkpoint_path(cfg);
  if (fs::exists(ckpt)) {
    std::cerr << "loading predictor " << ckpt << "\n";
    return predictor::CongestionPredictor::load(ckpt);
  }
  std::cerr << "pre-training predictor (" << cfg.predictor_epochs << " epochs)\n";
  auto res = pretrain_predictor(cfg);
  res.predictor.save(ckpt);
  auto out = open_out(cfg, "fit_report.csv");
  write_fit_report_csv(out, {{"pretrain", res.report}});
  return std::move(res.predictor);
}

void cmd_run(const ScenarioConfig& cfg) {
  std::optional<predictor::CongestionPredictor> model;
  if (cfg.intelligent) model = obtain_predictor(cfg);
  const RunResult r = run_scenario(cfg, model ? &*model : nullptr);
  auto epochs = open_out(cfg, "epochs.csv");
  write_epochs_csv(epochs, r.epochs);
  auto summary = open_out(cfg, "summary.csv");
  write_summary_csv(summary, {r.summary});
  write_summary_csv(std::cout, {r.summary});
}

void cmd_sweep(const ScenarioConfig& cfg) {
  const auto rows = target_sweep(cfg);
  auto out = open_out(cfg, "sweep.csv");
  write_sweep_csv(out, rows);
  write_sweep_csv(std::cout, rows);
}

void cmd_compare(const ScenarioConfig& cfg) {
  const auto model = obtain_predictor(cfg);
  const auto rows = compare_iaqm(cfg, model);
  auto out = open_out(cfg, "compare.csv");
  write_compare_csv(out, rows);
  write_compare_csv(std::cout, rows);
}

void cmd_pretrain(const ScenarioConfig& cfg) {
  const auto trace = training_trace(cfg);
  auto trace_out = open_out(cfg, "trace.csv");
  predictor::write_trace_csv(trace_out, trace);
  auto res = pretrain_predictor(cfg);
  res.predictor.save(checkpoint_path(cfg));
  auto out = open_out(cfg, "fit_report.csv");
  write_fit_report_csv(out, {{"pretrain", res.report}});
  write_fit_report_csv(std::cout, {{"pretrain", res.report}});
}

void cmd_retrain_demo(const ScenarioConfig& cfg) {
  const auto model = obtain_predictor(cfg);
  const auto demo = retrain_demo(cfg, model);
  auto trace_out = open_out(cfg, "retrain_trace.csv");
  predictor::write_trace_csv(trace_out, demo.trace);
  demo.retrained.save(fs::path(cfg.out_dir) / "predictor_retrained.ckpt");
  const std::vector<LabeledFit> rows{{"before_retrain", demo.before},
                                     {"after_retrain", demo.after}};
  auto out = open_out(cfg, "fit_report.csv");
  write_fit_report_csv(out, rows);
  write_fit_report_csv(std::cout, rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intelligent AQM simulator"};
  app.require_subcommand(1);

  CommonFlags flags;
  struct Cmd {
    const char* name;
    const char* help;
    void (*fn)(const ScenarioConfig&);
  };
  const std::vector<Cmd> cmds{
      {"run", "single scenario: epochs.csv, summary.csv", cmd_run},
      {"sweep", "target sweep for CoDel and FQ-CoDel: sweep.csv", cmd_sweep},
      {"compare", "intelligent vs static arms: compare.csv", cmd_compare},
      {"pretrain", "pre-train the predictor: checkpoint, fit_report.csv", cmd_pretrain},
      {"retrain-demo", "transfer and one-epoch re-train: fit_report.csv", cmd_retrain_demo},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : cmds) {
    subs.push_back(app.add_subcommand(c.name, c.help));
    add_common(subs.back(), flags);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    for (size_t i = 0; i < cmds.size(); ++i) {
      if (subs[i]->parsed()) {
        const bool sweep = std::string(cmds[i].name) == "sweep";
        cmds[i].fn(resolve(flags, sweep));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
