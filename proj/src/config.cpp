#include "iaqm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace iaqm::harness {

std::string to_string(Discipline d) {
  switch (d) {
    case Discipline::kTailDrop: return "taildrop";
    case Discipline::kCodel: return "codel";
    case Discipline::kFqCodel: return "fq_codel";
  }
  return "?";
}

Discipline parse_discipline(const std::string& s) {
  if (s == "taildrop") return Discipline::kTailDrop;
  if (s == "codel") return Discipline::kCodel;
  if (s == "fq_codel") return Discipline::kFqCodel;
  throw std::invalid_argument("unknown discipline '" + s + "' (taildrop, codel, fq_codel)");
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) {
    throw std::invalid_argument(key + ": '" + v + "' is not a number");
  }
  return out;
}

int64_t to_int(const std::string& key, const std::string& v) {
  int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw std::invalid_argument(key + ": '" + v + "' is not an integer");
  }
  return out;
}

uint64_t to_uint(const std::string& key, const std::string& v) {
  uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw std::invalid_argument(key + ": '" + v + "' is not an unsigned integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument(key + ": '" + v + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct Field {
  std::string key;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

template <typename T>
Field num(std::string key, T ScenarioConfig::*m) {
  Field f;
  f.key = key;
  f.set = [key, m](ScenarioConfig& c, const std::string& v) {
    if constexpr (std::is_same_v<T, double>) {
      c.*m = to_double(key, v);
    } else if constexpr (std::is_same_v<T, bool>) {
      c.*m = to_bool(key, v);
    } else if constexpr (std::is_same_v<T, uint64_t>) {
      c.*m = to_uint(key, v);
    } else {
      c.*m = static_cast<T>(to_int(key, v));
    }
  };
  f.get = [m](const ScenarioConfig& c) {
    if constexpr (std::is_same_v<T, bool>) {
      return std::string(c.*m ? "true" : "false");
    } else if constexpr (std::is_same_v<T, double>) {
      return fmt(c.*m);
    } else {
      return std::to_string(c.*m);
    }
  };
  return f;
}

Field str(std::string key, std::string ScenarioConfig::*m) {
  return Field{key, [m](ScenarioConfig& c, const std::string& v) { c.*m = v; },
               [m](const ScenarioConfig& c) { return c.*m; }};
}

Field doubles(std::string key, std::vector<double> ScenarioConfig::*m) {
  return Field{key,
               [key, m](ScenarioConfig& c, const std::string& v) {
                 std::vector<double> out;
                 for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
                 c.*m = out;
               },
               [m](const ScenarioConfig& c) {
                 std::string s;
                 for (double d : c.*m) s += (s.empty() ? "" : ",") + fmt(d);
                 return s;
               }};
}

Field seeds(std::string key, std::vector<uint64_t> ScenarioConfig::*m) {
  return Field{key,
               [key, m](ScenarioConfig& c, const std::string& v) {
                 std::vector<uint64_t> out;
                 for (const auto& s : split_list(v)) out.push_back(to_uint(key, s));
                 c.*m = out;
               },
               [m](const ScenarioConfig& c) {
                 std::string s;
                 for (uint64_t d : c.*m) s += (s.empty() ? "" : ",") + std::to_string(d);
                 return s;
               }};
}

const std::vector<Field>& fields() {
  using C = ScenarioConfig;
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    t.push_back(Field{"scenario",
                      [](C& c, const std::string& v) {
                        if (v == "fixed") {
                          c.scenario = ScenarioKind::kFixed;
                        } else if (v == "random") {
                          c.scenario = ScenarioKind::kRandom;
                        } else {
                          throw std::invalid_argument("scenario: '" + v + "' (fixed, random)");
                        }
                      },
                      [](const C& c) {
                        return std::string(c.scenario == ScenarioKind::kFixed ? "fixed" : "random");
                      }});
    t.push_back(Field{"discipline",
                      [](C& c, const std::string& v) { c.discipline = parse_discipline(v); },
                      [](const C& c) { return to_string(c.discipline); }});
    t.push_back(num("ecn", &C::ecn));
    t.push_back(num("intelligent", &C::intelligent));
    t.push_back(num("duration_s", &C::duration_s));
    t.push_back(num("seed", &C::seed));
    t.push_back(num("hosts_per_side", &C::hosts_per_side));
    t.push_back(num("access_bw_mbps", &C::access_bw_mbps));
    t.push_back(num("access_delay_ms", &C::access_delay_ms));
    t.push_back(num("bottleneck_bw_mbps", &C::bottleneck_bw_mbps));
    t.push_back(num("bottleneck_delay_ms", &C::bottleneck_delay_ms));
    t.push_back(num("receiver_bw_mbps", &C::receiver_bw_mbps));
    t.push_back(num("receiver_delay_ms", &C::receiver_delay_ms));
    t.push_back(num("start_jitter_ms", &C::start_jitter_ms));
    t.push_back(num("random_bw_min_mbps", &C::random_bw_min_mbps));
    t.push_back(num("random_bw_max_mbps", &C::random_bw_max_mbps));
    t.push_back(num("random_delay_min_ms", &C::random_delay_min_ms));
    t.push_back(num("random_delay_max_ms", &C::random_delay_max_ms));
    t.push_back(num("random_start_max_s", &C::random_start_max_s));
    t.push_back(num("random_bottleneck_bw_mbps", &C::random_bottleneck_bw_mbps));
    t.push_back(num("target_us", &C::target_us));
    t.push_back(num("interval_us", &C::interval_us));
    t.push_back(num("hard_limit_pkts", &C::hard_limit_pkts));
    t.push_back(num("tcp_friendly", &C::tcp_friendly));
    t.push_back(num("alpha", &C::alpha));
    t.push_back(num("gamma", &C::gamma));
    t.push_back(num("epsilon", &C::epsilon));
    t.push_back(num("epoch_ms", &C::epoch_ms));
    t.push_back(num("bin_ms", &C::bin_ms));
    t.push_back(num("probes_per_epoch", &C::probes_per_epoch));
    t.push_back(num("predictor_epochs", &C::predictor_epochs));
    t.push_back(str("predictor_checkpoint", &C::predictor_checkpoint));
    t.push_back(str("trace_file", &C::trace_file));
    t.push_back(num("synth_length", &C::synth_length));
    t.push_back(num("synth_p_on", &C::synth_p_on));
    t.push_back(num("synth_mean_on_run", &C::synth_mean_on_run));
    t.push_back(num("synth_lambda", &C::synth_lambda));
    t.push_back(num("retrain_samples", &C::retrain_samples));
    t.push_back(num("retrain_bin_ms", &C::retrain_bin_ms));
    t.push_back(num("retrain_start_s", &C::retrain_start_s));
    t.push_back(doubles("sweep_targets_us", &C::sweep_targets_us));
    t.push_back(seeds("sweep_seeds", &C::sweep_seeds));
    t.push_back(num("sweep_duration_s", &C::sweep_duration_s));
    t.push_back(num("sweep_warmup_s", &C::sweep_warmup_s));
    t.push_back(seeds("compare_seeds", &C::compare_seeds));
    t.push_back(str("out_dir", &C::out_dir));
    return t;
  }();
  return table;
}

}  // namespace

void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(cfg, trim(value));
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

ScenarioConfig parse_config(std::istream& in, ScenarioConfig base) {
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

ScenarioConfig load_config(const std::filesystem::path& path, ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  return parse_config(in, std::move(base));
}

std::string dump_config(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(duration_s >= 1, "duration_s must be >= 1");
  require(hosts_per_side >= 1, "hosts_per_side must be >= 1");
  require(access_bw_mbps > 0 && bottleneck_bw_mbps > 0 && receiver_bw_mbps > 0 &&
              random_bottleneck_bw_mbps > 0,
          "link bandwidths must be positive");
  require(access_delay_ms >= 0 && bottleneck_delay_ms >= 0 && receiver_delay_ms >= 0,
          "link delays must be >= 0");
  require(start_jitter_ms >= 0, "start_jitter_ms must be >= 0");
  require(random_bw_min_mbps > 0 && random_bw_min_mbps <= random_bw_max_mbps,
          "random bandwidth range must satisfy 0 < min <= max");
  require(random_delay_min_ms >= 0 && random_delay_min_ms <= random_delay_max_ms,
          "random delay range must satisfy 0 <= min <= max");
  require(random_start_max_s >= 0, "random_start_max_s must be >= 0");
  require(target_us > 0 && target_us < interval_us, "target_us must be positive and below interval_us");
  require(hard_limit_pkts >= 1, "hard_limit_pkts must be >= 1");
  require(alpha >= 0 && alpha <= 1, "alpha must be in [0,1]");
  require(gamma >= 0 && gamma <= 1, "gamma must be in [0,1]");
  require(epsilon >= 0 && epsilon <= 1, "epsilon must be in [0,1]");
  require(epoch_ms > 0 && bin_ms > 0, "epoch_ms and bin_ms must be positive");
  require(probes_per_epoch >= 1, "probes_per_epoch must be >= 1");
  require(predictor_epochs >= 0, "predictor_epochs must be >= 0");
  require(synth_length >= 12, "synth_length must be >= 12");
  require(retrain_samples >= 12, "retrain_samples must be >= 12");
  require(retrain_bin_ms > 0 && retrain_start_s >= 0, "retrain window must be positive");
  require(sweep_duration_s >= 1, "sweep_duration_s must be >= 1");
  require(sweep_warmup_s >= 0 && sweep_warmup_s < sweep_duration_s,
          "sweep_warmup_s must be in [0, sweep_duration_s)");
  for (double t : sweep_targets_us) require(t > 0, "sweep_targets_us entries must be positive");
}

}  // namespace iaqm::harness
