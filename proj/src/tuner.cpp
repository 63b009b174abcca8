#include "iaqm/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace iaqm::tuner {

void TunerConfig::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(name) + " must be in [0,1]");
  };
  unit(alpha, "alpha");
  unit(gamma, "gamma");
  unit(epsilon, "epsilon");
  if (epoch.nanos() <= 0) throw std::invalid_argument("decision epoch must be positive");
}

int discretize(double value, double max_ref, int levels) {
  if (max_ref <= 0.0 || !(value > 0.0)) return 0;
  const double level = std::floor(static_cast<double>(levels) * value / max_ref);
  return static_cast<int>(std::clamp(level, 0.0, static_cast<double>(levels - 1)));
}

AqmSetting action_to_params(int index) {
  if (index < 0 || index >= kActions) {
    throw std::out_of_range("action index " + std::to_string(index) + " outside [0, 99]");
  }
  const SimTime target = SimTime::FromMicros(50 * (index + 1));
  return AqmSetting{target, target * 20};
}

QTable::QTable(int states, int actions)
    : states_(states), actions_(actions), values_(static_cast<size_t>(states * actions), 0.0) {
  if (states < 1 || actions < 1) throw std::invalid_argument("Q-table dimensions must be >= 1");
}

size_t QTable::index(int s, int a) const {
  if (s < 0 || s >= states_ || a < 0 || a >= actions_) {
    throw std::out_of_range("Q-table index (" + std::to_string(s) + ", " + std::to_string(a) + ")");
  }
  return static_cast<size_t>(s) * static_cast<size_t>(actions_) + static_cast<size_t>(a);
}

double QTable::max_value(int s) const { return at(s, argmax(s)); }

int QTable::argmax(int s) const {
  const auto begin = values_.begin() + static_cast<std::ptrdiff_t>(index(s, 0));
  return static_cast<int>(std::max_element(begin, begin + actions_) - begin);
}

double QTable::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

int select_action(const QTable& q, int state, double epsilon, sim::RandomStream& rng) {
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    return static_cast<int>(rng.uniform_int(0, q.actions() - 1));
  }
  return q.argmax(state);
}

void q_update(QTable& q, int s, int a, double reward, int s_next, double alpha, double gamma) {
  if (!std::isfinite(reward)) throw std::invalid_argument("Q-update reward must be finite");
  const double target = reward + gamma * q.max_value(s_next);
  double& v = q.at(s, a);
  v += alpha * (target - v);
}

double raw_power(const RewardSample& sample) {
  if (!(sample.mrtt_s > 0.0)) throw std::invalid_argument("power needs a positive mRTT");
  if (sample.throughput_bps < 0.0) throw std::invalid_argument("throughput must be >= 0");
  return sample.throughput_bps / sample.mrtt_s;
}

double power_reward(const RewardSample& sample, double normalizer) {
  if (!(normalizer > 0.0)) throw std::invalid_argument("reward normalizer must be positive");
  return raw_power(sample) / normalizer;
}

Agent::Agent(TunerConfig cfg, uint64_t seed) : cfg_(cfg), rng_(seed, "tuner") { cfg_.validate(); }

Agent::Decision Agent::decide(double observed_count) {
  q_.max_obs_ref = std::max(q_.max_obs_ref, observed_count);
  Decision d;
  d.state = discretize(observed_count, q_.max_obs_ref);
  d.action = select_action(q_, d.state, cfg_.epsilon, rng_);
  d.setting = action_to_params(d.action);
  return d;
}

int Agent::learn(const Decision& d, double reward, double predicted_count) {
  q_.max_pred_ref = std::max(q_.max_pred_ref, predicted_count);
  const int next = discretize(predicted_count, q_.max_pred_ref);
  q_update(q_, d.state, d.action, reward, next, cfg_.alpha, cfg_.gamma);
  return next;
}

}  // namespace iaqm::tuner
