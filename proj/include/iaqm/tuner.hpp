#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "iaqm/rng.hpp"
#include "iaqm/sim_time.hpp"

namespace iaqm::tuner {

using sim::SimTime;

inline constexpr int kLevels = 100;
inline constexpr int kActions = 100;

struct TunerConfig {
  double alpha = 0.5;
  double gamma = 0.8;
  double epsilon = 0.5;
  SimTime epoch = SimTime::FromSeconds(1);

  /// Throws std::invalid_argument unless alpha, gamma, epsilon are in [0,1]
  /// and the epoch is positive.
  void validate() const;
};

/// floor(levels * value / max_ref) clamped to [0, levels-1]; level 0 when
/// max_ref <= 0 or value <= 0.
int discretize(double value, double max_ref, int levels = kLevels);

struct AqmSetting {
  SimTime target;
  SimTime interval;
};

/// Action i -> target (i+1)*50us, interval 20*target. Throws
/// std::out_of_range outside [0, 99].
AqmSetting action_to_params(int index);

/// State x action values plus the running maxima used for discretization.
class QTable {
 public:
  QTable(int states = kLevels, int actions = kActions);

  int states() const { return states_; }
  int actions() const { return actions_; }

  double at(int s, int a) const { return values_[index(s, a)]; }
  double& at(int s, int a) { return values_[index(s, a)]; }
  double max_value(int s) const;
  /// Lowest index among the maxima of row s.
  int argmax(int s) const;
  double max_abs() const;

  double max_obs_ref = 1.0;
  double max_pred_ref = 1.0;

 private:
  size_t index(int s, int a) const;

  int states_;
  int actions_;
  std::vector<double> values_;
};

/// Epsilon-greedy: uniform action with probability epsilon, else argmax.
int select_action(const QTable& q, int state, double epsilon, sim::RandomStream& rng);

/// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)). Throws
/// std::invalid_argument on a non-finite reward or out-of-range index.
void q_update(QTable& q, int s, int a, double reward, int s_next, double alpha, double gamma);

struct RewardSample {
  double throughput_bps = 0.0;
  double mrtt_s = 0.0;
};

/// throughput / mRTT in bit/s^2. Throws std::invalid_argument when
/// mrtt <= 0 or throughput < 0.
double raw_power(const RewardSample& sample);

/// raw_power / normalizer; the scenario uses bottleneck_bps / base_rtt.
double power_reward(const RewardSample& sample, double normalizer);

/// The edge-router agent: observe, act, then learn from the reward and the
/// predicted next state.
class Agent {
 public:
  struct Decision {
    int state = 0;
    int action = 0;
    AqmSetting setting;
  };

  Agent(TunerConfig cfg, uint64_t seed);

  Decision decide(double observed_count);
  /// Returns the next-state level used in the update.
  int learn(const Decision& d, double reward, double predicted_count);

  const QTable& table() const { return q_; }
  QTable& table() { return q_; }
  const TunerConfig& config() const { return cfg_; }

 private:
  TunerConfig cfg_;
  QTable q_;
  sim::RandomStream rng_;
};

}  // namespace iaqm::tuner
