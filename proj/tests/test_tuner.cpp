#include <doctest.h>

#include <cmath>
#include <vector>

#include "toy_mdp.hpp"
#include "iaqm/tuner.hpp"

using namespace iaqm;
using namespace iaqm::tuner;

TEST_CASE("discretize") {
  CHECK(discretize(0.0, 200.0) == 0);
  CHECK(discretize(200.0, 200.0) == 99);
  CHECK(discretize(100.0, 200.0) == 50);
  CHECK(discretize(5.0, 0.0) == 0);
  CHECK(discretize(1e9, 10.0) == 99);
}

TEST_CASE("action grid") {
  CHECK(action_to_params(0).target == SimTime::FromMicros(50));
  CHECK(action_to_params(0).interval == SimTime::FromMillis(1));
  CHECK(action_to_params(99).target == SimTime::FromMillis(5));
  CHECK(action_to_params(99).interval == SimTime::FromMillis(100));
  CHECK(action_to_params(9).target == SimTime::FromMicros(500));
  CHECK(action_to_params(9).interval == SimTime::FromMillis(10));
  CHECK_THROWS_AS(action_to_params(-1), std::out_of_range);
  CHECK_THROWS_AS(action_to_params(100), std::out_of_range);
  for (int i = 0; i < kActions; ++i) {
    const auto s = action_to_params(i);
    REQUIRE(s.target < s.interval);
    REQUIRE(s.interval.nanos() == 20 * s.target.nanos());
  }
}

TEST_CASE("greedy selection and tie-break") {
  QTable q;
  sim::RandomStream rng(1);
  CHECK(select_action(q, 3, 0.0, rng) == 0);
  q.at(3, 42) = 1.0;
  CHECK(select_action(q, 3, 0.0, rng) == 42);
  q.at(3, 7) = 1.0;
  CHECK(select_action(q, 3, 0.0, rng) == 7);
}

TEST_CASE("epsilon 1 draws actions uniformly") {
  QTable q;
  q.at(0, 5) = 10.0;
  sim::RandomStream rng(2024);
  std::vector<int> hist(kActions, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++hist[select_action(q, 0, 1.0, rng)];
  double chi2 = 0.0;
  const double expected = static_cast<double>(n) / kActions;
  for (int h : hist) chi2 += (h - expected) * (h - expected) / expected;
  // 99 degrees of freedom: the 0.999 quantile is about 148.2.
  CHECK(chi2 < 148.2);
}

TEST_CASE("q update by hand") {
  QTable q;
  q_update(q, 0, 0, 1.0, 0, 0.5, 0.8);
  CHECK(q.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  q_update(q, 0, 0, 1.0, 0, 0.5, 0.8);
  CHECK(q.at(0, 0) == doctest::Approx(0.95).epsilon(1e-12));
  QTable frozen = q;
  q_update(q, 0, 0, 3.0, 0, 0.0, 0.8);
  CHECK(q.at(0, 0) == frozen.at(0, 0));
  CHECK_THROWS_AS(q_update(q, 0, 0, std::nan(""), 0, 0.5, 0.8), std::invalid_argument);
  CHECK_THROWS_AS(q_update(q, 0, 0, INFINITY, 0, 0.5, 0.8), std::invalid_argument);
}

TEST_CASE("q values stay within rmax / (1 - gamma)") {
  QTable q;
  sim::RandomStream rng(5);
  for (int i = 0; i < 100000; ++i) {
    q_update(q, static_cast<int>(rng.uniform_int(0, 99)), static_cast<int>(rng.uniform_int(0, 99)),
             rng.uniform(), static_cast<int>(rng.uniform_int(0, 99)), 0.5, 0.8);
  }
  CHECK(q.max_abs() <= 1.0 / (1.0 - 0.8) + 1e-12);
}

TEST_CASE("fixed reward contracts geometrically") {
  QTable q;
  q.at(4, 0) = 2.0;  // max Q(s') with s' = 4
  const double fixed_point = 1.0 + 0.8 * 2.0;
  double prev_gap = std::abs(q.at(1, 3) - fixed_point);
  for (int i = 0; i < 60; ++i) {
    q_update(q, 1, 3, 1.0, 4, 0.5, 0.8);
    const double gap = std::abs(q.at(1, 3) - fixed_point);
    REQUIRE(gap == doctest::Approx(0.5 * prev_gap).epsilon(1e-9));
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-15);
}

TEST_CASE("scaling rewards scales q and keeps the greedy action") {
  QTable a, b;
  sim::RandomStream rng(8);
  const double k = 37.5;
  for (int i = 0; i < 20000; ++i) {
    const int s = static_cast<int>(rng.uniform_int(0, 99));
    const int act = static_cast<int>(rng.uniform_int(0, 99));
    const int n = static_cast<int>(rng.uniform_int(0, 99));
    const double r = rng.uniform();
    q_update(a, s, act, r, n, 0.5, 0.8);
    q_update(b, s, act, k * r, n, 0.5, 0.8);
  }
  for (int s = 0; s < 100; ++s) {
    REQUIRE(a.argmax(s) == b.argmax(s));
    for (int act = 0; act < 100; ++act) {
      REQUIRE(b.at(s, act) == doctest::Approx(k * a.at(s, act)).epsilon(1e-10));
    }
  }
}

TEST_CASE("toy mdp converges to value iteration") {
  const auto r = toy_mdp::q_learn(0.8, 100000, 1e-2, 17);
  CHECK(r.error <= 1e-2);
  CHECK(r.iterations_to_tolerance > 0);
}

TEST_CASE("power reward") {
  CHECK(raw_power({2e7, 0.04}) == doctest::Approx(5e8));
  CHECK(power_reward({0.0, 0.04}, 1.0) == 0.0);
  CHECK(power_reward({2e7, 0.04}, 2e7 / 0.04) == doctest::Approx(1.0));
  CHECK_THROWS_AS(raw_power({2e7, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(raw_power({-1.0, 0.04}), std::invalid_argument);
  CHECK_THROWS_AS(power_reward({1.0, 1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("agent first epoch") {
  TunerConfig cfg;
  cfg.epsilon = 0.0;
  Agent agent(cfg, 1);
  const auto d = agent.decide(0.0);
  CHECK(d.state == 0);
  CHECK(d.action == 0);
  CHECK(d.setting.target == SimTime::FromMicros(50));
  CHECK(agent.learn(d, 0.8, 0.0) == 0);
  int nonzero = 0;
  for (int s = 0; s < 100; ++s) {
    for (int a = 0; a < 100; ++a) nonzero += agent.table().at(s, a) != 0.0;
  }
  CHECK(nonzero == 1);
  CHECK(agent.table().at(0, 0) == doctest::Approx(0.4));
}

TEST_CASE("reference maxima only grow") {
  Agent agent({}, 3);
  CHECK(agent.table().max_obs_ref == 1.0);
  auto d = agent.decide(50.0);
  CHECK(d.state == 99);
  d = agent.decide(10.0);
  CHECK(agent.table().max_obs_ref == 50.0);
  CHECK(d.state == 20);
  agent.learn(d, 0.1, 8.0);
  CHECK(agent.table().max_pred_ref == 8.0);
  CHECK(agent.learn(d, 0.1, 4.0) == 50);
  CHECK(agent.table().max_pred_ref == 8.0);
}

TEST_CASE("config validation") {
  TunerConfig c;
  CHECK_NOTHROW(c.validate());
  c.alpha = 1.5;
  CHECK_THROWS(c.validate());
  c.alpha = 0.5;
  c.epoch = SimTime{};
  CHECK_THROWS(c.validate());
}
