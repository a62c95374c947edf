#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "delegrid/nav_agents.hpp"

using namespace delegrid;

TEST_CASE("q_step_reward mapping") {
  const StepOutcome goal{{0, 1}, false, true};
  const StepOutcome collision{{0, 0}, true, false};
  const StepOutcome move{{0, 1}, false, false};
  CHECK(q_step_reward(goal, false) == 100.0);
  CHECK(q_step_reward(collision, false) == -10.0);
  CHECK(q_step_reward(move, false) == -1.0);
  CHECK(q_step_reward(move, true) == -100.0);
}

TEST_CASE("q_update overwrite, derived value and identity limits") {
  QTable table;
  QParams params;

  params.alpha = 1.0;
  table.set({0, 0}, Action::Right, -3.0);
  q_update(table, {0, 0}, Action::Right, 100.0, {0, 1}, true, params);
  CHECK(table.get({0, 0}, Action::Right) == 100.0);

  params.alpha = 0.5;
  params.gamma = 0.9;
  table.set({1, 0}, Action::Down, 4.0);
  table.set({2, 0}, Action::Up, 10.0);
  q_update(table, {1, 0}, Action::Down, -1.0, {2, 0}, false, params);
  CHECK_THAT(table.get({1, 0}, Action::Down), Catch::Matchers::WithinAbs(6.0, 1e-12));

  params.alpha = 0.0;
  QTable before = table;
  q_update(table, {1, 0}, Action::Down, 55.0, {2, 0}, false, params);
  CHECK(table == before);
}

TEST_CASE("q_update touches exactly one entry") {
  QTable table;
  QParams params;
  Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    table.set({static_cast<int>(rng.uniform_index(5)), static_cast<int>(rng.uniform_index(5))},
              kActions[rng.uniform_index(4)], rng.uniform01() * 20.0 - 10.0);
  }
  const auto before = table.entries_sorted();
  q_update(table, {2, 2}, Action::Left, 1.5, {2, 1}, false, params);
  const auto after = table.entries_sorted();
  int changed = 0;
  for (const auto& [pos, action, value] : after) {
    bool matched_old = false;
    for (const auto& [bpos, baction, bvalue] : before) {
      if (bpos == pos && baction == action) {
        matched_old = true;
        if (value != bvalue) ++changed;
      }
    }
    if (!matched_old) {
      ++changed;
      CHECK(pos == Position{2, 2});
      CHECK(action == Action::Left);
    }
  }
  CHECK(changed == 1);
}

TEST_CASE("q_update contracts toward its target") {
  Rng rng(9);
  QParams params;
  for (int trial = 0; trial < 1000; ++trial) {
    params.alpha = rng.open01();
    params.gamma = rng.uniform01();
    QTable table;
    const Position s{static_cast<int>(rng.uniform_index(8)),
                     static_cast<int>(rng.uniform_index(8))};
    const Position s2{static_cast<int>(rng.uniform_index(8)),
                      static_cast<int>(rng.uniform_index(8))};
    const Action a = kActions[rng.uniform_index(4)];
    const double q0 = rng.uniform01() * 400.0 - 200.0;
    table.set(s, a, q0);
    for (Action next : kActions) {
      if (!(s2 == s && next == a)) table.set(s2, next, rng.uniform01() * 400.0 - 200.0);
    }
    const double r = rng.uniform01() * 200.0 - 100.0;
    const bool terminal = rng.bernoulli(0.3);
    const double target = r + (terminal ? 0.0 : params.gamma * table.max_value(s2));
    const double gap_before = std::abs(table.get(s, a) - target);
    q_update(table, s, a, r, s2, terminal, params);
    const double gap_after = std::abs(table.get(s, a) - target);
    REQUIRE(std::abs(gap_after - (1.0 - params.alpha) * gap_before) <= 1e-12 * (1.0 + gap_before));
  }
}

TEST_CASE("epsilon-greedy extremes") {
  QTable table;
  table.set({0, 0}, Action::Down, 3.0);
  Rng rng(12);

  for (int i = 0; i < 50; ++i)
    CHECK(epsilon_greedy_action(table, {0, 0}, 0.0, rng) == Action::Down);

  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 10000; ++i)
    ++counts[static_cast<int>(epsilon_greedy_action(table, {0, 0}, 1.0, rng))];
  for (int c : counts) CHECK(std::abs(c - 2500) < 200);

  // all-zero table: four-way tie
  QTable zeros;
  int tie_counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 10000; ++i)
    ++tie_counts[static_cast<int>(epsilon_greedy_action(zeros, {0, 0}, 0.0, rng))];
  for (int c : tie_counts) CHECK(std::abs(c - 2500) < 200);
}

TEST_CASE("decay schedule anneals per episode") {
  QParams params;
  decay_schedule(params);
  CHECK_THAT(params.alpha, Catch::Matchers::WithinAbs(0.99980001, 1e-12));
  CHECK_THAT(params.epsilon, Catch::Matchers::WithinAbs(0.99980001, 1e-12));
  CHECK(params.gamma == 0.9);
  CHECK(params.alpha_decay == 0.9999);

  QParams annealed;
  for (int i = 0; i < 150000; ++i) decay_schedule(annealed);
  const double expected = 0.9999 * std::pow(0.9999, 150000.0);
  REQUIRE(std::abs(annealed.alpha - expected) / expected <= 1e-9);
  REQUIRE(annealed.alpha < 4e-7);

  QParams frozen;
  frozen.alpha_decay = 1.0;
  frozen.epsilon_decay = 1.0;
  decay_schedule(frozen);
  CHECK(frozen.alpha == 0.9999);
  CHECK(frozen.epsilon == 0.9999);
}

TEST_CASE("nav_policy_action respects kind and mode") {
  QParams q_params;
  NavAgent q_agent = NavAgent::make_q(1, q_params);
  q_agent.q().table.set({1, 1}, Action::Left, 7.0);
  Rng rng(3);
  for (int i = 0; i < 20; ++i)
    CHECK(nav_policy_action(q_agent, {1, 1}, Mode::Frozen, 0, rng) == Action::Left);

  IblParams ibl_params;
  ibl_params.sigma = 0.0;
  NavAgent ibl_agent = NavAgent::make_ibl(2, ibl_params);
  record_observation(ibl_agent.ibl().memory, {Position{1, 1}, Action::Up, 50.0}, 1);
  record_observation(ibl_agent.ibl().memory, {Position{1, 1}, Action::Down, -50.0}, 2);
  ibl_agent.ibl().memory.clock = 2;
  for (int i = 0; i < 20; ++i)
    CHECK(nav_policy_action(ibl_agent, {1, 1}, Mode::Frozen, 3, rng) == Action::Up);

  // training with epsilon = 1 explores uniformly
  NavAgent explorer = NavAgent::make_q(1, q_params);
  explorer.q().params.epsilon = 1.0;
  explorer.q().table.set({0, 0}, Action::Up, 99.0);
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 10000; ++i)
    ++counts[static_cast<int>(nav_policy_action(explorer, {0, 0}, Mode::Train, 0, rng))];
  for (int c : counts) CHECK(std::abs(c - 2500) < 200);
}
