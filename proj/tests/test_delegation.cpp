#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "delegrid/delegation.hpp"

using namespace delegrid;

namespace {

GridSpec tagged_corridor() {
  GridSpec grid;
  grid.rows = 1;
  grid.cols = 5;
  grid.start = {0, 0};
  grid.goal = {0, 4};
  grid.error_cells.emplace(Position{0, 1}, ErrorTag::of({1}));
  grid.error_cells.emplace(Position{0, 2}, ErrorTag::of({2}));
  grid.error_cells.emplace(Position{0, 3}, ErrorTag::of({1, 2}));
  return grid;
}

IblParams quiet_params() {
  IblParams p;
  p.sigma = 0.0;
  return p;
}

}  // namespace

TEST_CASE("random manager selects uniformly and stays stateless") {
  const GridSpec grid = tagged_corridor();
  ManagerAgent mgr = ManagerAgent::make_random(2);
  Rng rng(5);
  int first = 0;
  for (int i = 0; i < 10000; ++i) {
    const int chosen = manager_select(mgr, grid, {0, 0}, 0, rng);
    REQUIRE(chosen >= 1);
    REQUIRE(chosen <= 2);
    if (chosen == 1) ++first;
  }
  CHECK(std::abs(first - 5000) < 200);
  CHECK_FALSE(mgr.memory.has_value());
  CHECK(mgr.selection_log.at({"plain", 1}) + mgr.selection_log.at({"plain", 2}) == 10000);
}

TEST_CASE("ibl manager with empty memory splits ties evenly") {
  const GridSpec grid = tagged_corridor();
  ManagerAgent mgr = ManagerAgent::make_ibl(2, quiet_params());
  Rng rng(6);
  int first = 0;
  for (int i = 0; i < 10000; ++i)
    if (manager_select(mgr, grid, {0, 2}, 1, rng) == 1) ++first;
  CHECK(std::abs(first - 5000) < 200);
  CHECK(mgr.memory->instance_count() == 0);
}

TEST_CASE("ibl manager follows dominant blended values") {
  const GridSpec grid = tagged_corridor();
  ManagerAgent mgr = ManagerAgent::make_ibl(2, quiet_params());
  record_observation(*mgr.memory, {Position{0, 1}, 1, 80.0}, 1);
  record_observation(*mgr.memory, {Position{0, 1}, 2, -250.0}, 2);
  mgr.memory->clock = 2;
  Rng rng(7);
  for (int i = 0; i < 50; ++i) REQUIRE(manager_select(mgr, grid, {0, 1}, 3, rng) == 1);
}

TEST_CASE("selection log buckets by error tag") {
  const GridSpec grid = tagged_corridor();
  ManagerAgent mgr = ManagerAgent::make_random(2);
  Rng rng(8);
  manager_select(mgr, grid, {0, 0}, 0, rng);
  manager_select(mgr, grid, {0, 1}, 0, rng);
  manager_select(mgr, grid, {0, 2}, 0, rng);
  manager_select(mgr, grid, {0, 3}, 0, rng);
  std::int64_t plain = 0, e1 = 0, e2 = 0, joint = 0;
  for (const auto& [key, count] : mgr.selection_log) {
    if (key.first == "plain") plain += count;
    if (key.first == "E1") e1 += count;
    if (key.first == "E2") e2 += count;
    if (key.first == "E12") joint += count;
  }
  CHECK(plain == 1);
  CHECK(e1 == 1);
  CHECK(e2 == 1);
  CHECK(joint == 1);
}

TEST_CASE("manager_commit writes uniform credit for ibl managers only") {
  ManagerAgent random_mgr = ManagerAgent::make_random(2);
  const std::vector<SelectionRecord> selections{{{0, 0}, 1, 1}, {{0, 1}, 2, 2}, {{0, 2}, 1, 3}};
  manager_commit(random_mgr, std::span<const SelectionRecord>(selections), -250.0);
  CHECK_FALSE(random_mgr.memory.has_value());

  ManagerAgent mgr = ManagerAgent::make_ibl(2, quiet_params());
  mgr.memory->clock = 3;
  manager_commit(mgr, std::span<const SelectionRecord>(selections), -250.0);
  REQUIRE(mgr.memory->instance_count() == 3);
  for (const auto& [key, rec] : mgr.memory->sorted_instances()) {
    CHECK(rec.outcome == -250.0);
    CHECK(key.second >= 1);
    CHECK(key.second <= 2);
  }
}

TEST_CASE("a repeated (state, agent) pair in one game reinforces one instance") {
  ManagerAgent mgr = ManagerAgent::make_ibl(2, quiet_params());
  mgr.memory->clock = 5;
  const std::vector<SelectionRecord> selections{{{0, 0}, 1, 1}, {{0, 1}, 2, 2}, {{0, 0}, 1, 4}};
  manager_commit(mgr, std::span<const SelectionRecord>(selections), 90.0);
  const auto* group = mgr.memory->group({0, 0}, 1);
  REQUIRE(group != nullptr);
  REQUIRE(group->size() == 1);
  CHECK(group->front().total_count == 2);
}

TEST_CASE("manager memory holds only (state, agent, outcome) tuples") {
  // the memory's action token type is the agent index; there is no slot for
  // the game action anywhere in the instance key
  static_assert(std::is_same_v<ManagerMemory::Key, InstanceKey<Position, int>>);
  ManagerAgent mgr = ManagerAgent::make_ibl(3, quiet_params());
  CHECK(mgr.agent_tokens() == std::vector<int>{1, 2, 3});
}
