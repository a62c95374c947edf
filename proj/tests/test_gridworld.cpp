#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "delegrid/gridworld.hpp"

using namespace delegrid;

namespace {

GridSpec corridor(int length) {
  // 1 x length strip, start left, goal right
  GridSpec grid;
  grid.rows = 1;
  grid.cols = length;
  grid.start = {0, 0};
  grid.goal = {0, length - 1};
  return grid;
}

}  // namespace

TEST_CASE("generate_grid with zero walls is the open grid") {
  const GridSpec grid = generate_grid(2, 2, 0.0, {0, 0}, {1, 1}, 99);
  REQUIRE(grid.walls.empty());
  REQUIRE(bfs_distances(grid).at(grid.start) == 2);
}

TEST_CASE("generate_grid is deterministic in the seed") {
  const GridSpec a = generate_grid(10, 15, 0.6, {0, 0}, {9, 14}, 7);
  const GridSpec b = generate_grid(10, 15, 0.6, {0, 0}, {9, 14}, 7);
  const GridSpec c = generate_grid(10, 15, 0.6, {0, 0}, {9, 14}, 8);
  REQUIRE(a.same_geometry(b));
  REQUIRE_FALSE(a.same_geometry(c));
}

TEST_CASE("generated grids are connected and respect the wall budget") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const GridSpec grid = generate_grid(10, 15, 0.6, {0, 0}, {9, 14}, seed);
    REQUIRE(bfs_distances(grid).at(grid.goal) == 0);
    REQUIRE(bfs_distances(grid).at(grid.start).has_value());
    const double eligible = 10 * 15 - 2;
    REQUIRE(std::abs(static_cast<double>(grid.walls.size()) - 0.6 * eligible) <= 1.0);
    REQUIRE_FALSE(grid.is_wall(grid.start));
    REQUIRE_FALSE(grid.is_wall(grid.goal));
  }
}

TEST_CASE("generate_grid rejects impossible densities") {
  REQUIRE_THROWS_MATCHES(generate_grid(2, 2, 0.9, {0, 0}, {1, 1}, 1), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == Errc::unreachable_after_retries;
                         }));
}

TEST_CASE("generate_grid validates arguments") {
  REQUIRE_THROWS_AS(generate_grid(1, 5, 0.0, {0, 0}, {0, 4}, 1), Error);
  REQUIRE_THROWS_AS(generate_grid(3, 3, 1.0, {0, 0}, {2, 2}, 1), Error);
  REQUIRE_THROWS_AS(generate_grid(3, 3, 0.0, {0, 0}, {0, 0}, 1), Error);
}

TEST_CASE("step collides into walls and boundaries") {
  GridSpec grid = corridor(3);
  grid.walls.insert({0, 1});
  const StepOutcome into_wall = step(grid, {0, 0}, Action::Right);
  REQUIRE(into_wall.collided);
  REQUIRE(into_wall.new_pos == Position{0, 0});
  REQUIRE_FALSE(into_wall.reached_goal);

  const StepOutcome off_board = step(grid, {0, 0}, Action::Up);
  REQUIRE(off_board.collided);
  REQUIRE(off_board.new_pos == Position{0, 0});
}

TEST_CASE("step into the goal reports it") {
  const GridSpec grid = corridor(3);
  const StepOutcome out = step(grid, {0, 1}, Action::Right);
  REQUIRE_FALSE(out.collided);
  REQUIRE(out.reached_goal);
  REQUIRE(out.new_pos == grid.goal);
}

TEST_CASE("step never leaves the open cells") {
  const GridSpec grid = generate_grid(6, 8, 0.4, {0, 0}, {5, 7}, 123);
  for (Position p : grid.open_cells()) {
    for (Action a : kActions) {
      const StepOutcome out = step(grid, p, a);
      REQUIRE(grid.is_open(out.new_pos));
      if (out.collided) REQUIRE(out.new_pos == p);
    }
  }
}

TEST_CASE("bfs distances in a corridor") {
  const GridSpec grid = corridor(5);
  const DistanceMap dist = bfs_distances(grid);
  for (int c = 0; c < 5; ++c) REQUIRE(dist.at({0, c}) == 4 - c);
}

TEST_CASE("bfs marks enclosed cells unreachable") {
  // 3x3 with the middle column walled except the top, enclosing nothing;
  // instead enclose (2,0) fully.
  GridSpec grid;
  grid.rows = 3;
  grid.cols = 3;
  grid.start = {0, 0};
  grid.goal = {2, 2};
  grid.walls.insert({1, 0});
  grid.walls.insert({2, 1});
  const DistanceMap dist = bfs_distances(grid);
  REQUIRE_FALSE(dist.at({2, 0}).has_value());
  REQUIRE(dist.at(grid.start).has_value());
  REQUIRE_FALSE(dist.at({1, 0}).has_value());  // walls have no distance
}

TEST_CASE("bfs hand oracle on a 3x3 grid with center wall") {
  GridSpec grid;
  grid.rows = 3;
  grid.cols = 3;
  grid.start = {0, 0};
  grid.goal = {2, 2};
  grid.walls.insert({1, 1});
  REQUIRE(bfs_distances(grid).at(grid.start) == 4);
}

TEST_CASE("add_error_states places the requested counts") {
  const GridSpec base = generate_grid(6, 8, 0.4, {0, 0}, {5, 7}, 5);
  const std::vector<ErrorTag> tags = error_tag_universe(2);
  REQUIRE(tags.size() == 3);

  const GridSpec unchanged = add_error_states(base, 0, tags, 11);
  REQUIRE(unchanged.error_cells.empty());

  const GridSpec leveled = add_error_states(base, 2, tags, 11);
  REQUIRE(leveled.error_cells.size() == 6);
  std::map<std::string, int> per_tag;
  for (const auto& [pos, tag] : leveled.error_cells) {
    ++per_tag[tag.label()];
    REQUIRE(base.is_open(pos));
    REQUIRE(pos != base.start);
    REQUIRE(pos != base.goal);
  }
  REQUIRE(per_tag == std::map<std::string, int>{{"E1", 2}, {"E2", 2}, {"E12", 2}});
  // geometry untouched
  REQUIRE(leveled.walls == base.walls);
  REQUIRE(leveled.start == base.start);
  REQUIRE(leveled.goal == base.goal);
}

TEST_CASE("error placement is incremental across counts") {
  const GridSpec base = generate_grid(6, 8, 0.4, {0, 0}, {5, 7}, 5);
  const std::vector<ErrorTag> tags = error_tag_universe(2);
  const GridSpec small = add_error_states(base, 2, tags, 11);
  const GridSpec large = add_error_states(base, 3, tags, 11);
  for (const auto& [pos, tag] : small.error_cells) {
    auto it = large.error_cells.find(pos);
    REQUIRE(it != large.error_cells.end());
    REQUIRE(it->second == tag);
  }
}

TEST_CASE("add_error_states reports exhausted capacity") {
  const GridSpec base = generate_grid(3, 3, 0.0, {0, 0}, {2, 2}, 1);
  REQUIRE_THROWS_MATCHES(add_error_states(base, 3, error_tag_universe(2), 1), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == Errc::insufficient_open_cells;
                         }));
}

TEST_CASE("render_ascii basics") {
  const GridSpec grid = corridor(3);
  REQUIRE(render_ascii(grid) == "S.G\n");
}

TEST_CASE("render and parse round-trip the geometry") {
  GridSpec grid = generate_grid(6, 8, 0.4, {0, 0}, {5, 7}, 21);
  grid = add_error_states(grid, 2, error_tag_universe(2), 21);
  const GridSpec parsed = parse_ascii(render_ascii(grid));
  REQUIRE(parsed.same_geometry(grid));
}

TEST_CASE("render uses distinct glyphs per error type") {
  GridSpec grid = corridor(6);
  grid.error_cells.emplace(Position{0, 1}, ErrorTag::of({1}));
  grid.error_cells.emplace(Position{0, 2}, ErrorTag::of({2}));
  grid.error_cells.emplace(Position{0, 3}, ErrorTag::of({1, 2}));
  REQUIRE(render_ascii(grid) == "S12J.G\n");
}

TEST_CASE("parse_ascii rejects malformed boards") {
  REQUIRE_THROWS_AS(parse_ascii(""), Error);
  REQUIRE_THROWS_AS(parse_ascii("S.\n.G.\n"), Error);   // ragged
  REQUIRE_THROWS_AS(parse_ascii("S..\n...\n"), Error);  // no goal
  REQUIRE_THROWS_AS(parse_ascii("S?G\n"), Error);
}

TEST_CASE("error tag universe generalizes by team size") {
  const auto tags = error_tag_universe(3);
  REQUIRE(tags.size() == 7);
  REQUIRE(tags.front().label() == "E1");
  REQUIRE(tags.back().label() == "E123");
}
