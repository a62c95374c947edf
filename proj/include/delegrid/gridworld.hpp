#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "delegrid/errors.hpp"
#include "delegrid/rng.hpp"

namespace delegrid {

/// Interior cell coordinate, 0-based. Boundary walls are implicit and never
/// stored, so every Position names an interior cell.
struct Position {
  int row = 0;
  int col = 0;
  auto operator<=>(const Position&) const = default;
};

enum class Action { Up, Down, Left, Right };

}  // namespace delegrid

template <>
struct std::hash<delegrid::Position> {
  std::size_t operator()(const delegrid::Position& p) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.row))
                                       << 32) |
                                      static_cast<std::uint32_t>(p.col));
  }
};

namespace delegrid {

inline constexpr std::array<Action, 4> kActions{Action::Up, Action::Down, Action::Left,
                                                Action::Right};

inline const char* to_string(Action a) {
  switch (a) {
    case Action::Up: return "Up";
    case Action::Down: return "Down";
    case Action::Left: return "Left";
    case Action::Right: return "Right";
  }
  return "?";
}

inline Action action_from_string(std::string_view s) {
  if (s == "Up") return Action::Up;
  if (s == "Down") return Action::Down;
  if (s == "Left") return Action::Left;
  if (s == "Right") return Action::Right;
  fail(Errc::parse_error, "unknown action '" + std::string(s) + "'");
}

inline Position offset(Position p, Action a) {
  switch (a) {
    case Action::Up: return {p.row - 1, p.col};
    case Action::Down: return {p.row + 1, p.col};
    case Action::Left: return {p.row, p.col - 1};
    case Action::Right: return {p.row, p.col + 1};
  }
  return p;
}

/// Which agents (1-based indices) may err in a tagged cell. A multi-agent
/// tag is a joint error cell.
struct ErrorTag {
  std::vector<int> agents;  // sorted, unique, nonempty

  static ErrorTag of(std::vector<int> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.empty()) fail(Errc::invariant_violation, "error tag must name at least one agent");
    if (ids.front() < 1) fail(Errc::invariant_violation, "agent indices are 1-based");
    return ErrorTag{std::move(ids)};
  }

  bool affects(int agent) const {
    return std::binary_search(agents.begin(), agents.end(), agent);
  }

  /// Canonical label, e.g. {1} -> "E1", {1,2} -> "E12".
  std::string label() const {
    std::string s = "E";
    for (int a : agents) s += std::to_string(a);
    return s;
  }

  bool operator==(const ErrorTag&) const = default;
  auto operator<=>(const ErrorTag&) const = default;
};

/// All nonempty agent subsets for a team of size n, singles first.
/// For n = 2 this is the {E1, E2, E12} universe.
inline std::vector<ErrorTag> error_tag_universe(int team_size) {
  std::vector<ErrorTag> tags;
  std::vector<std::vector<int>> by_size(static_cast<std::size_t>(team_size) + 1);
  for (std::uint32_t mask = 1; mask < (1u << team_size); ++mask) {
    std::vector<int> ids;
    for (int i = 0; i < team_size; ++i) {
      if (mask & (1u << i)) ids.push_back(i + 1);
    }
    tags.push_back(ErrorTag::of(std::move(ids)));
  }
  std::sort(tags.begin(), tags.end(), [](const ErrorTag& a, const ErrorTag& b) {
    if (a.agents.size() != b.agents.size()) return a.agents.size() < b.agents.size();
    return a.agents < b.agents;
  });
  return tags;
}

struct StepOutcome {
  Position new_pos;
  bool collided = false;
  bool reached_goal = false;
};

struct GridSpec {
  int rows = 0;
  int cols = 0;
  std::set<Position> walls;
  Position start;
  Position goal;
  std::map<Position, ErrorTag> error_cells;
  double wall_ratio = 0.0;
  std::uint64_t seed = 0;

  bool in_bounds(Position p) const {
    return p.row >= 0 && p.row < rows && p.col >= 0 && p.col < cols;
  }
  bool is_wall(Position p) const { return walls.count(p) > 0; }
  bool is_open(Position p) const { return in_bounds(p) && !is_wall(p); }

  const ErrorTag* tag_at(Position p) const {
    auto it = error_cells.find(p);
    return it == error_cells.end() ? nullptr : &it->second;
  }

  /// Open cells in row-major order.
  std::vector<Position> open_cells() const {
    std::vector<Position> cells;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        if (!is_wall({r, c})) cells.push_back({r, c});
    return cells;
  }

  bool same_geometry(const GridSpec& o) const {
    return rows == o.rows && cols == o.cols && walls == o.walls && start == o.start &&
           goal == o.goal && error_cells == o.error_cells;
  }
};

/// Shortest-path-to-goal lengths for open cells; unreachable cells are absent.
class DistanceMap {
 public:
  DistanceMap() = default;
  DistanceMap(int rows, int cols)
      : rows_(rows), cols_(cols), dist_(static_cast<std::size_t>(rows) * cols, -1) {}

  std::optional<int> at(Position p) const {
    if (p.row < 0 || p.row >= rows_ || p.col < 0 || p.col >= cols_) return std::nullopt;
    int d = dist_[static_cast<std::size_t>(p.row) * cols_ + p.col];
    if (d < 0) return std::nullopt;
    return d;
  }

  void set(Position p, int d) { dist_[static_cast<std::size_t>(p.row) * cols_ + p.col] = d; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> dist_;
};

inline StepOutcome step(const GridSpec& grid, Position pos, Action action) {
  Position next = offset(pos, action);
  if (!grid.is_open(next)) {
    return {pos, true, pos == grid.goal};
  }
  return {next, false, next == grid.goal};
}

inline DistanceMap bfs_distances(const GridSpec& grid) {
  DistanceMap dist(grid.rows, grid.cols);
  std::deque<Position> queue;
  dist.set(grid.goal, 0);
  queue.push_back(grid.goal);
  while (!queue.empty()) {
    Position p = queue.front();
    queue.pop_front();
    int d = *dist.at(p);
    for (Action a : kActions) {
      Position q = offset(p, a);
      if (grid.is_open(q) && !dist.at(q)) {
        dist.set(q, d + 1);
        queue.push_back(q);
      }
    }
  }
  return dist;
}

inline void validate_grid(const GridSpec& grid) {
  if (grid.rows < 1 || grid.cols < 1) fail(Errc::invariant_violation, "empty grid");
  if (grid.start == grid.goal) fail(Errc::invariant_violation, "start equals goal");
  if (!grid.in_bounds(grid.start) || !grid.in_bounds(grid.goal))
    fail(Errc::invariant_violation, "start or goal out of bounds");
  if (grid.is_wall(grid.start) || grid.is_wall(grid.goal))
    fail(Errc::invariant_violation, "start or goal is a wall");
  if (grid.error_cells.count(grid.start) || grid.error_cells.count(grid.goal))
    fail(Errc::invariant_violation, "start or goal is an error cell");
  for (const auto& [pos, tag] : grid.error_cells) {
    if (!grid.is_open(pos)) fail(Errc::invariant_violation, "error cell on a wall or out of bounds");
    if (tag.agents.empty()) fail(Errc::invariant_violation, "empty error tag");
  }
  for (Position w : grid.walls) {
    if (!grid.in_bounds(w)) fail(Errc::invariant_violation, "wall out of bounds");
  }
  if (!bfs_distances(grid).at(grid.start))
    fail(Errc::invariant_violation, "no path from start to goal");
}

namespace detail {

inline bool connected(const GridSpec& grid) { return bfs_distances(grid).at(grid.start).has_value(); }

/// Cells of a uniformly random monotone staircase path from start to goal,
/// excluding the endpoints. Such a path has minimal length, which leaves the
/// largest possible number of cells free for walls.
inline std::set<Position> carve_path_cells(int rows, int cols, Position start, Position goal,
                                           Rng& rng) {
  (void)rows;
  (void)cols;
  const int dr = goal.row - start.row;
  const int dc = goal.col - start.col;
  std::vector<Action> moves;
  moves.insert(moves.end(), static_cast<std::size_t>(std::abs(dr)),
               dr >= 0 ? Action::Down : Action::Up);
  moves.insert(moves.end(), static_cast<std::size_t>(std::abs(dc)),
               dc >= 0 ? Action::Right : Action::Left);
  rng.shuffle(moves);
  std::set<Position> cells;
  Position p = start;
  for (Action a : moves) {
    p = offset(p, a);
    if (p != goal) cells.insert(p);
  }
  return cells;
}

}  // namespace detail

/// Random connected layout with round(wall_ratio * eligible) walls, where the
/// eligible cells are every interior cell except start and goal.
///
/// Layouts are drawn by uniform rejection sampling, capped at 10,000 attempts.
/// Dense ratios on elongated grids can make a uniform connected draw
/// vanishingly rare, so after the cap a random minimal start-goal path is
/// carved and kept open while the full wall budget is placed on the remaining
/// cells. Throws UNREACHABLE_AFTER_RETRIES only when even that cannot fit.
inline GridSpec generate_grid(int rows, int cols, double wall_ratio, Position start, Position goal,
                              std::uint64_t seed) {
  if (rows < 2 || cols < 2) fail(Errc::invariant_violation, "grid must be at least 2x2");
  if (wall_ratio < 0.0 || wall_ratio >= 1.0)
    fail(Errc::invariant_violation, "wall_ratio must be in [0, 1)");
  if (start == goal) fail(Errc::invariant_violation, "start equals goal");

  GridSpec grid;
  grid.rows = rows;
  grid.cols = cols;
  grid.start = start;
  grid.goal = goal;
  grid.wall_ratio = wall_ratio;
  grid.seed = seed;
  if (!grid.in_bounds(start) || !grid.in_bounds(goal))
    fail(Errc::invariant_violation, "start or goal out of bounds");

  std::vector<Position> eligible;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      Position p{r, c};
      if (p != start && p != goal) eligible.push_back(p);
    }
  const auto wall_count =
      static_cast<std::size_t>(std::llround(wall_ratio * static_cast<double>(eligible.size())));

  Rng rng(derive_seed(seed, "grid-gen", rows, cols));
  constexpr int kMaxAttempts = 10000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<Position> pool = eligible;
    rng.shuffle(pool);
    grid.walls.clear();
    grid.walls.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(wall_count));
    if (detail::connected(grid)) return grid;
  }

  // Carve-and-fill fallback.
  std::set<Position> path = detail::carve_path_cells(rows, cols, start, goal, rng);
  std::vector<Position> pool;
  for (Position p : eligible)
    if (!path.count(p)) pool.push_back(p);
  if (wall_count <= pool.size()) {
    rng.shuffle(pool);
    grid.walls.clear();
    grid.walls.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(wall_count));
    if (detail::connected(grid)) return grid;
  }
  fail(Errc::unreachable_after_retries,
       "no connected layout found; wall_ratio too high for this geometry");
}

/// Tags count_per_type open cells with each tag in types. Placement over the
/// same base grid and seed is incremental: the cells used for count k are a
/// prefix of the cells used for count k+1.
inline GridSpec add_error_states(const GridSpec& grid, int count_per_type,
                                 const std::vector<ErrorTag>& types, std::uint64_t seed) {
  if (count_per_type < 0) fail(Errc::invariant_violation, "negative error count");
  GridSpec out = grid;
  if (count_per_type == 0 || types.empty()) return out;

  std::vector<Position> pool;
  for (Position p : grid.open_cells()) {
    if (p != grid.start && p != grid.goal && !grid.error_cells.count(p)) pool.push_back(p);
  }
  const std::size_t needed = static_cast<std::size_t>(count_per_type) * types.size();
  if (needed > pool.size()) {
    fail(Errc::insufficient_open_cells,
         "need " + std::to_string(needed) + " open cells, have " + std::to_string(pool.size()));
  }
  Rng rng(derive_seed(seed, "error-placement"));
  rng.shuffle(pool);
  std::size_t next = 0;
  for (int round = 0; round < count_per_type; ++round) {
    for (const ErrorTag& tag : types) out.error_cells.emplace(pool[next++], tag);
  }
  return out;
}

/// One row of text per grid row. 'S' start, 'G' goal, '#' wall, '.' open,
/// a digit for a single-agent error cell, 'J' for a joint error cell.
inline std::string render_ascii(const GridSpec& grid) {
  std::string out;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      Position p{r, c};
      char glyph = '.';
      if (p == grid.start) {
        glyph = 'S';
      } else if (p == grid.goal) {
        glyph = 'G';
      } else if (grid.is_wall(p)) {
        glyph = '#';
      } else if (const ErrorTag* tag = grid.tag_at(p)) {
        glyph = tag->agents.size() == 1 && tag->agents[0] <= 9
                    ? static_cast<char>('0' + tag->agents[0])
                    : 'J';
      }
      out += glyph;
    }
    out += '\n';
  }
  return out;
}

/// Inverse of render_ascii for grid geometry. 'J' parses as the two-agent
/// joint tag; generation metadata (wall_ratio, seed) is not encoded in the
/// board, so the realized wall fraction is reported and the seed is zero.
inline GridSpec parse_ascii(const std::string& text) {
  GridSpec grid;
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) fail(Errc::parse_error, "empty board");
  grid.rows = static_cast<int>(lines.size());
  grid.cols = static_cast<int>(lines[0].size());
  bool saw_start = false;
  bool saw_goal = false;
  for (int r = 0; r < grid.rows; ++r) {
    if (static_cast<int>(lines[r].size()) != grid.cols)
      fail(Errc::parse_error, "ragged board row " + std::to_string(r));
    for (int c = 0; c < grid.cols; ++c) {
      Position p{r, c};
      char glyph = lines[r][static_cast<std::size_t>(c)];
      switch (glyph) {
        case 'S': grid.start = p; saw_start = true; break;
        case 'G': grid.goal = p; saw_goal = true; break;
        case '#': grid.walls.insert(p); break;
        case '.': break;
        case 'J': grid.error_cells.emplace(p, ErrorTag::of({1, 2})); break;
        default:
          if (glyph >= '1' && glyph <= '9') {
            grid.error_cells.emplace(p, ErrorTag::of({glyph - '0'}));
          } else {
            fail(Errc::parse_error, std::string("unknown glyph '") + glyph + "'");
          }
      }
    }
  }
  if (!saw_start || !saw_goal) fail(Errc::parse_error, "board must contain S and G");
  const auto eligible = static_cast<double>(grid.rows) * grid.cols - 2.0;
  grid.wall_ratio = eligible > 0 ? static_cast<double>(grid.walls.size()) / eligible : 0.0;
  validate_grid(grid);
  return grid;
}

}  // namespace delegrid
