#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "delegrid/errors.hpp"
#include "delegrid/gridworld.hpp"
#include "delegrid/ibl.hpp"
#include "delegrid/rng.hpp"

namespace delegrid {

enum class ManagerKind { Ibl, Random };

/// Manager memory is keyed by (cell, chosen agent index). The manager never
/// sees the game action the delegated agent takes, only which agent it
/// picked and how the game ended.
using ManagerMemory = IblMemory<Position, int>;

struct SelectionRecord {
  Position state;
  int chosen = 0;
  std::int64_t time = 0;
};

/// Bucket label for selection statistics: the cell's error tag label, or
/// "plain" for untagged cells.
inline std::string selection_bucket(const GridSpec& grid, Position s) {
  const ErrorTag* tag = grid.tag_at(s);
  return tag ? tag->label() : std::string("plain");
}

struct ManagerAgent {
  ManagerKind kind = ManagerKind::Random;
  int team_size = 2;
  std::optional<ManagerMemory> memory;  // Ibl kind only
  std::map<std::pair<std::string, int>, std::int64_t> selection_log;

  static ManagerAgent make_random(int team_size) {
    return {ManagerKind::Random, team_size, std::nullopt, {}};
  }
  static ManagerAgent make_ibl(int team_size, IblParams params) {
    return {ManagerKind::Ibl, team_size, ManagerMemory{params}, {}};
  }

  std::vector<int> agent_tokens() const {
    std::vector<int> ids(static_cast<std::size_t>(team_size));
    for (int i = 0; i < team_size; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
    return ids;
  }
};

/// Picks the agent index (1-based) that decides this step. Random managers
/// draw uniformly; IBL managers take the best blended value over the agent
/// tokens. The pick is tallied in selection_log under the cell's bucket.
inline int manager_select(ManagerAgent& mgr, const GridSpec& grid, Position s, std::int64_t now,
                          Rng& rng) {
  int chosen;
  if (mgr.team_size == 1) {
    chosen = 1;  // degenerate delegation consumes no draws
  } else if (mgr.kind == ManagerKind::Random) {
    chosen = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(mgr.team_size)));
  } else {
    const std::vector<int> tokens = mgr.agent_tokens();
    chosen = choose_best(*mgr.memory, s, std::span<const int>(tokens), now, rng);
  }
  ++mgr.selection_log[{selection_bucket(grid, s), chosen}];
  return chosen;
}

/// End-of-game credit assignment over (state, chosen agent) pairs. Random
/// managers learn nothing.
inline void manager_commit(ManagerAgent& mgr, std::span<const SelectionRecord> selections,
                           double outcome) {
  if (mgr.kind == ManagerKind::Random) return;
  std::vector<TrajectoryStep<Position, int>> steps;
  steps.reserve(selections.size());
  for (const auto& sel : selections) steps.push_back({sel.state, sel.chosen, sel.time});
  commit_trajectory(*mgr.memory, std::span<const TrajectoryStep<Position, int>>(steps), outcome);
}

}  // namespace delegrid
