#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "delegrid/delegation.hpp"
#include "delegrid/errors.hpp"
#include "delegrid/gridworld.hpp"
#include "delegrid/ibl.hpp"
#include "delegrid/nav_agents.hpp"
#include "delegrid/rng.hpp"

namespace delegrid {

struct EpisodeConfig {
  int l_max = 150;
  Mode mode = Mode::Train;
};

struct TrajectoryEntry {
  Position pos;
  std::optional<int> agent;
  Action action = Action::Up;
  bool error_injected = false;
};

struct EpisodeResult {
  bool success = false;
  int length = 0;
  std::vector<TrajectoryEntry> trajectory;
  std::vector<SelectionRecord> selections;  // team episodes only
};

/// Game outcome reward shared by every instance in the trajectory:
/// 100 - length on success, -100 - length on failure.
inline double trajectory_reward(bool success, int length) {
  return (success ? 100.0 : -100.0) - static_cast<double>(length);
}

/// Uniform draw from the actions that take the team off every optimal path:
/// those whose successor has no goal distance or a distance not smaller than
/// the current cell's. Collisions keep the distance unchanged, so they
/// qualify. Falls back to a uniform action if nothing qualifies.
inline Action error_action(const GridSpec& grid, const DistanceMap& dist, Position s, Rng& rng) {
  const std::optional<int> here = dist.at(s);
  Action off_path[4];
  std::size_t count = 0;
  for (Action a : kActions) {
    const std::optional<int> there = dist.at(step(grid, s, a).new_pos);
    if (!here || !there || *there >= *here) off_path[count++] = a;
  }
  if (count == 0) return kActions[rng.uniform_index(kActions.size())];
  return off_path[rng.uniform_index(count)];
}

inline Action error_action(const GridSpec& grid, Position s, Rng& rng) {
  return error_action(grid, bfs_distances(grid), s, rng);
}

/// The agent's move at s: in its own error cells it deviates with
/// probability error_prob, taking an off-path action; everywhere else,
/// including other agents' error cells, it follows its policy.
inline std::pair<Action, bool> resolve_action(const NavAgent& agent, const GridSpec& grid,
                                              const DistanceMap& dist, Position s, Mode mode,
                                              std::int64_t now, Rng& rng) {
  const ErrorTag* tag = grid.tag_at(s);
  if (tag != nullptr && tag->affects(agent.id) && agent.error_prob > 0.0 &&
      rng.bernoulli(agent.error_prob)) {
    return {error_action(grid, dist, s, rng), true};
  }
  return {nav_policy_action(agent, s, mode, now, rng), false};
}

/// One training episode on an error-free grid. Q agents update online with
/// per-step rewards; IBL agents buffer their decisions and commit the whole
/// trajectory with the game reward at the end.
inline EpisodeResult run_nav_training_episode(const GridSpec& grid, NavAgent& agent,
                                              const EpisodeConfig& cfg, Rng& rng) {
  if (!grid.error_cells.empty())
    fail(Errc::invariant_violation, "navigating agents train on error-free grids");
  EpisodeResult result;
  std::vector<NavMemory::Step> buffered;
  Position pos = grid.start;
  for (int move = 1; move <= cfg.l_max; ++move) {
    std::int64_t now = 0;
    if (agent.kind() == AgentKind::Ibl) now = agent.ibl().memory.advance_clock();
    const Action a = nav_policy_action(agent, pos, Mode::Train, now, rng);
    const StepOutcome out = step(grid, pos, a);
    const bool timed_out = move == cfg.l_max && !out.reached_goal;
    if (agent.kind() == AgentKind::Q) {
      const double r = q_step_reward(out, timed_out);
      q_update(agent.q().table, pos, a, r, out.new_pos, out.reached_goal || timed_out,
               agent.q().params);
    } else {
      buffered.push_back({pos, a, now});
    }
    result.trajectory.push_back({pos, agent.id, a, false});
    pos = out.new_pos;
    if (out.reached_goal) {
      result.success = true;
      result.length = move;
      break;
    }
  }
  if (!result.success) result.length = cfg.l_max;
  if (agent.kind() == AgentKind::Ibl) {
    commit_trajectory(agent.ibl().memory, std::span<const NavMemory::Step>(buffered),
                      trajectory_reward(result.success, result.length));
  }
  return result;
}

/// Runs `episodes` training episodes, annealing Q schedules once per
/// completed episode.
inline void train_nav_agent(const GridSpec& grid, NavAgent& agent, int episodes,
                            const EpisodeConfig& cfg, Rng& rng) {
  for (int e = 0; e < episodes; ++e) {
    run_nav_training_episode(grid, agent, cfg, rng);
    if (agent.kind() == AgentKind::Q) decay_schedule(agent.q().params);
  }
}

namespace detail {

/// Frozen agents read activations at a fixed tick just past their clock.
inline std::int64_t frozen_now(const NavAgent& agent) {
  return agent.kind() == AgentKind::Ibl ? agent.ibl().memory.clock + 1 : 0;
}

}  // namespace detail

/// One episode of the frozen agent alone on a grid that may carry its error
/// cells. The agent is never mutated.
inline EpisodeResult run_solo_episode(const GridSpec& grid, const DistanceMap& dist,
                                      const NavAgent& agent, int l_max, Rng& rng) {
  EpisodeResult result;
  const std::int64_t now = detail::frozen_now(agent);
  Position pos = grid.start;
  for (int move = 1; move <= l_max; ++move) {
    const auto [a, injected] = resolve_action(agent, grid, dist, pos, Mode::Frozen, now, rng);
    const StepOutcome out = step(grid, pos, a);
    result.trajectory.push_back({pos, agent.id, a, injected});
    pos = out.new_pos;
    if (out.reached_goal) {
      result.success = true;
      result.length = move;
      break;
    }
  }
  if (!result.success) result.length = l_max;
  return result;
}

inline std::vector<EpisodeResult> evaluate_solo(const GridSpec& grid, const NavAgent& agent,
                                                int episodes, const EpisodeConfig& cfg, Rng& rng) {
  const DistanceMap dist = bfs_distances(grid);
  std::vector<EpisodeResult> results;
  results.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) results.push_back(run_solo_episode(grid, dist, agent, cfg.l_max, rng));
  return results;
}

/// One team episode: each step the manager picks the deciding agent, that
/// agent resolves the move (possibly an injected error), and the shared
/// token advances. In Train mode the manager clock ticks per decision and
/// the trajectory is committed with the game reward; in Frozen mode the
/// manager memory is left untouched. Navigating agents are frozen either way.
inline EpisodeResult run_team_episode(const GridSpec& grid, const DistanceMap& dist,
                                      const std::vector<NavAgent>& agents, ManagerAgent& mgr,
                                      const EpisodeConfig& cfg, Rng& rng) {
  if (static_cast<int>(agents.size()) != mgr.team_size)
    fail(Errc::invariant_violation, "team size does not match manager");
  EpisodeResult result;
  std::vector<std::int64_t> nav_nows;
  nav_nows.reserve(agents.size());
  for (const NavAgent& agent : agents) nav_nows.push_back(detail::frozen_now(agent));

  Position pos = grid.start;
  for (int move = 1; move <= cfg.l_max; ++move) {
    std::int64_t now = move;
    if (mgr.kind == ManagerKind::Ibl) {
      now = cfg.mode == Mode::Train ? mgr.memory->advance_clock() : mgr.memory->clock + 1;
    }
    const int chosen = manager_select(mgr, grid, pos, now, rng);
    const NavAgent& actor = agents[static_cast<std::size_t>(chosen - 1)];
    const auto [a, injected] =
        resolve_action(actor, grid, dist, pos, Mode::Frozen, nav_nows[chosen - 1], rng);
    const StepOutcome out = step(grid, pos, a);
    result.selections.push_back({pos, chosen, now});
    result.trajectory.push_back({pos, chosen, a, injected});
    pos = out.new_pos;
    if (out.reached_goal) {
      result.success = true;
      result.length = move;
      break;
    }
  }
  if (!result.success) result.length = cfg.l_max;
  if (cfg.mode == Mode::Train && mgr.kind == ManagerKind::Ibl) {
    manager_commit(mgr, std::span<const SelectionRecord>(result.selections),
                   trajectory_reward(result.success, result.length));
  }
  return result;
}

inline void train_manager(const GridSpec& grid, const std::vector<NavAgent>& agents,
                          ManagerAgent& mgr, int games, const EpisodeConfig& cfg, Rng& rng) {
  if (mgr.kind != ManagerKind::Ibl) fail(Errc::kind_mismatch, "only IBL managers train");
  const DistanceMap dist = bfs_distances(grid);
  EpisodeConfig train_cfg{cfg.l_max, Mode::Train};
  for (int g = 0; g < games; ++g) run_team_episode(grid, dist, agents, mgr, train_cfg, rng);
}

/// Team evaluation with a frozen manager: selections are logged but nothing
/// is learned.
inline std::vector<EpisodeResult> evaluate_team(const GridSpec& grid,
                                                const std::vector<NavAgent>& agents,
                                                ManagerAgent& mgr, int episodes,
                                                const EpisodeConfig& cfg, Rng& rng) {
  const DistanceMap dist = bfs_distances(grid);
  EpisodeConfig eval_cfg{cfg.l_max, Mode::Frozen};
  std::vector<EpisodeResult> results;
  results.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e)
    results.push_back(run_team_episode(grid, dist, agents, mgr, eval_cfg, rng));
  return results;
}

}  // namespace delegrid
