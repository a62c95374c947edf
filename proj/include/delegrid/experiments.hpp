#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "delegrid/delegation.hpp"
#include "delegrid/errors.hpp"
#include "delegrid/gridworld.hpp"
#include "delegrid/nav_agents.hpp"
#include "delegrid/parallel.hpp"
#include "delegrid/rng.hpp"
#include "delegrid/simulation.hpp"

namespace delegrid {

struct TeamSlot {
  AgentKind kind = AgentKind::Q;
  double error_prob = 0.0;
};

struct ScenarioSpec {
  std::string label;
  std::vector<TeamSlot> team;
};

struct SweepConfig {
  int grids = 3;
  int rows = 6;
  int cols = 8;
  double wall_ratio = 0.4;
  int team_size = 2;
  std::vector<int> level_counts{1, 2, 3, 4, 5};
  int nav_episodes = 20000;
  int manager_games = 5000;
  int eval_episodes = 500;
  int l_max = 50;
  int replications = 5;
  std::uint64_t master_seed = 1;

  void validate() const {
    if (grids < 1) fail(Errc::invariant_violation, "need at least one grid");
    if (rows < 2 || cols < 2) fail(Errc::invariant_violation, "grid must be at least 2x2");
    if (wall_ratio < 0.0 || wall_ratio >= 1.0)
      fail(Errc::invariant_violation, "wall_ratio must be in [0, 1)");
    if (team_size < 1) fail(Errc::invariant_violation, "team_size must be >= 1");
    if (level_counts.empty()) fail(Errc::invariant_violation, "need at least one level");
    for (std::size_t i = 0; i + 1 < level_counts.size(); ++i)
      if (level_counts[i] >= level_counts[i + 1])
        fail(Errc::invariant_violation, "level_counts must be strictly increasing");
    if (level_counts.front() < 0) fail(Errc::invariant_violation, "levels must be >= 0");
    if (nav_episodes < 0 || manager_games < 0)
      fail(Errc::invariant_violation, "negative training counts");
    if (eval_episodes < 1 || replications < 1 || l_max < 1)
      fail(Errc::invariant_violation, "eval_episodes, replications and l_max must be >= 1");
  }
};

/// One measured cell of the sweep: a (grid, error level, scenario, condition)
/// combination pooled over replications and evaluation episodes.
/// selection_freq maps (error-tag label or "plain", agent index) to the
/// fraction of that bucket's visits in which the agent was selected; it is
/// empty for solo conditions and omits buckets that were never visited.
struct LevelRecord {
  int grid_id = 0;
  int level = 0;
  std::string scenario;
  std::string condition;
  int episodes = 0;
  double mean_length = 0.0;
  double length_variance = 0.0;
  double success_rate = 0.0;
  std::map<std::pair<std::string, int>, double> selection_freq;
};

struct AggregateRecord {
  std::string scenario;
  int level = 0;
  std::string condition;
  double mean = 0.0;      // of per-grid mean lengths
  double variance = 0.0;  // sample variance across grids
};

/// Cross-grid mean of a selection frequency, for the preference charts.
struct SelectionAggregate {
  std::string scenario;
  int level = 0;
  std::string tag;
  int agent = 0;
  double mean_freq = 0.0;
};

struct GridSuiteEntry {
  int grid_id = 0;
  GridSpec base;
  std::vector<std::pair<int, GridSpec>> levels;  // (per-type count, grid)
  std::vector<std::string> warnings;
};

inline std::string solo_condition(int agent_id) { return "solo-" + std::to_string(agent_id); }
inline constexpr const char* kRandomManagerCondition = "random-mgr";
inline constexpr const char* kIblManagerCondition = "ibl-mgr";

inline std::vector<std::string> condition_labels(int team_size) {
  std::vector<std::string> labels;
  for (int i = 1; i <= team_size; ++i) labels.push_back(solo_condition(i));
  labels.emplace_back(kRandomManagerCondition);
  labels.emplace_back(kIblManagerCondition);
  return labels;
}

/// Error-free base grids plus one variant per level, all derived from the
/// master seed. Placement is incremental across levels for a given grid.
/// Levels that no longer fit are dropped with a warning entry.
inline std::vector<GridSuiteEntry> build_grid_suite(const SweepConfig& cfg) {
  cfg.validate();
  const std::vector<ErrorTag> tags = error_tag_universe(cfg.team_size);
  std::vector<GridSuiteEntry> suite;
  suite.reserve(static_cast<std::size_t>(cfg.grids));
  for (int g = 0; g < cfg.grids; ++g) {
    GridSuiteEntry entry;
    entry.grid_id = g;
    entry.base = generate_grid(cfg.rows, cfg.cols, cfg.wall_ratio, {0, 0},
                               {cfg.rows - 1, cfg.cols - 1},
                               derive_seed(cfg.master_seed, "grid", g));
    const std::uint64_t error_seed = derive_seed(cfg.master_seed, "errors", g);
    for (int level : cfg.level_counts) {
      try {
        entry.levels.emplace_back(level, add_error_states(entry.base, level, tags, error_seed));
      } catch (const Error& e) {
        if (e.code() != Errc::insufficient_open_cells) throw;
        entry.warnings.push_back("grid " + std::to_string(g) + ": levels from " +
                                 std::to_string(level) + " truncated (" + e.what() + ")");
        break;
      }
    }
    suite.push_back(std::move(entry));
  }
  return suite;
}

namespace detail {

/// Integer sufficient statistics for one replication of one cell; integer
/// sums make the reduction exact and independent of merge order.
struct CellStats {
  std::int64_t episodes = 0;
  std::int64_t successes = 0;
  std::int64_t length_sum = 0;
  std::int64_t length_sq_sum = 0;
  std::map<std::pair<std::string, int>, std::int64_t> selection_counts;
  std::map<std::string, std::int64_t> bucket_visits;

  void absorb(const EpisodeResult& episode, const GridSpec& grid) {
    ++episodes;
    if (episode.success) ++successes;
    const auto len = static_cast<std::int64_t>(episode.length);
    length_sum += len;
    length_sq_sum += len * len;
    for (const SelectionRecord& sel : episode.selections) {
      const std::string bucket = selection_bucket(grid, sel.state);
      ++selection_counts[{bucket, sel.chosen}];
      ++bucket_visits[bucket];
    }
  }

  void merge(const CellStats& other) {
    episodes += other.episodes;
    successes += other.successes;
    length_sum += other.length_sum;
    length_sq_sum += other.length_sq_sum;
    for (const auto& [key, n] : other.selection_counts) selection_counts[key] += n;
    for (const auto& [key, n] : other.bucket_visits) bucket_visits[key] += n;
  }
};

inline LevelRecord finalize_cell(int grid_id, int level, const std::string& scenario,
                                 const std::string& condition, const CellStats& stats) {
  LevelRecord rec;
  rec.grid_id = grid_id;
  rec.level = level;
  rec.scenario = scenario;
  rec.condition = condition;
  rec.episodes = static_cast<int>(stats.episodes);
  const auto n = static_cast<double>(stats.episodes);
  rec.mean_length = static_cast<double>(stats.length_sum) / n;
  rec.length_variance =
      stats.episodes > 1
          ? (static_cast<double>(stats.length_sq_sum) -
             static_cast<double>(stats.length_sum) * static_cast<double>(stats.length_sum) / n) /
                (n - 1.0)
          : 0.0;
  rec.success_rate = static_cast<double>(stats.successes) / n;
  for (const auto& [key, count] : stats.selection_counts) {
    rec.selection_freq[key] =
        static_cast<double>(count) / static_cast<double>(stats.bucket_visits.at(key.first));
  }
  return rec;
}

inline std::vector<NavAgent> scenario_team(const std::vector<NavAgent>& trained,
                                           const ScenarioSpec& scenario) {
  std::vector<NavAgent> team = trained;
  for (std::size_t i = 0; i < team.size(); ++i) team[i].error_prob = scenario.team[i].error_prob;
  return team;
}

}  // namespace detail

/// Trains one navigating agent for a team slot on the error-free base grid.
/// The stream is derived from (master, grid, slot, kind) only, so scenarios
/// sharing a slot kind share the trained policy.
inline NavAgent train_slot_agent(const GridSpec& base, int grid_id, int slot, AgentKind kind,
                                 const SweepConfig& cfg, const IblParams& ibl_params,
                                 const QParams& q_params) {
  NavAgent agent = kind == AgentKind::Q ? NavAgent::make_q(slot + 1, q_params)
                                        : NavAgent::make_ibl(slot + 1, ibl_params);
  Rng rng(derive_seed(cfg.master_seed, "nav", grid_id, slot + 1, to_string(kind)));
  train_nav_agent(base, agent, cfg.nav_episodes, {cfg.l_max, Mode::Train}, rng);
  return agent;
}

/// One replication of one (grid, level, scenario, condition) cell, on its
/// own derived streams. `team` carries the trained frozen policies with the
/// scenario's error probabilities already applied.
inline detail::CellStats run_condition_rep(const GridSpec& leveled, int grid_id, int level,
                                           const ScenarioSpec& scenario,
                                           const std::string& condition, int rep,
                                           const std::vector<NavAgent>& team,
                                           const SweepConfig& cfg, const IblParams& ibl_params) {
  detail::CellStats stats;
  const EpisodeConfig eval_cfg{cfg.l_max, Mode::Frozen};
  Rng eval_rng(
      derive_seed(cfg.master_seed, "cell", grid_id, level, scenario.label, condition, rep, "eval"));
  if (condition == kRandomManagerCondition || condition == kIblManagerCondition) {
    ManagerAgent mgr = condition == kIblManagerCondition
                           ? ManagerAgent::make_ibl(static_cast<int>(team.size()), ibl_params)
                           : ManagerAgent::make_random(static_cast<int>(team.size()));
    if (mgr.kind == ManagerKind::Ibl) {
      Rng train_rng(derive_seed(cfg.master_seed, "cell", grid_id, level, scenario.label, condition,
                                rep, "train"));
      train_manager(leveled, team, mgr, cfg.manager_games, eval_cfg, train_rng);
    }
    for (const EpisodeResult& episode :
         evaluate_team(leveled, team, mgr, cfg.eval_episodes, eval_cfg, eval_rng)) {
      stats.absorb(episode, leveled);
    }
  } else {
    int slot = -1;
    for (std::size_t i = 0; i < team.size(); ++i)
      if (condition == solo_condition(team[i].id)) slot = static_cast<int>(i);
    if (slot < 0) fail(Errc::invariant_violation, "unknown condition '" + condition + "'");
    for (const EpisodeResult& episode : evaluate_solo(
             leveled, team[static_cast<std::size_t>(slot)], cfg.eval_episodes, eval_cfg, eval_rng)) {
      stats.absorb(episode, leveled);
    }
  }
  return stats;
}

/// All replications of one cell, pooled. Rebuilding a single cell this way
/// reproduces the corresponding run_sweep record exactly.
inline LevelRecord run_condition_cell(const GridSpec& leveled, int grid_id, int level,
                                      const ScenarioSpec& scenario, const std::string& condition,
                                      const std::vector<NavAgent>& team, const SweepConfig& cfg,
                                      const IblParams& ibl_params) {
  detail::CellStats stats;
  for (int rep = 0; rep < cfg.replications; ++rep) {
    stats.merge(
        run_condition_rep(leveled, grid_id, level, scenario, condition, rep, team, cfg, ibl_params));
  }
  return detail::finalize_cell(grid_id, level, scenario.label, condition, stats);
}

/// The full scenario matrix: per grid, navigating agents are trained once on
/// the error-free base; every (level, scenario) then evaluates each solo
/// agent plus the random and IBL managers. Deterministic in master_seed for
/// any worker count.
inline std::vector<LevelRecord> run_sweep(const SweepConfig& cfg,
                                          const std::vector<ScenarioSpec>& scenarios,
                                          const IblParams& ibl_params, const QParams& q_params,
                                          int workers = 1) {
  cfg.validate();
  if (scenarios.empty()) fail(Errc::invariant_violation, "need at least one scenario");
  for (const ScenarioSpec& sc : scenarios) {
    if (static_cast<int>(sc.team.size()) != cfg.team_size)
      fail(Errc::invariant_violation, "scenario '" + sc.label + "' team size mismatch");
    for (const TeamSlot& slot : sc.team)
      if (slot.error_prob < 0.0 || slot.error_prob > 1.0)
        fail(Errc::invariant_violation, "error_prob must be in [0, 1]");
  }

  const std::vector<GridSuiteEntry> suite = build_grid_suite(cfg);

  // Distinct (grid, slot, kind) training tasks.
  struct TrainTask {
    int grid_id;
    int slot;
    AgentKind kind;
  };
  std::vector<TrainTask> tasks;
  std::map<std::tuple<int, int, AgentKind>, std::size_t> task_index;
  for (const GridSuiteEntry& entry : suite) {
    for (const ScenarioSpec& sc : scenarios) {
      for (int slot = 0; slot < cfg.team_size; ++slot) {
        const AgentKind kind = sc.team[static_cast<std::size_t>(slot)].kind;
        if (task_index.emplace(std::make_tuple(entry.grid_id, slot, kind), tasks.size()).second)
          tasks.push_back({entry.grid_id, slot, kind});
      }
    }
  }
  std::vector<NavAgent> trained(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    const TrainTask& t = tasks[i];
    trained[i] = train_slot_agent(suite[static_cast<std::size_t>(t.grid_id)].base, t.grid_id,
                                  t.slot, t.kind, cfg, ibl_params, q_params);
  });
  const auto trained_team = [&](int grid_id, const ScenarioSpec& sc) {
    std::vector<NavAgent> team;
    team.reserve(sc.team.size());
    for (int slot = 0; slot < cfg.team_size; ++slot) {
      const AgentKind kind = sc.team[static_cast<std::size_t>(slot)].kind;
      team.push_back(trained[task_index.at(std::make_tuple(grid_id, slot, kind))]);
    }
    return detail::scenario_team(team, sc);
  };

  // One job per (cell, replication); slot-indexed outputs keep the merge
  // deterministic.
  struct Job {
    const GridSuiteEntry* entry;
    const GridSpec* leveled;
    int level;
    const ScenarioSpec* scenario;
    std::string condition;
    int rep;
  };
  const std::vector<std::string> conditions = condition_labels(cfg.team_size);
  std::vector<Job> jobs;
  for (const GridSuiteEntry& entry : suite) {
    for (const auto& [level, leveled] : entry.levels) {
      for (const ScenarioSpec& sc : scenarios) {
        for (const std::string& condition : conditions) {
          for (int rep = 0; rep < cfg.replications; ++rep)
            jobs.push_back({&entry, &leveled, level, &sc, condition, rep});
        }
      }
    }
  }
  std::vector<detail::CellStats> stats(jobs.size());
  std::vector<std::vector<NavAgent>> teams;  // per (grid, scenario), built upfront
  std::map<std::pair<int, const ScenarioSpec*>, std::size_t> team_index;
  for (const Job& job : jobs) {
    team_index.emplace(std::make_pair(job.entry->grid_id, job.scenario), teams.size());
  }
  for (auto& [key, idx] : team_index) {
    idx = teams.size();
    teams.push_back(trained_team(key.first, *key.second));
  }
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    const auto& team = teams[team_index.at({job.entry->grid_id, job.scenario})];
    stats[i] = run_condition_rep(*job.leveled, job.entry->grid_id, job.level, *job.scenario,
                                 job.condition, job.rep, team, cfg, ibl_params);
  });

  std::vector<LevelRecord> records;
  for (std::size_t i = 0; i < jobs.size();) {
    detail::CellStats pooled = stats[i];
    std::size_t j = i + 1;
    while (j < jobs.size() && jobs[j].rep != 0) pooled.merge(stats[j++]);
    records.push_back(detail::finalize_cell(jobs[i].entry->grid_id, jobs[i].level,
                                            jobs[i].scenario->label, jobs[i].condition, pooled));
    i = j;
  }
  return records;
}

/// Mean and sample variance of the per-grid mean lengths, grouped by
/// (scenario, level, condition), in deterministic key order.
inline std::vector<AggregateRecord> aggregate_records(const std::vector<LevelRecord>& records) {
  if (records.empty()) fail(Errc::empty_group, "no records to aggregate");
  std::map<std::tuple<std::string, int, std::string>, std::vector<double>> groups;
  for (const LevelRecord& rec : records)
    groups[{rec.scenario, rec.level, rec.condition}].push_back(rec.mean_length);
  std::vector<AggregateRecord> out;
  out.reserve(groups.size());
  for (const auto& [key, means] : groups) {
    AggregateRecord agg;
    agg.scenario = std::get<0>(key);
    agg.level = std::get<1>(key);
    agg.condition = std::get<2>(key);
    double sum = 0.0;
    for (double m : means) sum += m;
    agg.mean = sum / static_cast<double>(means.size());
    if (means.size() > 1) {
      double sq = 0.0;
      for (double m : means) sq += (m - agg.mean) * (m - agg.mean);
      agg.variance = sq / (static_cast<double>(means.size()) - 1.0);
    }
    out.push_back(std::move(agg));
  }
  return out;
}

/// Cross-grid mean selection frequencies for manager conditions.
inline std::vector<SelectionAggregate> aggregate_selections(
    const std::vector<LevelRecord>& records, const std::string& condition = kIblManagerCondition) {
  std::map<std::tuple<std::string, int, std::string, int>, std::pair<double, int>> groups;
  for (const LevelRecord& rec : records) {
    if (rec.condition != condition) continue;
    for (const auto& [key, freq] : rec.selection_freq) {
      auto& [sum, n] = groups[{rec.scenario, rec.level, key.first, key.second}];
      sum += freq;
      ++n;
    }
  }
  std::vector<SelectionAggregate> out;
  out.reserve(groups.size());
  for (const auto& [key, acc] : groups) {
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key),
                   acc.first / static_cast<double>(acc.second)});
  }
  return out;
}

struct ImprovementEntry {
  std::string scenario;
  int level = 0;
  /// (worst solo mean - ibl-mgr mean) / worst solo mean; unset if undefined.
  std::optional<double> team_vs_worst_solo;
  /// (random-mgr mean - ibl-mgr mean) / random-mgr mean; unset if undefined.
  std::optional<double> ibl_vs_random;
};

struct ImprovementSummary {
  std::vector<ImprovementEntry> per_level;
  std::map<std::string, double> max_team_vs_worst_solo;  // per scenario
  std::map<std::string, double> max_ibl_vs_random;       // per scenario
};

inline ImprovementSummary improvement_summary(const std::vector<AggregateRecord>& aggregates) {
  if (aggregates.empty()) fail(Errc::empty_group, "no aggregates to summarize");
  std::map<std::pair<std::string, int>, std::map<std::string, double>> cells;
  for (const AggregateRecord& agg : aggregates)
    cells[{agg.scenario, agg.level}][agg.condition] = agg.mean;
  ImprovementSummary summary;
  for (const auto& [key, by_condition] : cells) {
    ImprovementEntry entry;
    entry.scenario = key.first;
    entry.level = key.second;
    auto ibl = by_condition.find(kIblManagerCondition);
    auto random = by_condition.find(kRandomManagerCondition);
    double worst_solo = 0.0;
    bool has_solo = false;
    for (const auto& [condition, mean] : by_condition) {
      if (condition.rfind("solo-", 0) == 0) {
        worst_solo = has_solo ? std::max(worst_solo, mean) : mean;
        has_solo = true;
      }
    }
    if (ibl != by_condition.end() && has_solo && worst_solo != 0.0)
      entry.team_vs_worst_solo = (worst_solo - ibl->second) / worst_solo;
    if (ibl != by_condition.end() && random != by_condition.end() && random->second != 0.0)
      entry.ibl_vs_random = (random->second - ibl->second) / random->second;
    if (entry.team_vs_worst_solo) {
      auto [it, inserted] =
          summary.max_team_vs_worst_solo.emplace(entry.scenario, *entry.team_vs_worst_solo);
      if (!inserted) it->second = std::max(it->second, *entry.team_vs_worst_solo);
    }
    if (entry.ibl_vs_random) {
      auto [it, inserted] = summary.max_ibl_vs_random.emplace(entry.scenario, *entry.ibl_vs_random);
      if (!inserted) it->second = std::max(it->second, *entry.ibl_vs_random);
    }
    summary.per_level.push_back(std::move(entry));
  }
  return summary;
}

}  // namespace delegrid
