#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "delegrid/delegation.hpp"
#include "delegrid/errors.hpp"
#include "delegrid/experiments.hpp"
#include "delegrid/gridworld.hpp"
#include "delegrid/nav_agents.hpp"
#include "delegrid/simulation.hpp"

namespace delegrid {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

using Json = nlohmann::json;

/// %.6g rendering used for all CSV and chart numbers.
inline std::string fmt_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write " + path.string());
  out << content;
  if (!out) fail(Errc::io_error, "write failed for " + path.string());
}

namespace detail {

inline Json parse_json(const std::string& text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(Errc::parse_error, std::string(what) + ": " + e.what());
  }
}

inline void expect_kind(const Json& doc, const char* kind) {
  try {
    if (doc.at("format_version").get<int>() != kFormatVersion)
      fail(Errc::parse_error, "unsupported format_version");
    if (doc.at("kind").get<std::string>() != kind)
      fail(Errc::kind_mismatch, std::string("expected document kind '") + kind + "', got '" +
                                    doc.value("kind", "?") + "'");
  } catch (const Json::exception& e) {
    fail(Errc::parse_error, e.what());
  }
}

inline Json position_json(Position p) { return Json::array({p.row, p.col}); }

inline Position position_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) fail(Errc::parse_error, "position must be [row, col]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Grids

inline std::string save_grid(const GridSpec& grid) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = "grid";
  doc["rows"] = grid.rows;
  doc["cols"] = grid.cols;
  doc["start"] = detail::position_json(grid.start);
  doc["goal"] = detail::position_json(grid.goal);
  Json walls = Json::array();
  for (Position w : grid.walls) walls.push_back(detail::position_json(w));
  doc["walls"] = std::move(walls);
  Json errors = Json::array();
  for (const auto& [pos, tag] : grid.error_cells) {
    errors.push_back(Json{{"pos", detail::position_json(pos)}, {"agents", tag.agents}});
  }
  doc["error_cells"] = std::move(errors);
  doc["wall_ratio"] = grid.wall_ratio;
  doc["seed"] = grid.seed;
  return doc.dump(2) + "\n";
}

inline GridSpec load_grid(const std::string& text) {
  const Json doc = detail::parse_json(text, "grid");
  detail::expect_kind(doc, "grid");
  GridSpec grid;
  try {
    grid.rows = doc.at("rows").get<int>();
    grid.cols = doc.at("cols").get<int>();
    grid.start = detail::position_from(doc.at("start"));
    grid.goal = detail::position_from(doc.at("goal"));
    for (const Json& w : doc.at("walls")) grid.walls.insert(detail::position_from(w));
    for (const Json& e : doc.at("error_cells")) {
      grid.error_cells.emplace(detail::position_from(e.at("pos")),
                               ErrorTag::of(e.at("agents").get<std::vector<int>>()));
    }
    grid.wall_ratio = doc.at("wall_ratio").get<double>();
    grid.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    fail(Errc::parse_error, std::string("grid: ") + e.what());
  }
  validate_grid(grid);
  return grid;
}

// ---------------------------------------------------------------------------
// Policies

namespace detail {

inline Json ibl_params_json(const IblParams& p) {
  return Json{{"d", p.d},
              {"sigma", p.sigma},
              {"tau", p.tau},
              {"k", p.k},
              {"default_utility", p.default_utility}};
}

inline IblParams ibl_params_from(const Json& j) {
  IblParams p;
  p.d = j.at("d").get<double>();
  p.sigma = j.at("sigma").get<double>();
  p.tau = j.at("tau").get<double>();
  p.k = j.at("k").get<int>();
  p.default_utility = j.at("default_utility").get<double>();
  p.validate();
  return p;
}

inline Json q_params_json(const QParams& p) {
  return Json{{"alpha", p.alpha},
              {"alpha_decay", p.alpha_decay},
              {"epsilon", p.epsilon},
              {"epsilon_decay", p.epsilon_decay},
              {"gamma", p.gamma}};
}

inline QParams q_params_from(const Json& j) {
  QParams p;
  p.alpha = j.at("alpha").get<double>();
  p.alpha_decay = j.at("alpha_decay").get<double>();
  p.epsilon = j.at("epsilon").get<double>();
  p.epsilon_decay = j.at("epsilon_decay").get<double>();
  p.gamma = j.at("gamma").get<double>();
  return p;
}

template <class State, class ActionT, class StateWriter, class ActionWriter>
Json ibl_memory_json(const IblMemory<State, ActionT>& memory, StateWriter&& state_writer,
                     ActionWriter&& action_writer) {
  Json block;
  block["params"] = ibl_params_json(memory.params);
  block["clock"] = memory.clock;
  Json instances = Json::array();
  for (const auto& [key, rec] : memory.sorted_instances()) {
    instances.push_back(Json{{"state", state_writer(key.first)},
                             {"action", action_writer(key.second)},
                             {"outcome", rec.outcome},
                             {"first_time", rec.first_time},
                             {"recent_times", rec.recent_times},
                             {"total_count", rec.total_count}});
  }
  block["instances"] = std::move(instances);
  return block;
}

template <class State, class ActionT, class StateReader, class ActionReader>
IblMemory<State, ActionT> ibl_memory_from(const Json& block, StateReader&& state_reader,
                                          ActionReader&& action_reader) {
  IblMemory<State, ActionT> memory(ibl_params_from(block.at("params")));
  memory.clock = block.at("clock").get<std::int64_t>();
  for (const Json& inst : block.at("instances")) {
    InstanceRecord rec;
    rec.outcome = inst.at("outcome").get<double>();
    rec.first_time = inst.at("first_time").get<std::int64_t>();
    rec.recent_times = inst.at("recent_times").get<std::vector<std::int64_t>>();
    rec.total_count = inst.at("total_count").get<std::int64_t>();
    if (rec.recent_times.empty())
      fail(Errc::parse_error, "instance with no recent_times");
    if (static_cast<int>(rec.recent_times.size()) > memory.params.k)
      fail(Errc::parse_error, "recent_times longer than k");
    if (rec.total_count < static_cast<std::int64_t>(rec.recent_times.size()))
      fail(Errc::parse_error, "total_count smaller than recent_times");
    if (!std::is_sorted(rec.recent_times.begin(), rec.recent_times.end()))
      fail(Errc::parse_error, "recent_times must be ascending");
    if (rec.first_time > rec.recent_times.front())
      fail(Errc::parse_error, "first_time after first retained time");
    if (rec.recent_times.back() > memory.clock)
      fail(Errc::parse_error, "observation time beyond clock");
    memory.restore(state_reader(inst.at("state")), action_reader(inst.at("action")),
                   std::move(rec));
  }
  return memory;
}

inline Json nav_memory_json(const NavMemory& memory) {
  return ibl_memory_json(memory, [](Position p) { return position_json(p); },
                         [](Action a) { return std::string(to_string(a)); });
}

inline NavMemory nav_memory_from(const Json& block) {
  return ibl_memory_from<Position, Action>(
      block, [](const Json& j) { return position_from(j); },
      [](const Json& j) { return action_from_string(j.get<std::string>()); });
}

}  // namespace detail

inline std::string save_nav_agent(const NavAgent& agent) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = "nav-agent";
  doc["id"] = agent.id;
  doc["agent_kind"] = to_string(agent.kind());
  doc["error_prob"] = agent.error_prob;
  if (agent.kind() == AgentKind::Q) {
    Json table = Json::array();
    for (const auto& [pos, action, value] : agent.q().table.entries_sorted()) {
      table.push_back(Json{{"row", pos.row},
                           {"col", pos.col},
                           {"action", to_string(action)},
                           {"value", value}});
    }
    doc["q"] = Json{{"params", detail::q_params_json(agent.q().params)},
                    {"table", std::move(table)}};
  } else {
    doc["ibl"] = detail::nav_memory_json(agent.ibl().memory);
  }
  return doc.dump(2) + "\n";
}

inline NavAgent load_nav_agent(const std::string& text) {
  const Json doc = detail::parse_json(text, "nav-agent");
  detail::expect_kind(doc, "nav-agent");
  try {
    NavAgent agent;
    agent.id = doc.at("id").get<int>();
    agent.error_prob = doc.at("error_prob").get<double>();
    const auto kind = agent_kind_from_string(doc.at("agent_kind").get<std::string>());
    if (kind == AgentKind::Q) {
      QPolicy policy;
      policy.params = detail::q_params_from(doc.at("q").at("params"));
      for (const Json& entry : doc.at("q").at("table")) {
        policy.table.set({entry.at("row").get<int>(), entry.at("col").get<int>()},
                         action_from_string(entry.at("action").get<std::string>()),
                         entry.at("value").get<double>());
      }
      agent.policy = std::move(policy);
    } else {
      agent.policy = IblPolicy{detail::nav_memory_from(doc.at("ibl"))};
    }
    return agent;
  } catch (const Json::exception& e) {
    fail(Errc::parse_error, std::string("nav-agent: ") + e.what());
  }
}

inline std::string save_manager(const ManagerAgent& mgr) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = "manager";
  doc["manager_kind"] = mgr.kind == ManagerKind::Ibl ? "ibl" : "random";
  doc["team_size"] = mgr.team_size;
  if (mgr.kind == ManagerKind::Ibl) {
    doc["memory"] = detail::ibl_memory_json(*mgr.memory,
                                            [](Position p) { return detail::position_json(p); },
                                            [](int agent) { return agent; });
  }
  Json log = Json::array();
  for (const auto& [key, count] : mgr.selection_log) {
    log.push_back(Json{{"bucket", key.first}, {"agent", key.second}, {"count", count}});
  }
  doc["selection_log"] = std::move(log);
  return doc.dump(2) + "\n";
}

inline ManagerAgent load_manager(const std::string& text) {
  const Json doc = detail::parse_json(text, "manager");
  detail::expect_kind(doc, "manager");
  try {
    ManagerAgent mgr;
    mgr.team_size = doc.at("team_size").get<int>();
    const std::string kind = doc.at("manager_kind").get<std::string>();
    if (kind == "ibl") {
      mgr.kind = ManagerKind::Ibl;
      mgr.memory = detail::ibl_memory_from<Position, int>(
          doc.at("memory"), [](const Json& j) { return detail::position_from(j); },
          [](const Json& j) { return j.get<int>(); });
    } else if (kind == "random") {
      mgr.kind = ManagerKind::Random;
    } else {
      fail(Errc::parse_error, "unknown manager_kind '" + kind + "'");
    }
    for (const Json& entry : doc.at("selection_log")) {
      mgr.selection_log[{entry.at("bucket").get<std::string>(), entry.at("agent").get<int>()}] =
          entry.at("count").get<std::int64_t>();
    }
    return mgr;
  } catch (const Json::exception& e) {
    fail(Errc::parse_error, std::string("manager: ") + e.what());
  }
}

using Policy = std::variant<NavAgent, ManagerAgent>;

/// Loads either policy document; the caller inspects the alternative.
inline Policy load_policy(const std::string& text) {
  const Json doc = detail::parse_json(text, "policy");
  const std::string kind = doc.value("kind", "");
  if (kind == "nav-agent") return load_nav_agent(text);
  if (kind == "manager") return load_manager(text);
  fail(Errc::kind_mismatch, "expected a nav-agent or manager document, got '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  std::string profile = "desk";
  SweepConfig sweep;
  IblParams ibl;
  QParams q;
  std::vector<ScenarioSpec> scenarios;
  std::string out_dir = "out";
  int workers = 1;

  void validate() const {
    sweep.validate();
    ibl.validate();
    if (scenarios.empty()) fail(Errc::invariant_violation, "need at least one scenario");
    for (const ScenarioSpec& sc : scenarios) {
      if (static_cast<int>(sc.team.size()) != sweep.team_size)
        fail(Errc::invariant_violation, "scenario '" + sc.label + "' team size mismatch");
    }
    if (workers < 1) fail(Errc::invariant_violation, "workers must be >= 1");
  }
};

/// The three team scenarios exercised by default: equal low error rates, an
/// imbalanced pair, and a fully divergent pair, each with a Q agent in slot
/// 1 and an IBL agent in slot 2.
inline std::vector<ScenarioSpec> default_scenarios() {
  return {
      {"balanced-25-25", {{AgentKind::Q, 0.25}, {AgentKind::Ibl, 0.25}}},
      {"imbalanced-25-75", {{AgentKind::Q, 0.25}, {AgentKind::Ibl, 0.75}}},
      {"divergent-100-0", {{AgentKind::Q, 1.0}, {AgentKind::Ibl, 0.0}}},
  };
}

/// Scaled-down profile that runs in minutes on a laptop.
inline RunConfig desk_profile() {
  RunConfig cfg;
  cfg.profile = "desk";
  cfg.sweep = SweepConfig{};  // 6x8, 3 grids, levels 1..5, 20k/5k episodes
  cfg.scenarios = default_scenarios();
  return cfg;
}

/// Full-scale profile: 10x15 grids at 60% walls, 25 grids, per-type error
/// counts 2..14, 150k navigation episodes and 20k manager games. Hours of
/// compute.
inline RunConfig paper_profile() {
  RunConfig cfg;
  cfg.profile = "paper";
  cfg.sweep.grids = 25;
  cfg.sweep.rows = 10;
  cfg.sweep.cols = 15;
  cfg.sweep.wall_ratio = 0.6;
  cfg.sweep.level_counts = {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
  cfg.sweep.nav_episodes = 150000;
  cfg.sweep.manager_games = 20000;
  cfg.sweep.eval_episodes = 500;
  cfg.sweep.l_max = 150;
  cfg.sweep.replications = 1;
  cfg.scenarios = default_scenarios();
  return cfg;
}

inline RunConfig profile_by_name(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "paper") return paper_profile();
  fail(Errc::parse_error, "unknown profile '" + name + "' (expected desk or paper)");
}

inline std::string save_run_config(const RunConfig& cfg) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = "run-config";
  doc["profile"] = cfg.profile;
  doc["sweep"] = Json{{"grids", cfg.sweep.grids},
                      {"rows", cfg.sweep.rows},
                      {"cols", cfg.sweep.cols},
                      {"wall_ratio", cfg.sweep.wall_ratio},
                      {"team_size", cfg.sweep.team_size},
                      {"level_counts", cfg.sweep.level_counts},
                      {"nav_episodes", cfg.sweep.nav_episodes},
                      {"manager_games", cfg.sweep.manager_games},
                      {"eval_episodes", cfg.sweep.eval_episodes},
                      {"l_max", cfg.sweep.l_max},
                      {"replications", cfg.sweep.replications},
                      {"master_seed", cfg.sweep.master_seed}};
  doc["ibl"] = detail::ibl_params_json(cfg.ibl);
  doc["q"] = detail::q_params_json(cfg.q);
  Json scenarios = Json::array();
  for (const ScenarioSpec& sc : cfg.scenarios) {
    Json team = Json::array();
    for (const TeamSlot& slot : sc.team)
      team.push_back(Json{{"kind", to_string(slot.kind)}, {"error_prob", slot.error_prob}});
    scenarios.push_back(Json{{"label", sc.label}, {"team", std::move(team)}});
  }
  doc["scenarios"] = std::move(scenarios);
  doc["out_dir"] = cfg.out_dir;
  doc["workers"] = cfg.workers;
  return doc.dump(2) + "\n";
}

/// Loads a run config on top of `base`: any field present in the document
/// overrides the base value, so partial configs are fine.
inline RunConfig load_run_config(const std::string& text, RunConfig base = desk_profile()) {
  const Json doc = detail::parse_json(text, "run-config");
  detail::expect_kind(doc, "run-config");
  try {
    RunConfig cfg = std::move(base);
    if (doc.contains("profile")) cfg.profile = doc.at("profile").get<std::string>();
    if (doc.contains("sweep")) {
      const Json& s = doc.at("sweep");
      SweepConfig& sw = cfg.sweep;
      if (s.contains("grids")) sw.grids = s.at("grids").get<int>();
      if (s.contains("rows")) sw.rows = s.at("rows").get<int>();
      if (s.contains("cols")) sw.cols = s.at("cols").get<int>();
      if (s.contains("wall_ratio")) sw.wall_ratio = s.at("wall_ratio").get<double>();
      if (s.contains("team_size")) sw.team_size = s.at("team_size").get<int>();
      if (s.contains("level_counts"))
        sw.level_counts = s.at("level_counts").get<std::vector<int>>();
      if (s.contains("nav_episodes")) sw.nav_episodes = s.at("nav_episodes").get<int>();
      if (s.contains("manager_games")) sw.manager_games = s.at("manager_games").get<int>();
      if (s.contains("eval_episodes")) sw.eval_episodes = s.at("eval_episodes").get<int>();
      if (s.contains("l_max")) sw.l_max = s.at("l_max").get<int>();
      if (s.contains("replications")) sw.replications = s.at("replications").get<int>();
      if (s.contains("master_seed")) sw.master_seed = s.at("master_seed").get<std::uint64_t>();
    }
    if (doc.contains("ibl")) cfg.ibl = detail::ibl_params_from(doc.at("ibl"));
    if (doc.contains("q")) cfg.q = detail::q_params_from(doc.at("q"));
    if (doc.contains("scenarios")) {
      cfg.scenarios.clear();
      for (const Json& sc : doc.at("scenarios")) {
        ScenarioSpec spec;
        spec.label = sc.at("label").get<std::string>();
        for (const Json& slot : sc.at("team")) {
          spec.team.push_back({agent_kind_from_string(slot.at("kind").get<std::string>()),
                               slot.at("error_prob").get<double>()});
        }
        cfg.scenarios.push_back(std::move(spec));
      }
    }
    if (doc.contains("out_dir")) cfg.out_dir = doc.at("out_dir").get<std::string>();
    if (doc.contains("workers")) cfg.workers = doc.at("workers").get<int>();
    cfg.validate();
    return cfg;
  } catch (const Json::exception& e) {
    fail(Errc::parse_error, std::string("run-config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Results table

struct ResultsTable {
  std::string artifact_version = kArtifactVersion;
  std::uint64_t master_seed = 0;
  std::string profile = "desk";
  int team_size = 2;
  std::vector<LevelRecord> rows;
};

namespace detail {

inline std::vector<std::string> selection_columns(int team_size) {
  std::vector<std::string> tags;
  for (const ErrorTag& tag : error_tag_universe(team_size)) tags.push_back(tag.label());
  tags.emplace_back("plain");
  std::vector<std::string> cols;
  for (const std::string& tag : tags)
    for (int agent = 1; agent <= team_size; ++agent)
      cols.push_back("sel_" + tag + "_" + std::to_string(agent));
  return cols;
}

inline std::pair<std::string, int> selection_key_from_column(const std::string& column) {
  // sel_<tag>_<agent>
  const auto last = column.rfind('_');
  return {column.substr(4, last - 4), std::stoi(column.substr(last + 1))};
}

}  // namespace detail

/// Canonical CSV: a provenance comment line, a fixed header, rows sorted by
/// (grid_id, level, scenario, condition). Byte-identical for equal inputs.
inline std::string write_results_csv(const ResultsTable& table) {
  std::string out = "# delegrid-results format_version=" + std::to_string(kFormatVersion) +
                    " artifact_version=" + table.artifact_version +
                    " master_seed=" + std::to_string(table.master_seed) +
                    " profile=" + table.profile +
                    " team_size=" + std::to_string(table.team_size) + "\n";
  const std::vector<std::string> sel_cols = detail::selection_columns(table.team_size);
  out += "grid_id,level,scenario,condition,mean_length,length_variance,success_rate";
  for (const std::string& col : sel_cols) out += "," + col;
  out += "\n";
  std::vector<const LevelRecord*> rows;
  rows.reserve(table.rows.size());
  for (const LevelRecord& rec : table.rows) rows.push_back(&rec);
  std::sort(rows.begin(), rows.end(), [](const LevelRecord* a, const LevelRecord* b) {
    return std::tie(a->grid_id, a->level, a->scenario, a->condition) <
           std::tie(b->grid_id, b->level, b->scenario, b->condition);
  });
  for (const LevelRecord* rec : rows) {
    out += std::to_string(rec->grid_id) + "," + std::to_string(rec->level) + "," + rec->scenario +
           "," + rec->condition + "," + fmt_g6(rec->mean_length) + "," +
           fmt_g6(rec->length_variance) + "," + fmt_g6(rec->success_rate);
    for (const std::string& col : sel_cols) {
      const auto key = detail::selection_key_from_column(col);
      auto it = rec->selection_freq.find(key);
      out += ",";
      if (it != rec->selection_freq.end()) out += fmt_g6(it->second);
    }
    out += "\n";
  }
  return out;
}

inline ResultsTable read_results_csv(const std::string& text) {
  ResultsTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# delegrid-results", 0) != 0)
    fail(Errc::parse_error, "missing results provenance line");
  {
    std::istringstream header(line.substr(2));
    std::string token;
    while (header >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "master_seed") table.master_seed = std::stoull(value);
      if (key == "profile") table.profile = value;
      if (key == "team_size") table.team_size = std::stoi(value);
      if (key == "artifact_version") table.artifact_version = value;
    }
  }
  if (!std::getline(in, line)) fail(Errc::parse_error, "missing header row");
  std::vector<std::string> columns;
  {
    std::istringstream header(line);
    std::string col;
    while (std::getline(header, col, ',')) columns.push_back(col);
  }
  if (columns.size() < 7) fail(Errc::parse_error, "unexpected header row");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    fields.resize(columns.size());
    try {
      LevelRecord rec;
      rec.grid_id = std::stoi(fields[0]);
      rec.level = std::stoi(fields[1]);
      rec.scenario = fields[2];
      rec.condition = fields[3];
      rec.mean_length = std::stod(fields[4]);
      rec.length_variance = std::stod(fields[5]);
      rec.success_rate = std::stod(fields[6]);
      for (std::size_t i = 7; i < columns.size(); ++i) {
        if (!fields[i].empty())
          rec.selection_freq[detail::selection_key_from_column(columns[i])] = std::stod(fields[i]);
      }
      table.rows.push_back(std::move(rec));
    } catch (const std::exception&) {
      fail(Errc::parse_error, "bad results row: " + line);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Episode traces

/// Line-per-step trace of one episode, with the grid embedded so replay is
/// self-contained.
inline std::string write_trace(const GridSpec& grid, const EpisodeResult& episode) {
  std::string out = "# delegrid-trace format_version=" + std::to_string(kFormatVersion) + "\n";
  Json grid_doc = detail::parse_json(save_grid(grid), "grid");
  out += "# grid " + grid_doc.dump() + "\n";
  out += "# success " + std::string(episode.success ? "1" : "0") + " length " +
         std::to_string(episode.length) + "\n";
  out += "# tick row col agent action error_injected\n";
  int tick = 0;
  for (const TrajectoryEntry& entry : episode.trajectory) {
    out += std::to_string(++tick) + " " + std::to_string(entry.pos.row) + " " +
           std::to_string(entry.pos.col) + " " +
           (entry.agent ? std::to_string(*entry.agent) : std::string("-")) + " " +
           to_string(entry.action) + " " + (entry.error_injected ? "1" : "0") + "\n";
  }
  return out;
}

struct Trace {
  GridSpec grid;
  bool success = false;
  int length = 0;
  std::vector<TrajectoryEntry> steps;
};

inline Trace read_trace(const std::string& text) {
  Trace trace;
  std::istringstream in(text);
  std::string line;
  bool saw_grid = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# grid ", 0) == 0) {
      trace.grid = load_grid(line.substr(7));
      saw_grid = true;
      continue;
    }
    if (line.rfind("# success ", 0) == 0) {
      std::istringstream meta(line.substr(2));
      std::string word;
      int flag = 0;
      meta >> word >> flag >> word >> trace.length;
      trace.success = flag != 0;
      continue;
    }
    if (line[0] == '#') continue;
    std::istringstream row(line);
    int tick = 0;
    TrajectoryEntry entry;
    std::string agent;
    std::string action;
    int error = 0;
    if (!(row >> tick >> entry.pos.row >> entry.pos.col >> agent >> action >> error))
      fail(Errc::parse_error, "bad trace line: " + line);
    if (agent != "-") entry.agent = std::stoi(agent);
    entry.action = action_from_string(action);
    entry.error_injected = error != 0;
    trace.steps.push_back(entry);
  }
  if (!saw_grid) fail(Errc::parse_error, "trace missing grid line");
  return trace;
}

}  // namespace delegrid
