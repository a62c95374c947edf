#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <variant>
#include <vector>

#include "delegrid/errors.hpp"
#include "delegrid/gridworld.hpp"
#include "delegrid/ibl.hpp"
#include "delegrid/rng.hpp"

namespace delegrid {

struct QParams {
  double alpha = 0.9999;
  double alpha_decay = 0.9999;
  double epsilon = 0.9999;
  double epsilon_decay = 0.9999;
  double gamma = 0.9;
};

/// Tabular action values. Reads are total: entries never written are 0.
class QTable {
 public:
  double get(Position s, Action a) const {
    auto it = values_.find(pack(s, a));
    return it == values_.end() ? 0.0 : it->second;
  }

  void set(Position s, Action a, double v) { values_[pack(s, a)] = v; }

  double max_value(Position s) const {
    double best = get(s, kActions[0]);
    for (std::size_t i = 1; i < kActions.size(); ++i) best = std::max(best, get(s, kActions[i]));
    return best;
  }

  std::size_t size() const { return values_.size(); }

  /// (position, action, value) triples sorted by key, for serialization.
  std::vector<std::tuple<Position, Action, double>> entries_sorted() const {
    std::vector<std::tuple<Position, Action, double>> out;
    out.reserve(values_.size());
    for (const auto& [key, v] : values_) {
      out.emplace_back(Position{static_cast<int>(key >> 34),
                                static_cast<int>((key >> 2) & 0xffffffffULL)},
                       static_cast<Action>(key & 3), v);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  bool operator==(const QTable& other) const {
    return entries_sorted() == other.entries_sorted();
  }

 private:
  static std::uint64_t pack(Position s, Action a) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.row)) << 34) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.col)) << 2) |
           static_cast<std::uint64_t>(a);
  }

  std::unordered_map<std::uint64_t, double> values_;
};

/// Per-step reward. Priority: goal, then collision, then timeout, then a
/// plain open-to-open move.
inline double q_step_reward(const StepOutcome& outcome, bool timed_out) {
  if (outcome.reached_goal) return 100.0;
  if (outcome.collided) return -10.0;
  if (timed_out) return -100.0;
  return -1.0;
}

/// Q(s,a) <- (1-alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a')), with the
/// bootstrap term dropped on terminal transitions.
inline void q_update(QTable& table, Position s, Action a, double r, Position s_next, bool terminal,
                     const QParams& params) {
  const double bootstrap = terminal ? 0.0 : params.gamma * table.max_value(s_next);
  const double target = r + bootstrap;
  table.set(s, a, (1.0 - params.alpha) * table.get(s, a) + params.alpha * target);
}

inline Action epsilon_greedy_action(const QTable& table, Position s, double epsilon, Rng& rng) {
  if (epsilon > 0.0 && rng.bernoulli(epsilon))
    return kActions[rng.uniform_index(kActions.size())];
  double best = table.get(s, kActions[0]);
  std::vector<std::size_t> ties{0};
  for (std::size_t i = 1; i < kActions.size(); ++i) {
    const double v = table.get(s, kActions[i]);
    if (v > best) {
      best = v;
      ties.assign(1, i);
    } else if (v == best) {
      ties.push_back(i);
    }
  }
  return kActions[ties.size() == 1 ? ties[0] : ties[rng.uniform_index(ties.size())]];
}

/// Per-episode annealing of the learning and exploration rates.
inline void decay_schedule(QParams& params) {
  params.alpha *= params.alpha_decay;
  params.epsilon *= params.epsilon_decay;
}

enum class AgentKind { Q, Ibl };

inline const char* to_string(AgentKind kind) { return kind == AgentKind::Q ? "q" : "ibl"; }

inline AgentKind agent_kind_from_string(std::string_view s) {
  if (s == "q" || s == "Q") return AgentKind::Q;
  if (s == "ibl" || s == "IBL") return AgentKind::Ibl;
  fail(Errc::parse_error, "unknown agent kind '" + std::string(s) + "'");
}

enum class Mode { Train, Frozen };

using NavMemory = IblMemory<Position, Action>;

struct QPolicy {
  QTable table;
  QParams params;
};

struct IblPolicy {
  NavMemory memory;
};

/// One navigating agent: a Q-learning policy or an IBL policy, plus the
/// probability of taking an error action in its own error cells.
struct NavAgent {
  int id = 1;
  double error_prob = 0.0;
  std::variant<QPolicy, IblPolicy> policy = QPolicy{};

  AgentKind kind() const {
    return std::holds_alternative<QPolicy>(policy) ? AgentKind::Q : AgentKind::Ibl;
  }
  QPolicy& q() { return std::get<QPolicy>(policy); }
  const QPolicy& q() const { return std::get<QPolicy>(policy); }
  IblPolicy& ibl() { return std::get<IblPolicy>(policy); }
  const IblPolicy& ibl() const { return std::get<IblPolicy>(policy); }

  static NavAgent make_q(int id, QParams params, double error_prob = 0.0) {
    return {id, error_prob, QPolicy{QTable{}, params}};
  }
  static NavAgent make_ibl(int id, IblParams params, double error_prob = 0.0) {
    return {id, error_prob, IblPolicy{NavMemory{params}}};
  }
};

/// Policy action at state s. Q agents act epsilon-greedily while training
/// and purely greedily when frozen. IBL agents pick the best blended value
/// in both modes; their activation noise is part of the behavior model, not
/// an exploration dial, so it stays on when frozen. Never mutates the agent.
inline Action nav_policy_action(const NavAgent& agent, Position s, Mode mode, std::int64_t now,
                                Rng& rng) {
  if (agent.kind() == AgentKind::Q) {
    const double epsilon = mode == Mode::Train ? agent.q().params.epsilon : 0.0;
    return epsilon_greedy_action(agent.q().table, s, epsilon, rng);
  }
  return choose_best(agent.ibl().memory, s, std::span<const Action>(kActions), now, rng);
}

}  // namespace delegrid
