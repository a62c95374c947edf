#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "delegrid/errors.hpp"
#include "delegrid/rng.hpp"

namespace delegrid {

/// Instance-based learning parameters.
///   d                power-law decay exponent for memory strength
///   sigma            scale of the logistic activation noise
///   tau              Boltzmann temperature for retrieval probabilities
///   k                retained recent timestamps per instance
///   default_utility  value assumed for a (state, action) never observed
struct IblParams {
  double d = 0.5;
  double sigma = 0.25;
  double tau = 0.25 * 1.4142135623730951;
  int k = 5;
  double default_utility = 0.0;

  void validate() const {
    if (d <= 0.0) fail(Errc::invariant_violation, "decay d must be > 0");
    if (sigma < 0.0) fail(Errc::invariant_violation, "sigma must be >= 0");
    if (tau <= 0.0) fail(Errc::invariant_violation, "tau must be > 0");
    if (k < 1) fail(Errc::invariant_violation, "k must be >= 1");
  }
};

template <class State, class ActionT>
struct InstanceKey {
  State state;
  ActionT action;
  double outcome = 0.0;
  bool operator==(const InstanceKey&) const = default;
};

/// Memory trace of one distinct (state, action, outcome) tuple: the first
/// observation time, the k most recent observation times (ascending) and the
/// total observation count. The identifying state/action live one level up
/// in the memory's group key.
struct InstanceRecord {
  double outcome = 0.0;
  std::int64_t first_time = 0;
  std::int64_t total_count = 0;
  std::vector<std::int64_t> recent_times;

  bool operator==(const InstanceRecord&) const = default;
};

/// Decay mass S = sum over observation times of (now - t)^(-d).
///
/// Only first_time plus the k most recent times are retained, so when
/// total_count exceeds k the unretained observations are approximated as
/// spread uniformly between first_time and the oldest retained time:
///
///   tail = (n - k) * [(now - t0)^(1-d) - (now - tk)^(1-d)] / [(1-d) * (tk - t0)]
///
/// For total_count <= k the retained times are the full history and the sum
/// is exact.
inline double decay_mass(const InstanceRecord& rec, std::int64_t now, double d) {
  const bool half = d == 0.5;
  double sum = 0.0;
  for (std::int64_t t : rec.recent_times) {
    const auto dt = static_cast<double>(now - t);
    sum += half ? 1.0 / std::sqrt(dt) : std::pow(dt, -d);
  }
  const auto k = static_cast<std::int64_t>(rec.recent_times.size());
  if (rec.total_count > k) {
    const auto span0 = static_cast<double>(now - rec.first_time);
    const auto spank = static_cast<double>(now - rec.recent_times.front());
    const auto extra = static_cast<double>(rec.total_count - k);
    if (span0 == spank) {
      sum += extra * (half ? 1.0 / std::sqrt(span0) : std::pow(span0, -d));
    } else if (d == 1.0) {
      sum += extra * (std::log(span0) - std::log(spank)) / (span0 - spank);
    } else {
      const double p = 1.0 - d;
      const double num = half ? std::sqrt(span0) - std::sqrt(spank)
                              : std::pow(span0, p) - std::pow(spank, p);
      sum += extra * num / (p * (span0 - spank));
    }
  }
  return sum;
}

/// ACT-R style base-level activation A = ln(S) + sigma * ln((1-xi)/xi) with
/// xi drawn uniformly from (0,1). With sigma = 0 the noise term is exactly 0
/// and no draw is consumed.
inline double base_activation(const InstanceRecord& rec, std::int64_t now, const IblParams& params,
                              Rng& rng) {
  if (rec.recent_times.empty()) fail(Errc::time_paradox, "record with no observation times");
  if (now <= rec.recent_times.back() || now <= rec.first_time)
    fail(Errc::time_paradox, "activation read at or before a stored observation");
  double a = std::log(decay_mass(rec, now, params.d));
  if (params.sigma != 0.0) {
    const double xi = rng.open01();
    a += params.sigma * std::log((1.0 - xi) / xi);
  }
  return a;
}

/// Boltzmann retrieval distribution p_i = exp(A_i / tau) / sum_j exp(A_j / tau),
/// computed with max subtraction.
inline std::vector<double> retrieval_probabilities(const std::vector<double>& activations,
                                                   double tau) {
  if (activations.empty()) fail(Errc::empty_activations, "no activations to normalize");
  if (tau <= 0.0) fail(Errc::invariant_violation, "tau must be > 0");
  double peak = activations[0];
  for (double a : activations) peak = std::max(peak, a);
  std::vector<double> probs(activations.size());
  double total = 0.0;
  for (std::size_t i = 0; i < activations.size(); ++i) {
    probs[i] = std::exp((activations[i] - peak) / tau);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

template <class State, class ActionT>
struct TrajectoryStep {
  State state;
  ActionT action;
  std::int64_t time = 0;
};

/// Instance memory for one IBL learner. Mutations are single-writer; reads
/// between mutations are safe to share.
template <class State, class ActionT>
class IblMemory {
 public:
  using Key = InstanceKey<State, ActionT>;
  using Step = TrajectoryStep<State, ActionT>;

  IblParams params;
  std::int64_t clock = 0;

  IblMemory() = default;
  explicit IblMemory(IblParams p) : params(p) { params.validate(); }

  /// Next decision tick. Advancing before any activation read keeps
  /// (now - t) >= 1 for all stored times.
  std::int64_t advance_clock() { return ++clock; }

  /// Instances matching (state, action), in ascending-outcome order (the
  /// canonical order noise draws are consumed in). Empty when the pair has
  /// never been observed.
  const std::vector<InstanceRecord>* group(const State& s, const ActionT& a) const {
    auto it = groups_.find(GroupKey{s, a});
    return it == groups_.end() ? nullptr : &it->second;
  }

  void record(const Key& key, std::int64_t time) {
    auto& records = groups_[GroupKey{key.state, key.action}];
    auto it = std::lower_bound(records.begin(), records.end(), key.outcome,
                               [](const InstanceRecord& r, double x) { return r.outcome < x; });
    if (it == records.end() || it->outcome != key.outcome) {
      records.insert(it, InstanceRecord{key.outcome, time, 1, {time}});
      return;
    }
    if (time < it->recent_times.back())
      fail(Errc::non_monotone_time, "observation time precedes an existing one for this instance");
    if (static_cast<int>(it->recent_times.size()) == params.k)
      it->recent_times.erase(it->recent_times.begin());
    it->recent_times.push_back(time);
    ++it->total_count;
  }

  /// Reinserts a deserialized record. Rejects duplicate outcomes for the
  /// same (state, action).
  void restore(const State& s, const ActionT& a, InstanceRecord rec) {
    auto& records = groups_[GroupKey{s, a}];
    auto it = std::lower_bound(records.begin(), records.end(), rec.outcome,
                               [](const InstanceRecord& r, double x) { return r.outcome < x; });
    if (it != records.end() && it->outcome == rec.outcome)
      fail(Errc::parse_error, "duplicate instance for one (state, action, outcome)");
    records.insert(it, std::move(rec));
  }

  std::size_t instance_count() const {
    std::size_t n = 0;
    for (const auto& [key, records] : groups_) n += records.size();
    return n;
  }

  /// Deterministically ordered view for serialization and snapshots.
  std::vector<std::pair<std::pair<State, ActionT>, InstanceRecord>> sorted_instances() const {
    std::vector<std::pair<std::pair<State, ActionT>, InstanceRecord>> out;
    for (const auto& [key, records] : groups_)
      for (const auto& rec : records) out.emplace_back(std::make_pair(key.state, key.action), rec);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second.outcome < b.second.outcome;
    });
    return out;
  }

  bool operator==(const IblMemory& other) const {
    return clock == other.clock && sorted_instances() == other.sorted_instances();
  }

 private:
  struct GroupKey {
    State state;
    ActionT action;
    bool operator==(const GroupKey&) const = default;
  };
  struct GroupHash {
    std::size_t operator()(const GroupKey& k) const {
      std::size_t h = std::hash<State>{}(k.state);
      return h ^ (std::hash<ActionT>{}(k.action) + 0x9e3779b9 + (h << 6) + (h >> 2));
    }
  };
  std::unordered_map<GroupKey, std::vector<InstanceRecord>, GroupHash> groups_;
};

template <class State, class ActionT>
void record_observation(IblMemory<State, ActionT>& memory,
                        const InstanceKey<State, ActionT>& key, std::int64_t time) {
  memory.record(key, time);
}

/// Blended value V(s,a): retrieval-probability-weighted mean of the outcomes
/// of all instances matching (s,a); the configured default utility when none
/// match. Noise draws are consumed per instance in ascending-outcome order.
template <class State, class ActionT>
double blended_value(const IblMemory<State, ActionT>& memory, const State& s, const ActionT& a,
                     std::int64_t now, Rng& rng) {
  const auto* records = memory.group(s, a);
  if (records == nullptr || records->empty()) return memory.params.default_utility;
  std::vector<double> activations;
  activations.reserve(records->size());
  for (const auto& rec : *records)
    activations.push_back(base_activation(rec, now, memory.params, rng));
  const std::vector<double> probs = retrieval_probabilities(activations, memory.params.tau);
  double value = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) value += probs[i] * (*records)[i].outcome;
  return value;
}

/// Argmax of blended_value over the candidates, evaluated in candidate order
/// with fresh noise per candidate; exact ties are broken uniformly at random.
template <class State, class ActionT>
ActionT choose_best(const IblMemory<State, ActionT>& memory, const State& s,
                    std::span<const ActionT> candidates, std::int64_t now, Rng& rng) {
  if (candidates.empty()) fail(Errc::empty_candidates, "no candidate actions");
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double v = blended_value(memory, s, candidates[i], now, rng);
    if (v > best) {
      best = v;
      ties.assign(1, i);
    } else if (v == best) {
      ties.push_back(i);
    }
  }
  return candidates[ties.size() == 1 ? ties[0] : ties[rng.uniform_index(ties.size())]];
}

/// End-of-game credit assignment: every step of the trajectory is recorded as
/// an instance carrying the same outcome, at its original decision time. The
/// memory clock is not advanced.
template <class State, class ActionT>
void commit_trajectory(IblMemory<State, ActionT>& memory,
                       std::span<const TrajectoryStep<State, ActionT>> steps, double outcome) {
  std::int64_t prev = std::numeric_limits<std::int64_t>::min();
  for (const auto& step : steps) {
    if (step.time <= prev) fail(Errc::non_monotone_time, "trajectory times must strictly increase");
    if (step.time > memory.clock)
      fail(Errc::non_monotone_time, "trajectory time beyond the memory clock");
    prev = step.time;
    memory.record({step.state, step.action, outcome}, step.time);
  }
}

}  // namespace delegrid
