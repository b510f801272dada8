#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sap/fsm.hpp"

// Shared fixtures and independent oracles. The oracles deliberately use
// different algorithms than the library (flood fill instead of union-find,
// fixed-point iteration instead of BFS, permutation enumeration instead of
// closed-form midpoints) so they can catch implementation mistakes.

namespace testsupport {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot open ", path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline sap::FsmPlan make_plan(const std::vector<std::string>& states,
                              const std::string& initial,
                              const std::vector<std::tuple<std::string, std::string, std::string>>&
                                  transitions) {
  sap::FsmPlan plan;
  for (const auto& name : states) {
    plan.states.push_back({name, "", false});
  }
  plan.initial_state = initial;
  for (const auto& [from, to, trigger] : transitions) {
    plan.transitions.push_back({from, to, trigger, {}});
  }
  return plan;
}

// Weakly connected component count by repeated flood fill over an adjacency
// matrix. Independent of the union-find in the library.
inline int oracle_component_count(const sap::FsmPlan& plan) {
  const std::size_t n = plan.states.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[plan.states[i].name] = i;
  std::vector<std::vector<bool>> adjacent(n, std::vector<bool>(n, false));
  for (const auto& t : plan.transitions) {
    adjacent[index.at(t.from)][index.at(t.to)] = true;
    adjacent[index.at(t.to)][index.at(t.from)] = true;
  }
  std::vector<bool> seen(n, false);
  int components = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    ++components;
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t current = stack.back();
      stack.pop_back();
      for (std::size_t next = 0; next < n; ++next) {
        if (adjacent[current][next] && !seen[next]) {
          seen[next] = true;
          stack.push_back(next);
        }
      }
    }
  }
  return components;
}

inline int oracle_cyclomatic(const sap::FsmPlan& plan) {
  return static_cast<int>(plan.transitions.size()) - static_cast<int>(plan.states.size()) +
         2 * oracle_component_count(plan);
}

// Reachable set by fixed-point iteration: keep sweeping all transitions
// until nothing new is marked.
inline std::set<std::string> oracle_reachable(const sap::FsmPlan& plan) {
  std::set<std::string> reached{plan.initial_state};
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& t : plan.transitions) {
      if (reached.contains(t.from) && !reached.contains(t.to)) {
        reached.insert(t.to);
        changed = true;
      }
    }
  }
  return reached;
}

// Mean rank position per model over every ordering consistent with the
// totals (tied models permuted freely).
inline std::map<std::string, double> oracle_tie_ranks(const std::map<std::string, double>& totals) {
  std::vector<std::string> labels;
  for (const auto& [label, total] : totals) {
    (void)total;
    labels.push_back(label);
  }
  std::sort(labels.begin(), labels.end());
  std::map<std::string, double> position_sums;
  int orderings = 0;
  do {
    bool valid = true;
    for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
      if (totals.at(labels[i]) < totals.at(labels[i + 1])) {
        valid = false;
        break;
      }
    }
    if (!valid) continue;
    ++orderings;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      position_sums[labels[i]] += static_cast<double>(i + 1);
    }
  } while (std::next_permutation(labels.begin(), labels.end()));
  std::map<std::string, double> ranks;
  for (auto& [label, sum] : position_sums) {
    ranks[label] = sum / orderings;
  }
  return ranks;
}

// Random valid plans with identifier state names, unique triggers and a mix
// of helper invocations. Provenance fields stay at their defaults: they are
// runtime-only and not carried by the serialized format.
inline sap::FsmPlan random_plan(std::mt19937& rng, int max_states = 12) {
  std::uniform_int_distribution<int> state_count_dist(1, max_states);
  const int state_count = state_count_dist(rng);
  sap::FsmPlan plan;
  std::uniform_int_distribution<int> id_dist(0, 999999);
  plan.plan_id = "plan_" + std::to_string(id_dist(rng));
  for (int i = 0; i < state_count; ++i) {
    sap::StateDef state;
    state.name = "S" + std::to_string(i);
    state.description = (i % 3 == 0) ? "watch the \"area\" closely" : "phase " + std::to_string(i);
    state.is_terminal = (i == state_count - 1) && (state_count > 1);
    plan.states.push_back(std::move(state));
  }
  std::uniform_int_distribution<int> initial_dist(0, state_count - 1);
  plan.initial_state = plan.states[static_cast<std::size_t>(initial_dist(rng))].name;

  std::uniform_int_distribution<int> transition_count_dist(0, 3 * state_count);
  const int transition_count = transition_count_dist(rng);
  std::uniform_int_distribution<int> state_dist(0, state_count - 1);
  std::uniform_int_distribution<int> action_count_dist(0, 2);
  for (int i = 0; i < transition_count; ++i) {
    sap::TransitionDef t;
    t.from = plan.states[static_cast<std::size_t>(state_dist(rng))].name;
    t.to = plan.states[static_cast<std::size_t>(state_dist(rng))].name;
    t.trigger = "condition " + std::to_string(i) + " holds";
    const int action_count = action_count_dist(rng);
    for (int a = 0; a < action_count; ++a) {
      sap::ActionInvocation invocation;
      invocation.helper_name = "helper_" + std::to_string(i) + "_" + std::to_string(a);
      invocation.catalog_actions = {"move_to", "monitor_area"};
      invocation.target_objects = {"object " + std::to_string(a)};
      t.actions.push_back(std::move(invocation));
    }
    plan.transitions.push_back(std::move(t));
  }
  return plan;
}

}  // namespace testsupport
