#include "sap/fsm.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "sap/action_catalog.hpp"
#include "sap/errors.hpp"

namespace sap {
namespace {

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::map<std::string, std::size_t> state_index(const FsmPlan& plan) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < plan.states.size(); ++i) {
    index.emplace(plan.states[i].name, i);
  }
  return index;
}

// Union-find over state indices; weak connectivity, so edge direction is
// ignored.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }
  int component_count() {
    std::set<std::size_t> roots;
    for (std::size_t i = 0; i < parent_.size(); ++i) roots.insert(find(i));
    return static_cast<int>(roots.size());
  }

 private:
  std::vector<std::size_t> parent_;
};

void require_referential_integrity(const FsmPlan& plan) {
  auto errors = referential_errors(plan);
  if (errors.empty()) return;
  std::ostringstream message;
  message << "plan fails referential integrity:";
  for (const auto& violation : errors) {
    message << " [" << violation.location << "] " << violation.message << ";";
  }
  throw ValidationError(message.str());
}

}  // namespace

bool structurally_equal(const FsmPlan& a, const FsmPlan& b) {
  return a.plan_id == b.plan_id && a.states == b.states &&
         a.initial_state == b.initial_state && a.transitions == b.transitions;
}

bool ValidationReport::ok() const { return error_count() == 0; }

int ValidationReport::error_count() const {
  return static_cast<int>(std::count_if(
      violations.begin(), violations.end(),
      [](const Violation& v) { return v.severity == Severity::error; }));
}

int ValidationReport::warning_count() const {
  return static_cast<int>(violations.size()) - error_count();
}

bool is_identifier(const std::string& text) {
  if (text.empty() || !std::isalpha(static_cast<unsigned char>(text.front()))) {
    return false;
  }
  return std::all_of(text.begin(), text.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::vector<Violation> referential_errors(const FsmPlan& plan) {
  std::vector<Violation> errors;
  auto err = [&errors](std::string location, std::string message) {
    errors.push_back({Severity::error, std::move(location), std::move(message)});
  };

  if (plan.states.empty()) {
    err("plan", "plan has no states");
    return errors;
  }

  std::set<std::string> names;
  for (std::size_t i = 0; i < plan.states.size(); ++i) {
    const auto& name = plan.states[i].name;
    if (!names.insert(name).second) {
      err("state " + std::to_string(i), "duplicate state name " + quoted(name));
    }
  }

  if (!names.contains(plan.initial_state)) {
    err("plan", "initial state " + quoted(plan.initial_state) + " is not a defined state");
  }

  std::set<std::pair<std::string, std::string>> guards;
  for (std::size_t i = 0; i < plan.transitions.size(); ++i) {
    const auto& t = plan.transitions[i];
    const std::string location = "transition " + std::to_string(i);
    if (!names.contains(t.from)) {
      err(location, "undefined source state " + quoted(t.from));
    }
    if (!names.contains(t.to)) {
      err(location, "undefined target state " + quoted(t.to));
    }
    if (!guards.insert({t.from, t.trigger}).second) {
      err(location, "duplicate (from, trigger) pair (" + quoted(t.from) + ", " +
                        quoted(t.trigger) + ")");
    }
  }
  return errors;
}

static void validate_impl(const FsmPlan& plan, const ActionCatalog* catalog,
                          ValidationReport& report) {
  auto add = [&report](Severity severity, std::string location, std::string message) {
    report.violations.push_back({severity, std::move(location), std::move(message)});
  };

  for (auto& violation : referential_errors(plan)) {
    report.violations.push_back(std::move(violation));
  }

  for (std::size_t i = 0; i < plan.states.size(); ++i) {
    if (!is_identifier(plan.states[i].name)) {
      add(Severity::error, "state " + std::to_string(i),
          "state name " + quoted(plan.states[i].name) + " is not a valid identifier");
    }
  }

  if (plan.round < 0) {
    add(Severity::error, "plan", "round must be non-negative");
  }

  if (plan.transitions.empty()) {
    add(Severity::warning, "plan", "no transitions");
  }

  for (std::size_t i = 0; i < plan.transitions.size(); ++i) {
    const auto& t = plan.transitions[i];
    const std::string location = "transition " + std::to_string(i);
    if (t.trigger.empty()) {
      add(Severity::error, location, "empty trigger");
    }
    if (t.actions.empty()) {
      add(Severity::warning, location, "no actions; observation-only transition");
    }
    for (const auto& invocation : t.actions) {
      if (!is_identifier(invocation.helper_name)) {
        add(Severity::error, location,
            "helper name " + quoted(invocation.helper_name) + " is not a valid identifier");
      }
      if (catalog != nullptr) {
        if (invocation.catalog_actions.empty()) {
          add(Severity::warning, location,
              "helper " + quoted(invocation.helper_name) + " declares no catalog actions");
        }
        for (const auto& action : invocation.catalog_actions) {
          if (!catalog->resolve(action)) {
            add(Severity::error, location,
                "helper " + quoted(invocation.helper_name) + ": unknown catalog action " +
                    quoted(action));
          }
        }
      }
    }
  }
}

ValidationReport validate_plan(const FsmPlan& plan) {
  ValidationReport report;
  validate_impl(plan, nullptr, report);
  return report;
}

ValidationReport validate_plan(const FsmPlan& plan, const ActionCatalog& catalog) {
  ValidationReport report;
  validate_impl(plan, &catalog, report);
  return report;
}

int cyclomatic_complexity(const FsmPlan& plan) {
  require_referential_integrity(plan);
  const auto index = state_index(plan);
  DisjointSets components(plan.states.size());
  for (const auto& t : plan.transitions) {
    components.unite(index.at(t.from), index.at(t.to));
  }
  const int edges = static_cast<int>(plan.transitions.size());
  const int nodes = static_cast<int>(plan.states.size());
  return edges - nodes + 2 * components.component_count();
}

AlignmentResult action_alignment(const FsmPlan& plan, const ActionCatalog& catalog) {
  AlignmentResult result;
  for (const auto& t : plan.transitions) {
    for (const auto& invocation : t.actions) {
      for (const auto& action : invocation.catalog_actions) {
        if (catalog.resolve(action)) {
          ++result.aligned_count;
        } else {
          result.unaligned.push_back({invocation.helper_name, action});
        }
      }
    }
  }
  return result;
}

static StructuralMetrics metrics_impl(const FsmPlan& plan, const ActionCatalog* catalog) {
  require_referential_integrity(plan);
  StructuralMetrics metrics;
  metrics.state_count = static_cast<int>(plan.states.size());
  metrics.transition_count = static_cast<int>(plan.transitions.size());

  const auto index = state_index(plan);
  std::vector<std::vector<std::size_t>> adjacency(plan.states.size());
  for (const auto& t : plan.transitions) {
    adjacency[index.at(t.from)].push_back(index.at(t.to));
  }

  std::vector<bool> reachable(plan.states.size(), false);
  std::queue<std::size_t> frontier;
  frontier.push(index.at(plan.initial_state));
  reachable[index.at(plan.initial_state)] = true;
  while (!frontier.empty()) {
    const auto current = frontier.front();
    frontier.pop();
    for (auto next : adjacency[current]) {
      if (!reachable[next]) {
        reachable[next] = true;
        frontier.push(next);
      }
    }
  }

  int reached = 0;
  for (std::size_t i = 0; i < plan.states.size(); ++i) {
    if (reachable[i]) {
      ++reached;
    } else {
      metrics.dead_state_names.push_back(plan.states[i].name);
    }
  }
  metrics.reachable_state_fraction =
      static_cast<double>(reached) / static_cast<double>(plan.states.size());

  if (plan.transitions.empty()) {
    metrics.guarded_transition_fraction = 1.0;  // vacuously all guarded
  } else {
    const auto guarded = std::count_if(plan.transitions.begin(), plan.transitions.end(),
                                       [](const TransitionDef& t) { return !t.trigger.empty(); });
    metrics.guarded_transition_fraction =
        static_cast<double>(guarded) / static_cast<double>(plan.transitions.size());
  }

  metrics.cyclomatic_complexity = cyclomatic_complexity(plan);
  if (catalog != nullptr) {
    metrics.unaligned_action_count =
        static_cast<int>(action_alignment(plan, *catalog).unaligned.size());
  }
  return metrics;
}

StructuralMetrics reachability_metrics(const FsmPlan& plan) {
  return metrics_impl(plan, nullptr);
}

StructuralMetrics reachability_metrics(const FsmPlan& plan, const ActionCatalog& catalog) {
  return metrics_impl(plan, &catalog);
}

}  // namespace sap
