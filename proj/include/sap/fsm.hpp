#pragma once

#include <string>
#include <vector>

namespace sap {

class ActionCatalog;

/// A helper method invoked on a transition. Helpers are plan-level wrappers
/// that must decompose into identifiers from the constrained action catalog;
/// a decomposition entry that does not resolve is an alignment miss.
struct ActionInvocation {
  std::string helper_name;
  std::vector<std::string> catalog_actions;
  std::vector<std::string> target_objects;

  bool operator==(const ActionInvocation&) const = default;
};

struct TransitionDef {
  std::string from;
  std::string to;
  std::string trigger;  // guard condition that fires the transition
  std::vector<ActionInvocation> actions;

  bool operator==(const TransitionDef&) const = default;
};

struct StateDef {
  std::string name;
  std::string description;
  bool is_terminal = false;

  bool operator==(const StateDef&) const = default;
};

/// A hazard-response plan: named states, guarded transitions and the helper
/// actions fired along them. Treated as an immutable value after
/// construction; every operation in this header is a pure function.
struct FsmPlan {
  std::string plan_id;
  std::vector<StateDef> states;  // order is meaningful; names must be unique
  std::string initial_state;
  std::vector<TransitionDef> transitions;
  std::string source_model;  // runtime provenance, not serialized
  int round = 0;             // iteration index the plan was produced in

  bool operator==(const FsmPlan&) const = default;
};

/// Compares serialized content only: plan_id, states, initial state and
/// transitions. Ignores the runtime provenance fields.
bool structurally_equal(const FsmPlan& a, const FsmPlan& b);

enum class Severity { error, warning };

struct Violation {
  Severity severity = Severity::error;
  std::string location;
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const;  // true iff there is no error-severity entry
  int error_count() const;
  int warning_count() const;
};

struct StructuralMetrics {
  int state_count = 0;
  int transition_count = 0;
  double reachable_state_fraction = 0.0;
  double guarded_transition_fraction = 0.0;
  int cyclomatic_complexity = 0;
  int unaligned_action_count = 0;
  std::vector<std::string> dead_state_names;
};

struct AlignmentMiss {
  std::string helper_name;
  std::string missing_action;

  bool operator==(const AlignmentMiss&) const = default;
};

struct AlignmentResult {
  int aligned_count = 0;
  std::vector<AlignmentMiss> unaligned;  // one entry per occurrence
};

/// Identifier syntax: a letter followed by letters, digits or underscores.
bool is_identifier(const std::string& text);

/// Referential integrity only: a non-empty state list with unique names, a
/// defined initial state, transitions between defined states and unique
/// (from, trigger) pairs. Violations hand back as data, never thrown.
std::vector<Violation> referential_errors(const FsmPlan& plan);

/// Full invariant check. The overload taking a catalog additionally requires
/// every helper decomposition entry to resolve in the catalog. Transitions
/// with no actions are reported as warnings, not errors.
ValidationReport validate_plan(const FsmPlan& plan);
ValidationReport validate_plan(const FsmPlan& plan, const ActionCatalog& catalog);

/// E - N + 2P over the state digraph, where P counts weakly connected
/// components. Throws ValidationError if referential integrity fails.
int cyclomatic_complexity(const FsmPlan& plan);

/// Checks every helper decomposition entry against the catalog. Misses are
/// listed once per occurrence; resolution is exact-then-normalized, never
/// fuzzy.
AlignmentResult action_alignment(const FsmPlan& plan, const ActionCatalog& catalog);

/// Structural coverage proxies: reachable-state fraction from the initial
/// state, dead states, guarded-transition fraction and cyclomatic
/// complexity. A plan with no transitions counts as fully guarded. The
/// catalog overload also fills unaligned_action_count.
StructuralMetrics reachability_metrics(const FsmPlan& plan);
StructuralMetrics reachability_metrics(const FsmPlan& plan, const ActionCatalog& catalog);

}  // namespace sap
