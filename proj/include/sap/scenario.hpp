#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sap/fsm.hpp"

namespace sap {

/// A hazard vignette: scene text, the concept set describing it, a
/// complexity tier from 1 (objects only) to 4 (highly urgent), and an
/// optional human-demonstrated benchmark plan.
struct Scenario {
  std::string scenario_id;
  std::string description;
  std::vector<std::string> concepts;  // stored sorted and deduplicated
  int complexity_level = 1;
  std::optional<FsmPlan> benchmark_plan;
  std::string provenance;  // free-text origin marker, may be empty
};

struct Corpus {
  std::vector<Scenario> scenarios;
  std::array<int, 4> level_histogram{};  // index 0 holds level-1 count

  const Scenario* find(const std::string& scenario_id) const;
};

/// Loads a corpus from JSON Lines, one scenario object per line. Embedded
/// benchmark plans are parsed as canonical plan documents and must pass
/// validation; a benchmark without a plan_id inherits the scenario_id.
/// Errors name the offending record index.
Corpus load_corpus(const std::string& jsonl_text);
Corpus load_corpus_file(const std::string& path);

/// Deterministic JSON Lines rendering; load(serialize(c)) equals c.
std::string serialize_corpus(const Corpus& corpus);

/// The stored human-demo plan, or nullopt when the scenario has none.
/// Unknown scenario ids raise ValidationError.
std::optional<FsmPlan> get_benchmark(const Corpus& corpus, const std::string& scenario_id);

}  // namespace sap
