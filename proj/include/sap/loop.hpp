#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sap/agents.hpp"
#include "sap/scenario.hpp"
#include "sap/scoring.hpp"

namespace sap {

enum class AcceptanceRule { strict_exceed, meet_or_exceed };

struct LoopConfig {
  int max_iterations = 5;  // hard cap on generator rounds per scenario
  AcceptanceRule acceptance = AcceptanceRule::strict_exceed;
  bool promote_benchmark = true;
  /// When set, the benchmark plan is not scored by the evaluator; this value
  /// is used as its overall score instead.
  std::optional<double> benchmark_overall_override;
};

struct RoundRecord {
  FsmPlan plan;
  Evaluation evaluation;
};

struct LoopResult {
  std::string scenario_id;
  FsmPlan adopted_plan;
  Evaluation adopted_evaluation;
  int iterations_used = 0;
  bool converged = false;
  std::vector<RoundRecord> history;  // one entry per round, in order
  double benchmark_overall = 0.0;
};

/// Best auto-generated plan per scenario, kept across runs. Offers below the
/// stored score are ignored, so the registry only ever improves. The human
/// demo lives in the corpus and is never touched.
class BenchmarkRegistry {
 public:
  void offer(const std::string& scenario_id, const FsmPlan& plan, double overall);
  std::optional<FsmPlan> promoted(const std::string& scenario_id) const;
  std::optional<double> promoted_overall(const std::string& scenario_id) const;

 private:
  struct Entry {
    FsmPlan plan;
    double overall = 0.0;
  };
  mutable std::mutex mutex_;
  std::map<std::string, Entry> entries_;
};

/// One generate-evaluate refinement loop over a scenario.
///
/// Round 1 generates without feedback and scores the candidate against the
/// benchmark: the registry's promoted plan when one exists, otherwise the
/// scenario's human demo. The benchmark's own overall score is produced by
/// one evaluator call at loop start (cached), unless the config overrides it
/// or the registry already carries it. While the candidate's overall fails
/// the acceptance rule and budget remains, the evaluator's feedback is fed
/// into the next generation round. On success the candidate is adopted; on
/// budget exhaustion the best-scoring candidate is adopted with
/// converged=false.
///
/// Every backend exchange is appended to `transcript` when given, with an
/// empty timestamp for deterministic backends so replayed runs stay
/// bit-identical.
LoopResult run_sap_loop(const Scenario& scenario,
                        const ActionCatalog& catalog,
                        const PlanDocument& exemplar,
                        AgentBackend& gen_backend,
                        AgentBackend& eval_backend,
                        const LoopConfig& config = {},
                        const PromptTemplates& templates = default_templates(),
                        BenchmarkRegistry* registry = nullptr,
                        std::vector<TranscriptRecord>* transcript = nullptr);

/// Stores the run's adopted plan as the scenario's future benchmark,
/// keeping whichever of old and new scored higher. Unknown scenario ids are
/// rejected.
void promote_benchmark(BenchmarkRegistry& registry,
                       const Corpus& corpus,
                       const std::string& scenario_id,
                       const LoopResult& result);

std::string serialize_loop_result(const LoopResult& result);

}  // namespace sap
