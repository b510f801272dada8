#include "sap/loop.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

#include <json.hpp>

#include "plan_json.hpp"
#include "sap/errors.hpp"

namespace sap {
namespace {

using nlohmann::json;

bool accepts(double candidate_overall, double benchmark_overall, AcceptanceRule rule) {
  return rule == AcceptanceRule::strict_exceed ? candidate_overall > benchmark_overall
                                               : candidate_overall >= benchmark_overall;
}

void append_exchanges(std::vector<TranscriptRecord>* transcript, int round, AgentRole role,
                      const AgentBackend& backend, const std::vector<Exchange>& exchanges) {
  if (transcript == nullptr) return;
  for (const auto& exchange : exchanges) {
    TranscriptRecord record;
    record.round = round;
    record.role = role_name(role);
    record.prompt_hash = prompt_hash(exchange.prompt);
    record.response = exchange.response;
    record.timestamp = "";  // deterministic backends keep transcripts replayable
    record.backend_label = backend.label();
    if (!backend.deterministic()) {
      const auto now = std::chrono::system_clock::now();
      const std::time_t t = std::chrono::system_clock::to_time_t(now);
      std::tm tm{};
      gmtime_r(&t, &tm);
      char buffer[32];
      std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
      record.timestamp = buffer;
    }
    transcript->push_back(std::move(record));
  }
}

}  // namespace

void BenchmarkRegistry::offer(const std::string& scenario_id, const FsmPlan& plan,
                              double overall) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(scenario_id);
  if (it == entries_.end() || overall > it->second.overall) {
    entries_[scenario_id] = {plan, overall};
  }
}

std::optional<FsmPlan> BenchmarkRegistry::promoted(const std::string& scenario_id) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(scenario_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.plan;
}

std::optional<double> BenchmarkRegistry::promoted_overall(const std::string& scenario_id) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(scenario_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.overall;
}

LoopResult run_sap_loop(const Scenario& scenario, const ActionCatalog& catalog,
                        const PlanDocument& exemplar, AgentBackend& gen_backend,
                        AgentBackend& eval_backend, const LoopConfig& config,
                        const PromptTemplates& templates, BenchmarkRegistry* registry,
                        std::vector<TranscriptRecord>* transcript) {
  if (config.max_iterations < 1) {
    throw ValidationError("max_iterations must be at least 1");
  }

  // Benchmark selection: a promoted auto-generated plan wins over the human
  // demo; the demo wins over the exemplar stand-in used when only a score
  // override is supplied.
  FsmPlan benchmark_plan;
  std::optional<double> benchmark_overall;
  if (registry != nullptr) {
    if (auto promoted = registry->promoted(scenario.scenario_id)) {
      benchmark_plan = std::move(*promoted);
      benchmark_overall = registry->promoted_overall(scenario.scenario_id);
    }
  }
  if (benchmark_plan.states.empty()) {
    if (scenario.benchmark_plan.has_value()) {
      benchmark_plan = *scenario.benchmark_plan;
    } else if (config.benchmark_overall_override.has_value()) {
      benchmark_plan = exemplar.plan;
    } else {
      throw ValidationError("scenario \"" + scenario.scenario_id +
                            "\" has no benchmark plan and no benchmark score override");
    }
  }
  if (config.benchmark_overall_override.has_value()) {
    benchmark_overall = config.benchmark_overall_override;
  }
  if (!benchmark_overall.has_value()) {
    // One evaluator call scores the benchmark; the same backend judges
    // candidate and benchmark so their scores are comparable.
    PromptBundle bench_prompt =
        build_evaluator_prompt(benchmark_plan, benchmark_plan, templates.scoring_criteria);
    EvaluationOutcome bench_eval = evaluate_plan(eval_backend, bench_prompt);
    append_exchanges(transcript, 0, AgentRole::evaluator, eval_backend, bench_eval.exchanges);
    benchmark_overall = bench_eval.evaluation.overall;
  }

  LoopResult result;
  result.scenario_id = scenario.scenario_id;
  result.benchmark_overall = *benchmark_overall;

  std::optional<std::string> feedback;
  for (int round = 1; round <= config.max_iterations; ++round) {
    PromptBundle gen_prompt =
        build_generator_prompt(scenario, catalog, exemplar, feedback, templates.sap_prompt);
    GenerationOutcome generated = generate_plan(gen_backend, gen_prompt);
    append_exchanges(transcript, round, AgentRole::generator, gen_backend, generated.exchanges);

    FsmPlan candidate = std::move(generated.plan);
    candidate.plan_id = scenario.scenario_id + ".r" + std::to_string(round);
    candidate.source_model = gen_backend.label();
    candidate.round = round;

    PromptBundle eval_prompt =
        build_evaluator_prompt(candidate, benchmark_plan, templates.scoring_criteria);
    EvaluationOutcome evaluated = evaluate_plan(eval_backend, eval_prompt);
    append_exchanges(transcript, round, AgentRole::evaluator, eval_backend, evaluated.exchanges);

    Evaluation evaluation = std::move(evaluated.evaluation);
    evaluation.plan_id = candidate.plan_id;
    evaluation.benchmark_plan_id = benchmark_plan.plan_id;

    result.history.push_back({candidate, evaluation});
    result.iterations_used = round;

    if (accepts(evaluation.overall, *benchmark_overall, config.acceptance)) {
      result.adopted_plan = std::move(candidate);
      result.adopted_evaluation = std::move(evaluation);
      result.converged = true;
      break;
    }
    feedback = evaluation.feedback;
  }

  if (!result.converged) {
    // Budget exhausted: adopt the best-scoring candidate seen, earliest on
    // ties.
    const auto best = std::max_element(
        result.history.begin(), result.history.end(),
        [](const RoundRecord& a, const RoundRecord& b) {
          return a.evaluation.overall < b.evaluation.overall;
        });
    result.adopted_plan = best->plan;
    result.adopted_evaluation = best->evaluation;
  }

  if (registry != nullptr && config.promote_benchmark) {
    registry->offer(scenario.scenario_id, result.adopted_plan,
                    result.adopted_evaluation.overall);
  }
  return result;
}

void promote_benchmark(BenchmarkRegistry& registry, const Corpus& corpus,
                       const std::string& scenario_id, const LoopResult& result) {
  if (corpus.find(scenario_id) == nullptr) {
    throw ValidationError("unknown scenario_id \"" + scenario_id + "\"");
  }
  const auto errors = referential_errors(result.adopted_plan);
  if (!errors.empty()) {
    throw ValidationError("adopted plan fails referential integrity: [" +
                          errors.front().location + "] " + errors.front().message);
  }
  registry.offer(scenario_id, result.adopted_plan, result.adopted_evaluation.overall);
}

std::string serialize_loop_result(const LoopResult& result) {
  json doc;
  doc["scenario_id"] = result.scenario_id;
  doc["converged"] = result.converged;
  doc["iterations_used"] = result.iterations_used;
  doc["benchmark_overall"] = result.benchmark_overall;
  doc["adopted_plan"] = detail::plan_to_json(result.adopted_plan);
  doc["adopted_evaluation"] = detail::evaluation_to_json(result.adopted_evaluation);
  json history = json::array();
  for (const auto& record : result.history) {
    history.push_back({{"plan", detail::plan_to_json(record.plan)},
                       {"evaluation", detail::evaluation_to_json(record.evaluation)}});
  }
  doc["history"] = std::move(history);
  return doc.dump(2) + "\n";
}

}  // namespace sap
