#include "sap/scoring.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "plan_json.hpp"
#include "sap/errors.hpp"
#include "sap/plan_text.hpp"

namespace sap {
namespace {

using nlohmann::json;

double& dimension_ref(DimensionScores& scores, std::size_t index) {
  switch (index) {
    case 0: return scores.state_coverage;
    case 1: return scores.transition_coverage;
    case 2: return scores.cyclomatic_complexity_score;
    case 3: return scores.safety_mindset;
    case 4: return scores.scalability;
    case 5: return scores.assistance_ux;
    default: return scores.actions_set_alignment;
  }
}

}  // namespace

std::array<double, 7> DimensionScores::as_array() const {
  return {state_coverage,  transition_coverage, cyclomatic_complexity_score, safety_mindset,
          scalability,     assistance_ux,       actions_set_alignment};
}

const std::array<const char*, 7>& DimensionScores::dimension_names() {
  static const std::array<const char*, 7> names = {
      "state_coverage", "transition_coverage", "cyclomatic_complexity", "safety_mindset",
      "scalability",    "assistance_ux",       "actions_set_alignment"};
  return names;
}

double overall_score(const DimensionScores& scores) {
  const auto values = scores.as_array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 10.0)) {
      throw ValidationError(std::string("dimension \"") +
                            DimensionScores::dimension_names()[i] + "\" out of range [0, 10]");
    }
  }
  return std::accumulate(values.begin(), values.end(), 0.0) / 7.0;
}

namespace detail {

json evaluation_to_json(const Evaluation& evaluation) {
  json scores;
  const auto values = evaluation.scores.as_array();
  const auto& names = DimensionScores::dimension_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    scores[names[i]] = values[i];
  }
  return json{{"plan_id", evaluation.plan_id},
              {"scores", std::move(scores)},
              {"overall", evaluation.overall},
              {"feedback", evaluation.feedback},
              {"evaluator_label", evaluation.evaluator_label},
              {"benchmark_plan_id", evaluation.benchmark_plan_id}};
}

Evaluation evaluation_from_json(const json& doc) {
  if (!doc.is_object()) {
    throw SchemaError("evaluation must be a JSON object");
  }
  Evaluation evaluation;
  evaluation.plan_id = doc.value("plan_id", "");
  evaluation.feedback = doc.value("feedback", "");
  evaluation.evaluator_label = doc.value("evaluator_label", "");
  evaluation.benchmark_plan_id = doc.value("benchmark_plan_id", "");
  if (!doc.contains("scores") || !doc["scores"].is_object()) {
    throw SchemaError("evaluation requires a \"scores\" object");
  }
  const json& scores = doc["scores"];
  const auto& names = DimensionScores::dimension_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!scores.contains(names[i]) || !scores[names[i]].is_number()) {
      throw SchemaError(std::string("evaluation scores missing dimension \"") + names[i] + "\"");
    }
    dimension_ref(evaluation.scores, i) = scores[names[i]].get<double>();
  }
  evaluation.overall = overall_score(evaluation.scores);
  return evaluation;
}

}  // namespace detail

Evaluation parse_evaluator_reply(const std::string& text, std::vector<std::string>* warnings) {
  const auto blocks = find_fenced_blocks(text);
  if (blocks.empty()) {
    throw ExtractionError("no fenced JSON block found in evaluator reply");
  }

  json reply;
  bool found = false;
  for (const auto& block : blocks) {
    json parsed = json::parse(block.body, nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object()) {
      reply = std::move(parsed);
      found = true;
      break;
    }
  }
  if (!found) {
    throw ExtractionError("no fenced block in evaluator reply parses as a JSON object");
  }

  Evaluation evaluation;
  const auto& names = DimensionScores::dimension_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!reply.contains(names[i])) {
      throw SchemaError(std::string("missing dimension \"") + names[i] + "\"");
    }
    if (!reply[names[i]].is_number()) {
      throw SchemaError(std::string("dimension \"") + names[i] + "\" must be a number");
    }
    const double value = reply[names[i]].get<double>();
    if (!(value >= 0.0 && value <= 10.0)) {
      throw SchemaError(std::string("dimension \"") + names[i] + "\" out of range [0, 10]");
    }
    dimension_ref(evaluation.scores, i) = value;
  }
  if (!reply.contains("feedback") || !reply["feedback"].is_string()) {
    throw SchemaError("missing \"feedback\" string");
  }
  evaluation.feedback = reply["feedback"].get<std::string>();

  evaluation.overall = overall_score(evaluation.scores);
  if (reply.contains("overall") && reply["overall"].is_number()) {
    const double reported = reply["overall"].get<double>();
    if (std::abs(reported - evaluation.overall) > 1e-9 && warnings != nullptr) {
      warnings->push_back("model-reported overall " + std::to_string(reported) +
                          " ignored; recomputed " + std::to_string(evaluation.overall));
    }
  }
  return evaluation;
}

std::string serialize_evaluation(const Evaluation& evaluation) {
  return detail::evaluation_to_json(evaluation).dump(2) + "\n";
}

Evaluation parse_evaluation(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& ex) {
    throw SchemaError(std::string("evaluation is not valid JSON: ") + ex.what());
  }
  return detail::evaluation_from_json(doc);
}

}  // namespace sap
