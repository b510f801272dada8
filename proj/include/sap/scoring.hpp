#pragma once

#include <array>
#include <string>
#include <vector>

namespace sap {

/// The seven judged axes, each on a 0-10 scale.
struct DimensionScores {
  double state_coverage = 0.0;
  double transition_coverage = 0.0;
  double cyclomatic_complexity_score = 0.0;
  double safety_mindset = 0.0;
  double scalability = 0.0;
  double assistance_ux = 0.0;
  double actions_set_alignment = 0.0;

  std::array<double, 7> as_array() const;

  /// Wire keys, in the fixed reporting order.
  static const std::array<const char*, 7>& dimension_names();

  bool operator==(const DimensionScores&) const = default;
};

/// Unweighted arithmetic mean of the seven dimensions. Scores outside
/// [0, 10] are rejected.
double overall_score(const DimensionScores& scores);

struct Evaluation {
  std::string plan_id;
  DimensionScores scores;
  double overall = 0.0;  // always recomputed from the dimensions
  std::string feedback;
  std::string evaluator_label;
  std::string benchmark_plan_id;

  bool operator==(const Evaluation&) const = default;
};

/// Parses an evaluator reply: the first fenced block that is a JSON object,
/// holding the seven dimension scores plus a feedback string. The overall
/// score is recomputed; a model-reported total that disagrees is ignored and
/// noted in `warnings`. Unknown extra keys in the reply are tolerated.
Evaluation parse_evaluator_reply(const std::string& text,
                                 std::vector<std::string>* warnings = nullptr);

/// JSON persistence for run transcripts. parse(serialize(e)) == e.
std::string serialize_evaluation(const Evaluation& evaluation);
Evaluation parse_evaluation(const std::string& json_text);

}  // namespace sap
