#pragma once

#include <map>
#include <string>
#include <vector>

namespace sap {

/// Per-scenario totals (summed dimension scores) for two or more models.
struct ScenarioScores {
  std::string scenario_id;
  std::map<std::string, double> totals;  // model label -> total score
};

/// Differential ranks for one scenario. Rank 1 is best; tied models share
/// the arithmetic mean of the positions they span, so ranks always sum to
/// k(k+1)/2 for k ranked models.
struct RankingRecord {
  std::string scenario_id;
  std::map<std::string, double> ranks;

  bool operator==(const RankingRecord&) const = default;
};

/// Ranks models by total, highest first. Equal totals receive mid-point
/// ranks (a tied pair at the top of two models gets 1.5 each). Requires at
/// least two models.
RankingRecord rank_scenario(const ScenarioScores& scores);

/// Aggregated rank-based scores: R_k is the mean of model k's ranks over the
/// scenarios that ranked it. Models missing from a scenario simply do not
/// count toward that model's N.
struct RbsReport {
  std::map<std::string, double> per_model;  // model label -> R_k
  std::map<std::string, int> per_model_n;   // scenarios covering the model
  int scenario_count = 0;
  std::map<int, std::map<std::string, double>> by_level;  // level -> R_k
  std::map<int, std::map<std::string, int>> by_level_n;
};

RbsReport aggregate_rbs(const std::vector<RankingRecord>& records);

/// Same, plus a per-complexity-level breakdown driven by a scenario -> level
/// map. Records whose scenario is missing from the map are rejected.
RbsReport aggregate_rbs(const std::vector<RankingRecord>& records,
                        const std::map<std::string, int>& scenario_levels);

struct AgreementResult {
  int matches = 0;
  int total = 0;
  double fraction = 0.0;
};

/// A scenario counts as a match iff the candidate's full rank ordering,
/// including tie structure, equals the reference's. Both sides must cover
/// the same scenarios and, per scenario, the same models.
AgreementResult ranking_agreement(const std::vector<RankingRecord>& candidate,
                                  const std::vector<RankingRecord>& reference);

/// CSV ingestion mirroring the annotation tables. Header
/// "scenario_id,model_label,rank"; a rank of "None" drops that model from
/// the scenario. Each resulting record must be a tie-adjusted permutation of
/// 1..k.
std::vector<RankingRecord> ingest_rank_csv(const std::string& csv_text);

/// Header "scenario_id,model_label,total"; feed the result through
/// rank_scenario to obtain ranking records.
std::vector<ScenarioScores> ingest_score_csv(const std::string& csv_text);

/// Aligned plain-text table, best model first.
std::string render_report_table(const RbsReport& report);
std::string report_to_json(const RbsReport& report);

}  // namespace sap
