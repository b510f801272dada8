#include "sap/rbs.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "sap/errors.hpp"

namespace sap {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool is_none(const std::string& value) {
  if (value.size() != 4) return false;
  std::string lowered;
  for (char c : value) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lowered == "none";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) {
    fields.push_back(trim(field));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_number(const std::string& text, const std::string& context) {
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &consumed);
  } catch (const std::exception&) {
    throw SchemaError(context + ": not a number: \"" + text + "\"");
  }
  if (consumed != text.size()) {
    throw SchemaError(context + ": not a number: \"" + text + "\"");
  }
  return value;
}

void check_rank_sum(const RankingRecord& record) {
  const std::size_t k = record.ranks.size();
  double sum = 0.0;
  for (const auto& [label, rank] : record.ranks) {
    (void)label;
    sum += rank;
  }
  const double expected = static_cast<double>(k * (k + 1)) / 2.0;
  if (std::abs(sum - expected) > 1e-9) {
    throw SchemaError("scenario \"" + record.scenario_id +
                      "\": ranks are not a tie-adjusted permutation of 1.." + std::to_string(k));
  }
}

// Shared CSV walk: header check plus per-row callback.
void for_each_csv_row(const std::string& csv_text, const std::string& expected_header,
                      const std::function<void(int, const std::vector<std::string>&)>& row_fn) {
  std::istringstream stream(csv_text);
  std::string line;
  int line_number = 0;
  bool header_seen = false;
  while (std::getline(stream, line)) {
    ++line_number;
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    if (!header_seen) {
      std::string compact;
      for (char c : trimmed) {
        if (c != ' ') compact.push_back(c);
      }
      if (compact != expected_header) {
        throw SchemaError("line 1: expected header \"" + expected_header + "\", got \"" + trimmed +
                          "\"");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split_csv_line(trimmed);
    if (fields.size() != 3) {
      throw SchemaError("line " + std::to_string(line_number) + ": expected 3 fields, got " +
                        std::to_string(fields.size()));
    }
    row_fn(line_number, fields);
  }
  if (!header_seen) {
    throw SchemaError("empty CSV");
  }
}

}  // namespace

RankingRecord rank_scenario(const ScenarioScores& scores) {
  if (scores.totals.size() < 2) {
    throw ValidationError("scenario \"" + scores.scenario_id +
                          "\": ranking requires at least 2 models");
  }
  std::vector<std::pair<std::string, double>> ordered(scores.totals.begin(), scores.totals.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;  // highest total first
    return a.first < b.first;
  });

  RankingRecord record;
  record.scenario_id = scores.scenario_id;
  std::size_t i = 0;
  while (i < ordered.size()) {
    std::size_t j = i;
    while (j < ordered.size() && ordered[j].second == ordered[i].second) ++j;
    // Positions i+1 .. j span the tied block; everyone gets the mid-point.
    const double midpoint = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t m = i; m < j; ++m) {
      record.ranks[ordered[m].first] = midpoint;
    }
    i = j;
  }
  return record;
}

static RbsReport aggregate_impl(const std::vector<RankingRecord>& records,
                                const std::map<std::string, int>* scenario_levels) {
  if (records.empty()) {
    throw ValidationError("no ranking records to aggregate");
  }
  std::map<std::string, double> sums;
  std::map<std::string, int> counts;
  std::map<int, std::map<std::string, double>> level_sums;
  std::map<int, std::map<std::string, int>> level_counts;

  for (const auto& record : records) {
    int level = 0;
    if (scenario_levels != nullptr) {
      auto it = scenario_levels->find(record.scenario_id);
      if (it == scenario_levels->end()) {
        throw SchemaError("scenario \"" + record.scenario_id + "\" has no complexity level");
      }
      level = it->second;
    }
    for (const auto& [label, rank] : record.ranks) {
      sums[label] += rank;
      counts[label] += 1;
      if (scenario_levels != nullptr) {
        level_sums[level][label] += rank;
        level_counts[level][label] += 1;
      }
    }
  }

  RbsReport report;
  report.scenario_count = static_cast<int>(records.size());
  for (const auto& [label, sum] : sums) {
    report.per_model[label] = sum / counts[label];
    report.per_model_n[label] = counts[label];
  }
  for (const auto& [level, model_sums] : level_sums) {
    for (const auto& [label, sum] : model_sums) {
      report.by_level[level][label] = sum / level_counts[level][label];
      report.by_level_n[level][label] = level_counts[level][label];
    }
  }
  return report;
}

RbsReport aggregate_rbs(const std::vector<RankingRecord>& records) {
  return aggregate_impl(records, nullptr);
}

RbsReport aggregate_rbs(const std::vector<RankingRecord>& records,
                        const std::map<std::string, int>& scenario_levels) {
  return aggregate_impl(records, &scenario_levels);
}

AgreementResult ranking_agreement(const std::vector<RankingRecord>& candidate,
                                  const std::vector<RankingRecord>& reference) {
  std::map<std::string, const RankingRecord*> reference_by_id;
  for (const auto& record : reference) {
    reference_by_id[record.scenario_id] = &record;
  }
  if (candidate.size() != reference.size() || candidate.size() != reference_by_id.size()) {
    throw ValidationError("candidate and reference cover different scenario sets");
  }

  AgreementResult result;
  result.total = static_cast<int>(candidate.size());
  for (const auto& record : candidate) {
    auto it = reference_by_id.find(record.scenario_id);
    if (it == reference_by_id.end()) {
      throw ValidationError("scenario \"" + record.scenario_id + "\" missing from reference");
    }
    const RankingRecord& ref = *it->second;
    if (record.ranks.size() != ref.ranks.size()) {
      throw ValidationError("scenario \"" + record.scenario_id +
                            "\": model sets differ between candidate and reference");
    }
    bool match = true;
    for (const auto& [label, rank] : record.ranks) {
      auto ref_rank = ref.ranks.find(label);
      if (ref_rank == ref.ranks.end()) {
        throw ValidationError("scenario \"" + record.scenario_id + "\": model \"" + label +
                              "\" missing from reference");
      }
      if (ref_rank->second != rank) {
        match = false;
      }
    }
    if (match) ++result.matches;
  }
  result.fraction = result.total > 0
                        ? static_cast<double>(result.matches) / static_cast<double>(result.total)
                        : 0.0;
  return result;
}

std::vector<RankingRecord> ingest_rank_csv(const std::string& csv_text) {
  std::vector<RankingRecord> records;
  std::map<std::string, std::size_t> index_by_id;
  for_each_csv_row(csv_text, "scenario_id,model_label,rank",
                   [&](int line_number, const std::vector<std::string>& fields) {
                     const std::string& scenario_id = fields[0];
                     const std::string& model = fields[1];
                     if (scenario_id.empty() || model.empty()) {
                       throw SchemaError("line " + std::to_string(line_number) +
                                         ": empty scenario_id or model_label");
                     }
                     if (is_none(fields[2])) return;  // model produced no output here
                     const double rank =
                         parse_number(fields[2], "line " + std::to_string(line_number));
                     auto it = index_by_id.find(scenario_id);
                     if (it == index_by_id.end()) {
                       index_by_id.emplace(scenario_id, records.size());
                       records.push_back({scenario_id, {}});
                       it = index_by_id.find(scenario_id);
                     }
                     auto& ranks = records[it->second].ranks;
                     if (ranks.contains(model)) {
                       throw SchemaError("line " + std::to_string(line_number) +
                                         ": duplicate entry for scenario \"" + scenario_id +
                                         "\", model \"" + model + "\"");
                     }
                     ranks[model] = rank;
                   });
  for (const auto& record : records) {
    if (record.ranks.size() < 2) {
      throw SchemaError("scenario \"" + record.scenario_id + "\": fewer than 2 ranked models");
    }
    check_rank_sum(record);
  }
  return records;
}

std::vector<ScenarioScores> ingest_score_csv(const std::string& csv_text) {
  std::vector<ScenarioScores> scores;
  std::map<std::string, std::size_t> index_by_id;
  for_each_csv_row(csv_text, "scenario_id,model_label,total",
                   [&](int line_number, const std::vector<std::string>& fields) {
                     const std::string& scenario_id = fields[0];
                     const std::string& model = fields[1];
                     if (scenario_id.empty() || model.empty()) {
                       throw SchemaError("line " + std::to_string(line_number) +
                                         ": empty scenario_id or model_label");
                     }
                     if (is_none(fields[2])) return;
                     const double total =
                         parse_number(fields[2], "line " + std::to_string(line_number));
                     auto it = index_by_id.find(scenario_id);
                     if (it == index_by_id.end()) {
                       index_by_id.emplace(scenario_id, scores.size());
                       scores.push_back({scenario_id, {}});
                       it = index_by_id.find(scenario_id);
                     }
                     auto& totals = scores[it->second].totals;
                     if (totals.contains(model)) {
                       throw SchemaError("line " + std::to_string(line_number) +
                                         ": duplicate entry for scenario \"" + scenario_id +
                                         "\", model \"" + model + "\"");
                     }
                     totals[model] = total;
                   });
  return scores;
}

static void render_model_rows(std::ostringstream& out,
                              const std::map<std::string, double>& per_model,
                              const std::map<std::string, int>& per_model_n) {
  std::vector<std::pair<std::string, double>> rows(per_model.begin(), per_model.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;  // best (lowest) first
    return a.first < b.first;
  });
  std::size_t width = 5;
  for (const auto& [label, value] : rows) {
    (void)value;
    width = std::max(width, label.size());
  }
  out << std::left << std::setw(static_cast<int>(width + 2)) << "model"
      << std::right << std::setw(6) << "RBS" << std::setw(5) << "N" << "\n";
  for (const auto& [label, value] : rows) {
    out << std::left << std::setw(static_cast<int>(width + 2)) << label << std::right
        << std::setw(6) << std::fixed << std::setprecision(2) << value << std::setw(5)
        << per_model_n.at(label) << "\n";
  }
}

std::string render_report_table(const RbsReport& report) {
  std::ostringstream out;
  out << "scenarios: " << report.scenario_count << "\n";
  render_model_rows(out, report.per_model, report.per_model_n);
  for (const auto& [level, per_model] : report.by_level) {
    out << "\nlevel " << level << "\n";
    render_model_rows(out, per_model, report.by_level_n.at(level));
  }
  return out.str();
}

std::string report_to_json(const RbsReport& report) {
  json doc;
  doc["scenario_count"] = report.scenario_count;
  json models = json::object();
  for (const auto& [label, value] : report.per_model) {
    models[label] = {{"rbs", value}, {"n", report.per_model_n.at(label)}};
  }
  doc["models"] = std::move(models);
  if (!report.by_level.empty()) {
    json by_level = json::object();
    for (const auto& [level, per_model] : report.by_level) {
      json level_models = json::object();
      for (const auto& [label, value] : per_model) {
        level_models[label] = {{"rbs", value}, {"n", report.by_level_n.at(level).at(label)}};
      }
      by_level[std::to_string(level)] = std::move(level_models);
    }
    doc["by_level"] = std::move(by_level);
  }
  return doc.dump(2) + "\n";
}

}  // namespace sap
