#include "sap/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "plan_json.hpp"
#include "sap/errors.hpp"

namespace sap {
namespace {

using nlohmann::json;

Scenario parse_record(const json& record, int record_index) {
  const std::string context = "record " + std::to_string(record_index);
  if (!record.is_object()) {
    throw SchemaError(context + ": must be a JSON object");
  }
  for (const auto& item : record.items()) {
    static const std::set<std::string> known = {"scenario_id",      "description", "concepts",
                                                "complexity_level", "benchmark_plan",
                                                "provenance"};
    if (!known.contains(item.key())) {
      throw SchemaError(context + ": unknown key \"" + item.key() + "\"");
    }
  }

  Scenario scenario;
  if (!record.contains("scenario_id") || !record["scenario_id"].is_string()) {
    throw SchemaError(context + ": requires a string \"scenario_id\"");
  }
  scenario.scenario_id = record["scenario_id"];
  if (!record.contains("description") || !record["description"].is_string()) {
    throw SchemaError(context + ": requires a string \"description\"");
  }
  scenario.description = record["description"];
  if (scenario.description.empty()) {
    throw SchemaError(context + ": description must be non-empty");
  }

  if (!record.contains("concepts") || !record["concepts"].is_array()) {
    throw SchemaError(context + ": requires a \"concepts\" array");
  }
  std::set<std::string> concepts;
  for (const auto& concept_json : record["concepts"]) {
    if (!concept_json.is_string()) {
      throw SchemaError(context + ": concepts must be strings");
    }
    const std::string value = concept_json;
    if (!value.empty()) concepts.insert(value);
  }
  if (concepts.empty()) {
    throw SchemaError(context + ": concepts must be non-empty");
  }
  scenario.concepts.assign(concepts.begin(), concepts.end());

  if (!record.contains("complexity_level") || !record["complexity_level"].is_number_integer()) {
    throw SchemaError(context + ": requires an integer \"complexity_level\"");
  }
  scenario.complexity_level = record["complexity_level"];
  if (scenario.complexity_level < 1 || scenario.complexity_level > 4) {
    throw SchemaError(context + ": complexity_level must be between 1 and 4");
  }

  if (record.contains("provenance")) {
    if (!record["provenance"].is_string()) {
      throw SchemaError(context + ": \"provenance\" must be a string");
    }
    scenario.provenance = record["provenance"];
  }

  if (record.contains("benchmark_plan")) {
    FsmPlan plan = detail::plan_from_json(record["benchmark_plan"], context + ": benchmark_plan");
    if (plan.plan_id.empty()) {
      plan.plan_id = scenario.scenario_id;
    }
    const auto report = validate_plan(plan);
    if (!report.ok()) {
      const auto& first = *std::find_if(
          report.violations.begin(), report.violations.end(),
          [](const Violation& v) { return v.severity == Severity::error; });
      throw SchemaError(context + ": benchmark_plan invalid: [" + first.location + "] " +
                        first.message);
    }
    scenario.benchmark_plan = std::move(plan);
  }
  return scenario;
}

}  // namespace

const Scenario* Corpus::find(const std::string& scenario_id) const {
  for (const auto& scenario : scenarios) {
    if (scenario.scenario_id == scenario_id) return &scenario;
  }
  return nullptr;
}

Corpus load_corpus(const std::string& jsonl_text) {
  Corpus corpus;
  std::istringstream stream(jsonl_text);
  std::string line;
  int record_index = 0;
  std::set<std::string> seen_ids;
  while (std::getline(stream, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& ex) {
      throw SchemaError("record " + std::to_string(record_index) + ": malformed JSON: " +
                        ex.what());
    }
    Scenario scenario = parse_record(record, record_index);
    if (!seen_ids.insert(scenario.scenario_id).second) {
      throw SchemaError("record " + std::to_string(record_index) + ": duplicate scenario_id \"" +
                        scenario.scenario_id + "\"");
    }
    corpus.level_histogram[static_cast<std::size_t>(scenario.complexity_level - 1)] += 1;
    corpus.scenarios.push_back(std::move(scenario));
    ++record_index;
  }
  return corpus;
}

Corpus load_corpus_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open corpus file " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_corpus(buffer.str());
}

std::string serialize_corpus(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& scenario : corpus.scenarios) {
    json record;
    record["scenario_id"] = scenario.scenario_id;
    record["description"] = scenario.description;
    record["concepts"] = scenario.concepts;
    record["complexity_level"] = scenario.complexity_level;
    if (!scenario.provenance.empty()) {
      record["provenance"] = scenario.provenance;
    }
    if (scenario.benchmark_plan) {
      record["benchmark_plan"] = detail::plan_to_json(*scenario.benchmark_plan);
    }
    out << record.dump() << "\n";
  }
  return out.str();
}

std::optional<FsmPlan> get_benchmark(const Corpus& corpus, const std::string& scenario_id) {
  const Scenario* scenario = corpus.find(scenario_id);
  if (scenario == nullptr) {
    throw ValidationError("unknown scenario_id \"" + scenario_id + "\"");
  }
  return scenario->benchmark_plan;
}

}  // namespace sap
