#include "sap/agents.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "sap/errors.hpp"

namespace sap {
namespace {

using nlohmann::json;

constexpr const char* kGeneratorReminder =
    "\n\nReminder: your previous reply did not contain a usable plan document. Reply with "
    "exactly one fenced ```json code block holding a plan document in the required format, "
    "and nothing else inside the fences.";

constexpr const char* kEvaluatorReminder =
    "\n\nReminder: your previous reply could not be parsed. Reply with exactly one fenced "
    "```json code block holding a JSON object with the seven dimension scores (numbers from "
    "0 to 10) and a \"feedback\" string.";

const std::string kSapPromptText = R"(You are a household assistance robot planning how to handle the situation described above. Reason through three passes before you commit to a plan:

1. Perceive. List every person, animal and object in the scene, including anything implied rather than stated, and note their current condition and position.
2. Comprehend. For each entity, infer what it needs, what it intends to do next, and how it could be harmed or cause harm. Take the perspective of vulnerable entities such as children, elderly people and pets: what would comfort or frighten them?
3. Project. Anticipate how the situation evolves if you do nothing, if your first intervention fails, and if the entities react unexpectedly. Plan for the likely path and for the dangerous edge cases.

Prefer gentle, indirect interventions before forceful ones, keep people informed of what you are doing, and include an emergency branch for the worst plausible outcome. Then express your plan as a finite state machine: states for distinct phases of the situation, transitions guarded by observable trigger conditions, and helper methods on each transition that decompose only into actions from the provided action list.)";

const std::string kScoringCriteriaText = R"(Score the candidate plan against the benchmark plan on the seven dimensions below. Each score is a number from 0 to 10.

1. state_coverage: how completely the states cover the situations the scene could evolve into.
2. transition_coverage: whether feasible state changes are connected by transitions with clear, observable trigger conditions.
3. cyclomatic_complexity: whether the plan offers enough independent paths to handle alternatives while staying intelligible.
4. safety_mindset: safe failure modes, emergency responses, and priority given to people and animals over property.
5. scalability: modular, parameterizable state definitions that would transfer to related scenarios.
6. assistance_ux: the comfort, dignity and emotional experience of the people and animals being helped.
7. actions_set_alignment: helper methods decompose only into actions from the constrained action list.

Reply with exactly one fenced ```json code block containing a JSON object with those seven keys, each mapped to its score, plus a "feedback" key holding one or two concrete sentences on how the candidate plan should be improved. Do not include any other keys.)";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open file " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void require_valid(const FsmPlan& plan, const std::string& what) {
  const auto errors = referential_errors(plan);
  if (!errors.empty()) {
    throw ValidationError(what + " fails referential integrity: [" + errors.front().location +
                          "] " + errors.front().message);
  }
}

std::string fenced(const std::string& body) {
  std::string out = "```json\n";
  out += body;
  if (out.back() != '\n') out += '\n';
  out += "```\n";
  return out;
}

}  // namespace

std::string role_name(AgentRole role) {
  return role == AgentRole::generator ? "generator" : "evaluator";
}

std::string render_sections(const std::vector<std::pair<std::string, std::string>>& sections) {
  std::string out;
  for (const auto& [name, text] : sections) {
    out += "## " + name + "\n\n" + text + "\n\n";
  }
  return out;
}

const std::string& default_sap_prompt() { return kSapPromptText; }
const std::string& default_scoring_criteria() { return kScoringCriteriaText; }

PromptTemplates default_templates() {
  return {default_sap_prompt(), default_scoring_criteria()};
}

PromptBundle build_generator_prompt(const Scenario& scenario, const ActionCatalog& catalog,
                                    const PlanDocument& exemplar,
                                    const std::optional<std::string>& feedback,
                                    const std::string& sap_prompt_text) {
  require_valid(exemplar.plan, "exemplar plan");
  if (!exemplar.plan.plan_id.empty() && exemplar.plan.plan_id == scenario.scenario_id) {
    throw ValidationError("exemplar plan \"" + exemplar.plan.plan_id +
                          "\" solves the target scenario; pick an exemplar from another scene");
  }

  std::string scene = scenario.description;
  scene += "\n\nKey concepts: ";
  for (std::size_t i = 0; i < scenario.concepts.size(); ++i) {
    if (i > 0) scene += "; ";
    scene += scenario.concepts[i];
  }

  std::string action_list =
      "You may use only the following " + std::to_string(catalog.total_actions()) +
      " actions, grouped by category:\n";
  for (const auto& category : catalog.categories()) {
    action_list += "\n### " + category.name + "\n";
    for (const auto& action : catalog.actions()) {
      if (action.category == category.name) {
        action_list += "- " + action.id + ": " + action.description + "\n";
      }
    }
  }

  std::string exemplar_text =
      "Reply with exactly one fenced ```json code block containing a plan document with the "
      "keys format_version (\"" +
      std::string(kPlanFormatVersion) +
      "\"), initial_state, states and transitions. Every helper method must decompose into "
      "actions from the action list. The following example from an unrelated scene shows the "
      "expected structure; do not copy its content:\n\n" +
      fenced(serialize_plan(exemplar.plan));

  PromptBundle bundle;
  bundle.role = AgentRole::generator;
  bundle.sections = {{"scene_description", std::move(scene)},
                     {"sap_prompt", sap_prompt_text},
                     {"action_list", std::move(action_list)},
                     {"exemplar", std::move(exemplar_text)}};
  if (feedback.has_value()) {
    bundle.sections.emplace_back("feedback",
                                 "Feedback on your previous plan; address it in this revision:\n\n" +
                                     *feedback);
  }
  bundle.rendered = render_sections(bundle.sections);
  return bundle;
}

PromptBundle build_evaluator_prompt(const FsmPlan& candidate, const FsmPlan& benchmark,
                                    const std::string& criteria_text) {
  require_valid(candidate, "candidate plan");
  require_valid(benchmark, "benchmark plan");
  if (criteria_text.empty()) {
    throw ValidationError("missing scoring criteria text");
  }
  PromptBundle bundle;
  bundle.role = AgentRole::evaluator;
  bundle.sections = {
      {"candidate_plan", "The plan under evaluation:\n\n" + fenced(serialize_plan(candidate))},
      {"benchmark_plan",
       "A reference plan for the same scene, for comparison:\n\n" + fenced(serialize_plan(benchmark))},
      {"scoring_criteria", criteria_text}};
  bundle.rendered = render_sections(bundle.sections);
  return bundle;
}

ScriptedBackend::ScriptedBackend(std::string label, std::vector<std::string> replies, bool cycle,
                                 BackendSettings settings)
    : label_(std::move(label)), replies_(std::move(replies)), cycle_(cycle),
      settings_(settings) {}

std::string ScriptedBackend::complete(const std::string& prompt) {
  std::lock_guard lock(mutex_);
  call_log_.push_back(prompt);
  if (next_ >= replies_.size()) {
    if (!cycle_ || replies_.empty()) {
      throw BackendError("scripted backend \"" + label_ + "\" has no reply for call " +
                         std::to_string(call_log_.size()));
    }
    next_ = 0;
  }
  return replies_[next_++];
}

std::vector<std::string> ScriptedBackend::call_log() const {
  std::lock_guard lock(mutex_);
  return call_log_;
}

int ScriptedBackend::calls() const {
  std::lock_guard lock(mutex_);
  return static_cast<int>(call_log_.size());
}

std::string prompt_hash(const std::string& prompt) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : prompt) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

std::string transcript_line(const TranscriptRecord& record) {
  json doc{{"round", record.round},
           {"role", record.role},
           {"prompt_hash", record.prompt_hash},
           {"response", record.response},
           {"timestamp", record.timestamp},
           {"backend_label", record.backend_label}};
  return doc.dump() + "\n";
}

std::vector<TranscriptRecord> parse_transcript(const std::string& jsonl_text) {
  std::vector<TranscriptRecord> records;
  std::istringstream stream(jsonl_text);
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& ex) {
      throw SchemaError("transcript line " + std::to_string(line_number) + ": " + ex.what());
    }
    // The closing LoopResult object shares the file in run directories; skip
    // anything that is not an exchange record.
    if (!doc.is_object() || !doc.contains("prompt_hash")) continue;
    TranscriptRecord record;
    record.round = doc.value("round", 0);
    record.role = doc.value("role", "");
    record.prompt_hash = doc.value("prompt_hash", "");
    record.response = doc.value("response", "");
    record.timestamp = doc.value("timestamp", "");
    record.backend_label = doc.value("backend_label", "");
    records.push_back(std::move(record));
  }
  return records;
}

ReplayBackend::ReplayBackend(std::string label, AgentRole role,
                             const std::vector<TranscriptRecord>& records,
                             BackendSettings settings)
    : label_(std::move(label)), settings_(settings) {
  const std::string wanted = role_name(role);
  for (const auto& record : records) {
    if (record.role == wanted) {
      responses_by_hash_[record.prompt_hash].push_back(record.response);
    }
  }
}

std::vector<TranscriptRecord> load_transcript_file(const std::string& path) {
  return parse_transcript(read_file(path));
}

std::vector<TranscriptRecord> load_transcript_dir(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<TranscriptRecord> records;
  for (const auto& file : files) {
    auto file_records = parse_transcript(read_file(file.string()));
    records.insert(records.end(), file_records.begin(), file_records.end());
  }
  return records;
}

std::string ReplayBackend::complete(const std::string& prompt) {
  const std::string hash = prompt_hash(prompt);
  std::lock_guard lock(mutex_);
  auto it = responses_by_hash_.find(hash);
  if (it == responses_by_hash_.end() || it->second.empty()) {
    throw BackendError("replay backend \"" + label_ + "\" has no recorded response for prompt " +
                       hash);
  }
  std::string response = std::move(it->second.front());
  it->second.pop_front();
  return response;
}

LiveBackend::LiveBackend(LiveConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    throw ValidationError("live backend requires a base_url");
  }
  if (config_.max_in_flight < 1) {
    throw ValidationError("live backend max_in_flight must be at least 1");
  }
}

std::string LiveBackend::complete(const std::string& prompt) {
  {
    std::unique_lock lock(mutex_);
    slot_free_.wait(lock, [this] { return in_flight_ < config_.max_in_flight; });
    ++in_flight_;
  }
  struct SlotGuard {
    LiveBackend* backend;
    ~SlotGuard() {
      std::lock_guard lock(backend->mutex_);
      --backend->in_flight_;
      backend->slot_free_.notify_one();
    }
  } guard{this};

  // Split scheme://host[:port] from the request path.
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw BackendError("live backend base_url must include a scheme: " + config_.base_url);
  }
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  const std::string host = path_start == std::string::npos
                               ? config_.base_url
                               : config_.base_url.substr(0, path_start);
  const std::string path = path_start == std::string::npos
                               ? std::string("/")
                               : config_.base_url.substr(path_start);

  httplib::Client client(host);
  const auto timeout = config_.settings.timeout;
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                                0);
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(), 0);

  httplib::Headers headers;
  if (const char* token = std::getenv(config_.auth_env.c_str()); token != nullptr && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  json body{{"model", config_.model},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
            {"temperature", config_.settings.temperature},
            {"max_tokens", config_.settings.max_tokens}};

  auto result = client.Post(path, headers, body.dump(), "application/json");
  if (!result) {
    throw BackendError("live backend \"" + config_.label + "\": transport failure (" +
                       httplib::to_string(result.error()) + ")");
  }
  if (result->status != 200) {
    throw BackendError("live backend \"" + config_.label + "\": HTTP " +
                       std::to_string(result->status) + ": " + result->body);
  }
  json reply = json::parse(result->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
      reply["choices"].empty() || !reply["choices"][0].contains("message") ||
      !reply["choices"][0]["message"].contains("content") ||
      !reply["choices"][0]["message"]["content"].is_string()) {
    throw BackendError("live backend \"" + config_.label + "\": malformed completion response");
  }
  return reply["choices"][0]["message"]["content"].get<std::string>();
}

GenerationOutcome generate_plan(AgentBackend& backend, const PromptBundle& prompt) {
  if (prompt.role != AgentRole::generator) {
    throw ValidationError("generate_plan requires a generator prompt");
  }
  GenerationOutcome outcome;
  const int attempts = 1 + std::max(0, backend.settings().retry_budget);
  std::string prompt_text = prompt.rendered;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const std::string response = backend.complete(prompt_text);
    outcome.exchanges.push_back({prompt_text, response});
    try {
      ExtractionResult extracted = extract_plan_from_response(response);
      const auto errors = referential_errors(extracted.plan);
      if (!errors.empty()) {
        throw ExtractionError("extracted plan fails referential integrity: [" +
                              errors.front().location + "] " + errors.front().message);
      }
      outcome.plan = std::move(extracted.plan);
      outcome.raw_response = response;
      outcome.warnings.insert(outcome.warnings.end(), extracted.warnings.begin(),
                              extracted.warnings.end());
      return outcome;
    } catch (const ExtractionError& ex) {
      last_error = ex.what();
      outcome.warnings.push_back("attempt " + std::to_string(attempt + 1) + ": " + last_error);
      prompt_text = prompt.rendered + kGeneratorReminder;
    }
  }
  throw ExtractionError("no plan extracted after " + std::to_string(attempts) +
                        " attempts; last error: " + last_error);
}

EvaluationOutcome evaluate_plan(AgentBackend& backend, const PromptBundle& prompt) {
  if (prompt.role != AgentRole::evaluator) {
    throw ValidationError("evaluate_plan requires an evaluator prompt");
  }
  EvaluationOutcome outcome;
  const int attempts = 1 + std::max(0, backend.settings().retry_budget);
  std::string prompt_text = prompt.rendered;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const std::string response = backend.complete(prompt_text);
    outcome.exchanges.push_back({prompt_text, response});
    try {
      outcome.evaluation = parse_evaluator_reply(response, &outcome.warnings);
      outcome.evaluation.evaluator_label = backend.label();
      return outcome;
    } catch (const Error& ex) {
      last_error = ex.what();
      outcome.warnings.push_back("attempt " + std::to_string(attempt + 1) + ": " + last_error);
      prompt_text = prompt.rendered + kEvaluatorReminder;
    }
  }
  throw ExtractionError("no evaluation parsed after " + std::to_string(attempts) +
                        " attempts; last error: " + last_error);
}

}  // namespace sap
