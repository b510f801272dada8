#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sap/action_catalog.hpp"
#include "sap/fsm.hpp"
#include "sap/plan_text.hpp"
#include "sap/scenario.hpp"
#include "sap/scoring.hpp"

namespace sap {

enum class AgentRole { generator, evaluator };

std::string role_name(AgentRole role);

/// An assembled prompt: named sections in a fixed order plus the rendered
/// text sent to the model. Assembly is deterministic.
struct PromptBundle {
  AgentRole role = AgentRole::generator;
  std::vector<std::pair<std::string, std::string>> sections;
  std::string rendered;
};

std::string render_sections(const std::vector<std::pair<std::string, std::string>>& sections);

/// Default instruction templates. The planning prompt walks the model
/// through perceiving the scene, inferring what each person, animal and
/// object needs, and projecting how the situation may evolve; the criteria
/// text enumerates the seven scoring dimensions and the reply contract.
/// Both can be swapped for file-loaded alternatives.
const std::string& default_sap_prompt();
const std::string& default_scoring_criteria();

struct PromptTemplates {
  std::string sap_prompt;
  std::string scoring_criteria;
};

PromptTemplates default_templates();

/// Generator prompt sections, in order: scene_description, sap_prompt,
/// action_list (every catalog identifier exactly once), exemplar, and a
/// trailing feedback section when refining. The exemplar must not solve the
/// target scenario: an exemplar whose plan_id equals the scenario_id is
/// rejected.
PromptBundle build_generator_prompt(const Scenario& scenario,
                                    const ActionCatalog& catalog,
                                    const PlanDocument& exemplar,
                                    const std::optional<std::string>& feedback = std::nullopt,
                                    const std::string& sap_prompt_text = default_sap_prompt());

/// Evaluator prompt sections, in order: candidate_plan, benchmark_plan,
/// scoring_criteria. Self-comparison (candidate == benchmark) is allowed.
PromptBundle build_evaluator_prompt(const FsmPlan& candidate,
                                    const FsmPlan& benchmark,
                                    const std::string& criteria_text);

struct BackendSettings {
  double temperature = 0.0;
  int max_tokens = 2048;
  std::chrono::milliseconds timeout{60'000};
  int retry_budget = 2;  // re-asks after a malformed reply
};

/// A model endpoint. Implementations must be callable from several scenario
/// workers at once.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual std::string label() const = 0;
  virtual bool deterministic() const = 0;
  virtual const BackendSettings& settings() const = 0;
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Canned replies for tests: hands back the queued responses in order and
/// records every prompt it received. With `cycle`, the reply list repeats.
class ScriptedBackend : public AgentBackend {
 public:
  ScriptedBackend(std::string label, std::vector<std::string> replies,
                  bool cycle = false, BackendSettings settings = {});

  std::string label() const override { return label_; }
  bool deterministic() const override { return true; }
  const BackendSettings& settings() const override { return settings_; }
  std::string complete(const std::string& prompt) override;

  std::vector<std::string> call_log() const;
  int calls() const;

 private:
  std::string label_;
  std::vector<std::string> replies_;
  bool cycle_;
  BackendSettings settings_;
  mutable std::mutex mutex_;
  std::size_t next_ = 0;
  std::vector<std::string> call_log_;
};

/// One transcript line: a single prompt/response exchange.
struct TranscriptRecord {
  int round = 0;
  std::string role;
  std::string prompt_hash;
  std::string response;
  std::string timestamp;  // empty for deterministic backends
  std::string backend_label;

  bool operator==(const TranscriptRecord&) const = default;
};

std::string transcript_line(const TranscriptRecord& record);
std::vector<TranscriptRecord> parse_transcript(const std::string& jsonl_text);

/// FNV-1a 64-bit hash of the prompt text, hex encoded. Stable across runs
/// and platforms; used to match replayed exchanges to their prompts.
std::string prompt_hash(const std::string& prompt);

/// Loads transcript records from a .jsonl file, or from every .jsonl under a
/// directory (sorted by path).
std::vector<TranscriptRecord> load_transcript_file(const std::string& path);
std::vector<TranscriptRecord> load_transcript_dir(const std::string& dir);

/// Replays recorded responses: each incoming prompt is hashed and answered
/// with the next recorded response for that hash. Bit-deterministic.
class ReplayBackend : public AgentBackend {
 public:
  ReplayBackend(std::string label, AgentRole role,
                const std::vector<TranscriptRecord>& records,
                BackendSettings settings = {});

  std::string label() const override { return label_; }
  bool deterministic() const override { return true; }
  const BackendSettings& settings() const override { return settings_; }
  std::string complete(const std::string& prompt) override;

 private:
  std::string label_;
  BackendSettings settings_;
  mutable std::mutex mutex_;
  std::map<std::string, std::deque<std::string>> responses_by_hash_;
};

/// JSON-over-HTTP chat-completion backend. Posts
/// {model, messages, temperature, max_tokens} to the configured URL and
/// reads the first choice's message content. The bearer token is taken from
/// the environment variable named in `auth_env` when set. At most
/// `max_in_flight` requests run concurrently.
struct LiveConfig {
  std::string base_url;  // full endpoint URL, e.g. http://host:8000/v1/chat/completions
  std::string model;
  std::string label;
  std::string auth_env = "SAP_API_TOKEN";
  int max_in_flight = 4;
  BackendSettings settings;
};

class LiveBackend : public AgentBackend {
 public:
  explicit LiveBackend(LiveConfig config);

  std::string label() const override { return config_.label; }
  bool deterministic() const override { return false; }
  const BackendSettings& settings() const override { return config_.settings; }
  std::string complete(const std::string& prompt) override;

 private:
  LiveConfig config_;
  std::mutex mutex_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
};

struct Exchange {
  std::string prompt;
  std::string response;
};

struct GenerationOutcome {
  FsmPlan plan;
  std::string raw_response;          // the reply the plan was extracted from
  std::vector<Exchange> exchanges;   // every call made, retries included
  std::vector<std::string> warnings;
};

/// Asks the backend for a plan and extracts it from the reply. A reply
/// without a usable plan (or with a plan failing referential integrity) is
/// re-asked with a format reminder appended, at most retry_budget times.
GenerationOutcome generate_plan(AgentBackend& backend, const PromptBundle& prompt);

struct EvaluationOutcome {
  Evaluation evaluation;
  std::vector<Exchange> exchanges;
  std::vector<std::string> warnings;
};

/// Asks the backend to score a plan; the reply is parsed with
/// parse_evaluator_reply (overall recomputed). Same retry policy as
/// generate_plan.
EvaluationOutcome evaluate_plan(AgentBackend& backend, const PromptBundle& prompt);

}  // namespace sap
