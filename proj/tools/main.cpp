#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sap/action_catalog.hpp"
#include "sap/agents.hpp"
#include "sap/errors.hpp"
#include "sap/fsm.hpp"
#include "sap/loop.hpp"
#include "sap/plan_text.hpp"
#include "sap/rbs.hpp"
#include "sap/scenario.hpp"
#include "sap/scoring.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 validation/data errors, 2 backend/transport.
constexpr int kOk = 0;
constexpr int kDataError = 1;
constexpr int kBackendError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw sap::Error("cannot open file " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw sap::Error("cannot write file " + path.string());
  }
  out << content;
}

sap::FsmPlan load_plan(const std::string& path) {
  return sap::parse_plan(read_file(path));
}

struct BackendConfig {
  std::string kind;  // scripted | replay | live
  std::string label;
  std::vector<std::string> replies;  // scripted
  bool cycle = false;                // scripted
  std::string transcript;            // replay: file or directory
  sap::LiveConfig live;
  sap::BackendSettings settings;
};

BackendConfig parse_backend_config(const json& doc, const std::string& role,
                                   const fs::path& base_dir) {
  if (!doc.is_object()) {
    throw sap::SchemaError("manifest: \"" + role + "\" must be an object");
  }
  BackendConfig config;
  config.kind = doc.value("kind", "");
  config.label = doc.value("label", role);
  if (doc.contains("temperature")) config.settings.temperature = doc["temperature"];
  if (doc.contains("max_tokens")) config.settings.max_tokens = doc["max_tokens"];
  if (doc.contains("timeout_ms")) {
    config.settings.timeout = std::chrono::milliseconds(doc["timeout_ms"].get<long>());
  }
  if (doc.contains("retry_budget")) config.settings.retry_budget = doc["retry_budget"];

  if (config.kind == "scripted") {
    if (!doc.contains("replies") || !doc["replies"].is_array()) {
      throw sap::SchemaError("manifest: scripted backend requires a \"replies\" array");
    }
    for (const auto& reply : doc["replies"]) {
      if (reply.is_string()) {
        config.replies.push_back(reply.get<std::string>());
      } else if (reply.is_object() && reply.contains("file")) {
        config.replies.push_back(read_file((base_dir / reply["file"].get<std::string>()).string()));
      } else {
        throw sap::SchemaError("manifest: scripted replies must be strings or {\"file\": path}");
      }
    }
    config.cycle = doc.value("cycle", false);
  } else if (config.kind == "replay") {
    if (!doc.contains("transcript") || !doc["transcript"].is_string()) {
      throw sap::SchemaError("manifest: replay backend requires a \"transcript\" path");
    }
    config.transcript = (base_dir / doc["transcript"].get<std::string>()).string();
    if (!fs::exists(config.transcript)) {
      throw sap::Error("replay transcript not found: " + config.transcript);
    }
  } else if (config.kind == "live") {
    config.live.base_url = doc.value("base_url", "");
    config.live.model = doc.value("model", "");
    config.live.label = config.label;
    config.live.auth_env = doc.value("auth_env", "SAP_API_TOKEN");
    config.live.max_in_flight = doc.value("max_in_flight", 4);
    config.live.settings = config.settings;
    if (config.live.base_url.empty()) {
      throw sap::SchemaError("manifest: live backend requires a \"base_url\"");
    }
  } else {
    throw sap::SchemaError("manifest: unknown backend kind \"" + config.kind + "\"");
  }
  return config;
}

std::unique_ptr<sap::AgentBackend> make_backend(const BackendConfig& config, sap::AgentRole role) {
  if (config.kind == "scripted") {
    return std::make_unique<sap::ScriptedBackend>(config.label, config.replies, config.cycle,
                                                  config.settings);
  }
  if (config.kind == "replay") {
    const auto records = fs::is_directory(config.transcript)
                             ? sap::load_transcript_dir(config.transcript)
                             : sap::load_transcript_file(config.transcript);
    return std::make_unique<sap::ReplayBackend>(config.label, role, records, config.settings);
  }
  return std::make_unique<sap::LiveBackend>(config.live);
}

int cmd_validate(const std::string& plan_path, const std::string& catalog_path) {
  const sap::FsmPlan plan = load_plan(plan_path);
  sap::ValidationReport report;
  if (!catalog_path.empty()) {
    const auto catalog = sap::load_catalog_file(catalog_path);
    report = sap::validate_plan(plan, catalog);
  } else {
    report = sap::validate_plan(plan);
  }
  for (const auto& violation : report.violations) {
    std::cout << (violation.severity == sap::Severity::error ? "error" : "warning") << ": "
              << violation.location << ": " << violation.message << "\n";
  }
  std::cout << report.error_count() << " errors, " << report.warning_count() << " warnings\n";
  return report.ok() ? kOk : kDataError;
}

int cmd_metrics(const std::string& plan_path, const std::string& catalog_path) {
  const sap::FsmPlan plan = load_plan(plan_path);
  sap::StructuralMetrics metrics;
  if (!catalog_path.empty()) {
    const auto catalog = sap::load_catalog_file(catalog_path);
    metrics = sap::reachability_metrics(plan, catalog);
  } else {
    metrics = sap::reachability_metrics(plan);
  }
  json doc{{"state_count", metrics.state_count},
           {"transition_count", metrics.transition_count},
           {"reachable_state_fraction", metrics.reachable_state_fraction},
           {"guarded_transition_fraction", metrics.guarded_transition_fraction},
           {"cyclomatic_complexity", metrics.cyclomatic_complexity},
           {"unaligned_action_count", metrics.unaligned_action_count},
           {"dead_state_names", metrics.dead_state_names}};
  std::cout << doc.dump(2) << "\n";
  return kOk;
}

int cmd_dot(const std::string& plan_path) {
  std::cout << sap::to_dot(load_plan(plan_path));
  return kOk;
}

struct Manifest {
  std::string run_id;
  sap::Corpus corpus;
  sap::ActionCatalog catalog;
  sap::PlanDocument exemplar;
  sap::PromptTemplates templates;
  sap::LoopConfig loop;
  BackendConfig generator;
  BackendConfig evaluator;
  fs::path out_dir;
  int workers = 1;
  std::string raw_text;
};

Manifest load_manifest(const std::string& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw sap::SchemaError(std::string("manifest is not valid JSON: ") + ex.what());
  }
  if (!doc.is_object()) {
    throw sap::SchemaError("manifest must be a JSON object");
  }
  const fs::path base_dir = fs::absolute(path).parent_path();
  auto resolve = [&base_dir](const std::string& p) { return (base_dir / p).string(); };

  Manifest manifest;
  manifest.raw_text = text;
  manifest.run_id = doc.value("run_id", "run");
  if (!doc.contains("corpus") || !doc.contains("catalog") || !doc.contains("exemplar")) {
    throw sap::SchemaError("manifest requires \"corpus\", \"catalog\" and \"exemplar\" paths");
  }
  manifest.corpus = sap::load_corpus_file(resolve(doc["corpus"]));
  manifest.catalog = sap::load_catalog_file(resolve(doc["catalog"]));
  manifest.exemplar.plan = sap::parse_plan(read_file(resolve(doc["exemplar"])));
  manifest.templates = sap::default_templates();
  if (doc.contains("sap_prompt")) {
    manifest.templates.sap_prompt = read_file(resolve(doc["sap_prompt"]));
  }
  if (doc.contains("scoring_criteria")) {
    manifest.templates.scoring_criteria = read_file(resolve(doc["scoring_criteria"]));
  }
  if (doc.contains("loop")) {
    const json& loop = doc["loop"];
    manifest.loop.max_iterations = loop.value("max_iterations", 5);
    const std::string acceptance = loop.value("acceptance", "strict");
    if (acceptance == "strict") {
      manifest.loop.acceptance = sap::AcceptanceRule::strict_exceed;
    } else if (acceptance == "meet") {
      manifest.loop.acceptance = sap::AcceptanceRule::meet_or_exceed;
    } else {
      throw sap::SchemaError("manifest: loop.acceptance must be \"strict\" or \"meet\"");
    }
    manifest.loop.promote_benchmark = loop.value("promote_benchmark", true);
    if (loop.contains("benchmark_overall") && loop["benchmark_overall"].is_number()) {
      manifest.loop.benchmark_overall_override = loop["benchmark_overall"].get<double>();
    }
  }
  if (!doc.contains("generator") || !doc.contains("evaluator")) {
    throw sap::SchemaError("manifest requires \"generator\" and \"evaluator\" backends");
  }
  manifest.generator = parse_backend_config(doc["generator"], "generator", base_dir);
  manifest.evaluator = parse_backend_config(doc["evaluator"], "evaluator", base_dir);
  manifest.out_dir = base_dir / doc.value("out_dir", "runs");
  manifest.workers = doc.value("workers", 1);
  return manifest;
}

int cmd_run(const std::string& manifest_path, int workers_override, int max_iterations_override,
            const std::string& acceptance_override, const std::string& out_override) {
  Manifest manifest = load_manifest(manifest_path);
  if (workers_override > 0) manifest.workers = workers_override;
  if (max_iterations_override > 0) manifest.loop.max_iterations = max_iterations_override;
  if (!acceptance_override.empty()) {
    manifest.loop.acceptance = acceptance_override == "meet"
                                   ? sap::AcceptanceRule::meet_or_exceed
                                   : sap::AcceptanceRule::strict_exceed;
  }
  if (!out_override.empty()) manifest.out_dir = out_override;

  const fs::path run_dir = manifest.out_dir / manifest.run_id;
  fs::create_directories(run_dir);
  write_file(run_dir / "manifest.json", manifest.raw_text);

  auto gen_backend = make_backend(manifest.generator, sap::AgentRole::generator);
  auto eval_backend = make_backend(manifest.evaluator, sap::AgentRole::evaluator);

  sap::BenchmarkRegistry registry;
  std::atomic<std::size_t> next_index{0};
  std::mutex output_mutex;
  std::vector<std::string> failures;

  auto worker = [&]() {
    while (true) {
      const std::size_t index = next_index.fetch_add(1);
      if (index >= manifest.corpus.scenarios.size()) break;
      const sap::Scenario& scenario = manifest.corpus.scenarios[index];
      try {
        std::vector<sap::TranscriptRecord> transcript;
        const sap::LoopResult result =
            sap::run_sap_loop(scenario, manifest.catalog, manifest.exemplar, *gen_backend,
                              *eval_backend, manifest.loop, manifest.templates, &registry,
                              &transcript);
        const fs::path scenario_dir = run_dir / scenario.scenario_id;
        fs::create_directories(scenario_dir);
        std::string transcript_text;
        for (const auto& record : transcript) {
          transcript_text += sap::transcript_line(record);
        }
        write_file(scenario_dir / "transcript.jsonl", transcript_text);
        write_file(scenario_dir / "result.json", sap::serialize_loop_result(result));
        std::lock_guard lock(output_mutex);
        std::cout << scenario.scenario_id << ": "
                  << (result.converged ? "converged" : "did not converge") << " after "
                  << result.iterations_used << " iteration(s), overall "
                  << result.adopted_evaluation.overall << " vs benchmark "
                  << result.benchmark_overall << "\n";
      } catch (const std::exception& ex) {
        std::lock_guard lock(output_mutex);
        failures.push_back(scenario.scenario_id + ": " + ex.what());
        std::cerr << "error: " << scenario.scenario_id << ": " << ex.what() << "\n";
      }
    }
  };

  const int worker_count =
      std::max(1, std::min<int>(manifest.workers,
                                static_cast<int>(manifest.corpus.scenarios.size())));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(worker_count));
  for (int i = 0; i < worker_count; ++i) threads.emplace_back(worker);
  for (auto& thread : threads) thread.join();

  std::cout << "run " << manifest.run_id << ": " << manifest.corpus.scenarios.size() - failures.size()
            << "/" << manifest.corpus.scenarios.size() << " scenarios completed, artifacts in "
            << run_dir.string() << "\n";
  return failures.empty() ? kOk : kBackendError;
}

std::vector<sap::RankingRecord> load_rank_files(const std::vector<std::string>& paths) {
  std::vector<sap::RankingRecord> records;
  for (const auto& path : paths) {
    const std::string text = read_file(path);
    const std::string first_line = text.substr(0, text.find('\n'));
    std::vector<sap::RankingRecord> file_records;
    if (first_line.find("total") != std::string::npos) {
      for (const auto& scores : sap::ingest_score_csv(text)) {
        file_records.push_back(sap::rank_scenario(scores));
      }
    } else {
      file_records = sap::ingest_rank_csv(text);
    }
    for (auto& record : file_records) {
      for (const auto& existing : records) {
        if (existing.scenario_id == record.scenario_id) {
          throw sap::SchemaError("scenario \"" + record.scenario_id +
                                 "\" appears in more than one input file");
        }
      }
      records.push_back(std::move(record));
    }
  }
  return records;
}

int cmd_rbs(const std::vector<std::string>& paths, bool by_level, const std::string& levels_path,
            bool as_json) {
  const auto records = load_rank_files(paths);
  sap::RbsReport report;
  if (by_level) {
    if (levels_path.empty()) {
      throw sap::SchemaError("--by-level requires --levels <json file mapping scenario_id to level>");
    }
    const json levels_doc = json::parse(read_file(levels_path));
    std::map<std::string, int> levels;
    for (const auto& item : levels_doc.items()) {
      levels[item.key()] = item.value().get<int>();
    }
    report = sap::aggregate_rbs(records, levels);
  } else {
    report = sap::aggregate_rbs(records);
  }
  std::cout << (as_json ? sap::report_to_json(report) : sap::render_report_table(report));
  return kOk;
}

int cmd_agreement(const std::string& candidate_path, const std::string& reference_path) {
  const auto candidate = sap::ingest_rank_csv(read_file(candidate_path));
  const auto reference = sap::ingest_rank_csv(read_file(reference_path));
  const auto result = sap::ranking_agreement(candidate, reference);
  std::ostringstream percent;
  percent.precision(1);
  percent << std::fixed << result.fraction * 100.0;
  std::cout << result.matches << "/" << result.total << " (" << percent.str() << "%)\n";
  std::cout << "fraction: " << result.fraction << "\n";
  return kOk;
}

int cmd_ingest_annotations(const std::string& csv_path, const std::string& out_path) {
  const auto records = sap::ingest_rank_csv(read_file(csv_path));
  json doc = json::array();
  for (const auto& record : records) {
    json ranks = json::object();
    for (const auto& [label, rank] : record.ranks) {
      ranks[label] = rank;
    }
    doc.push_back({{"scenario_id", record.scenario_id}, {"ranks", std::move(ranks)}});
  }
  const std::string text = doc.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_file(out_path, text);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative plan generation, validation and rank-based scoring for hazard scenarios"};
  app.require_subcommand(1);

  std::string plan_path;
  std::string catalog_path;
  auto* validate = app.add_subcommand("validate", "Check a plan document against its invariants");
  validate->add_option("plan", plan_path, "plan document (JSON)")->required();
  validate->add_option("--catalog", catalog_path, "action catalog manifest to resolve helpers against");

  std::string metrics_plan;
  std::string metrics_catalog;
  auto* metrics = app.add_subcommand("metrics", "Structural metrics for a plan document");
  metrics->add_option("plan", metrics_plan, "plan document (JSON)")->required();
  metrics->add_option("--catalog", metrics_catalog, "action catalog manifest");

  std::string dot_plan;
  auto* dot = app.add_subcommand("dot", "Render a plan as a DOT digraph");
  dot->add_option("plan", dot_plan, "plan document (JSON)")->required();

  std::string manifest_path;
  int workers = 0;
  int max_iterations = 0;
  std::string acceptance;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run the generate-evaluate loop over a corpus");
  run->add_option("manifest", manifest_path, "run manifest (JSON)")->required();
  run->add_option("--workers", workers, "concurrent scenario workers");
  run->add_option("--max-iterations", max_iterations, "override loop iteration cap");
  run->add_option("--acceptance", acceptance, "strict|meet")
      ->check(CLI::IsMember({"strict", "meet"}));
  run->add_option("--out", out_dir, "output directory");

  std::vector<std::string> rbs_files;
  bool by_level = false;
  std::string levels_path;
  bool rbs_json = false;
  auto* rbs = app.add_subcommand("rbs", "Aggregate rank or score files into RBS scores");
  rbs->add_option("files", rbs_files, "rank or score CSV files")->required()->expected(-1);
  rbs->add_flag("--by-level", by_level, "break scores down by complexity level");
  rbs->add_option("--levels", levels_path, "JSON map of scenario_id to complexity level");
  rbs->add_flag("--json", rbs_json, "emit JSON instead of a table");

  std::string agreement_candidate;
  std::string agreement_reference;
  auto* agreement = app.add_subcommand("agreement", "Rank-ordering agreement between two rank CSVs");
  agreement->add_option("candidate", agreement_candidate, "candidate rank CSV")->required();
  agreement->add_option("reference", agreement_reference, "reference rank CSV")->required();

  std::string ingest_csv;
  std::string ingest_out;
  auto* ingest = app.add_subcommand("ingest-annotations", "Normalize a rank CSV into ranking records");
  ingest->add_option("csv", ingest_csv, "rank CSV")->required();
  ingest->add_option("--out", ingest_out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(plan_path, catalog_path);
    if (*metrics) return cmd_metrics(metrics_plan, metrics_catalog);
    if (*dot) return cmd_dot(dot_plan);
    if (*run) return cmd_run(manifest_path, workers, max_iterations, acceptance, out_dir);
    if (*rbs) return cmd_rbs(rbs_files, by_level, levels_path, rbs_json);
    if (*agreement) return cmd_agreement(agreement_candidate, agreement_reference);
    if (*ingest) return cmd_ingest_annotations(ingest_csv, ingest_out);
  } catch (const sap::BackendError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kBackendError;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kDataError;
  }
  return kOk;
}
