#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sap/fsm.hpp"

namespace sap {

inline constexpr const char* kPlanFormatVersion = "sap-plan/1";

/// A plan together with the document metadata it travelled in.
struct PlanDocument {
  std::string format_version = kPlanFormatVersion;
  FsmPlan plan;
  std::optional<std::string> raw_source;  // original response, when known
};

/// Parses a canonical plan document (UTF-8 JSON). Syntax errors raise
/// ParseError with a line number; structural problems raise SchemaError.
/// Referential integrity is not checked here; use validate_plan.
FsmPlan parse_plan(const std::string& text);

/// Inverse of parse_plan. Byte-deterministic: identical plans serialize to
/// identical text. Rejects plans that fail referential integrity.
std::string serialize_plan(const FsmPlan& plan);

struct FencedBlock {
  std::string body;
  int first_line = 1;  // line of the first body line within the source text
};

/// Scans for fenced code blocks (backtick or tilde fences, any info string).
std::vector<FencedBlock> find_fenced_blocks(const std::string& text);

struct ExtractionResult {
  FsmPlan plan;
  int block_index = 0;                // which fenced block parsed (0-based)
  std::vector<std::string> warnings;  // parse failures of earlier blocks
};

/// Pulls the first fenced block that parses as a canonical plan document out
/// of a free-text model response. A response without any fenced block raises
/// NoPlanFoundError; blocks that all fail to parse raise ExtractionError
/// carrying the per-block failures.
ExtractionResult extract_plan_from_response(const std::string& response);

/// DOT digraph text: one node statement per state (initial bold, terminal
/// double-bordered), one edge statement per transition labeled
/// "trigger / helper(actions)". Deterministic ordering.
std::string to_dot(const FsmPlan& plan);

}  // namespace sap
