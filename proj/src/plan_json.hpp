#pragma once

#include <json.hpp>

#include "sap/fsm.hpp"
#include "sap/scoring.hpp"

namespace sap::detail {

// Shared JSON (de)serialization for plan documents and evaluations, used by
// the plan text format, the corpus loader and run artifacts.

nlohmann::json plan_to_json(const FsmPlan& plan);

// Strict: unknown keys anywhere in the document are rejected. `context`
// prefixes error messages ("record 3: benchmark_plan").
FsmPlan plan_from_json(const nlohmann::json& doc, const std::string& context);

nlohmann::json evaluation_to_json(const Evaluation& evaluation);
Evaluation evaluation_from_json(const nlohmann::json& doc);

}  // namespace sap::detail
