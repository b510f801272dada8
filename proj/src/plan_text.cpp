#include "sap/plan_text.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "plan_json.hpp"
#include "sap/errors.hpp"

namespace sap {
namespace {

using nlohmann::json;

int line_of_offset(const std::string& text, std::size_t byte_offset) {
  int line = 1;
  const std::size_t end = std::min(byte_offset, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

void reject_unknown_keys(const json& object, std::initializer_list<const char*> known,
                         const std::string& context) {
  for (const auto& item : object.items()) {
    bool found = false;
    for (const char* key : known) {
      if (item.key() == key) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw SchemaError(context + ": unknown key \"" + item.key() + "\"");
    }
  }
}

const json& require_key(const json& object, const char* key, const std::string& context) {
  if (!object.contains(key)) {
    throw SchemaError(context + ": missing required key \"" + key + "\"");
  }
  return object.at(key);
}

std::string require_string(const json& object, const char* key, const std::string& context) {
  const json& value = require_key(object, key, context);
  if (!value.is_string()) {
    throw SchemaError(context + ": \"" + std::string(key) + "\" must be a string");
  }
  return value.get<std::string>();
}

std::vector<std::string> optional_string_array(const json& object, const char* key,
                                               const std::string& context) {
  if (!object.contains(key)) return {};
  const json& value = object.at(key);
  if (!value.is_array()) {
    throw SchemaError(context + ": \"" + std::string(key) + "\" must be an array");
  }
  std::vector<std::string> out;
  for (const auto& item : value) {
    if (!item.is_string()) {
      throw SchemaError(context + ": \"" + std::string(key) + "\" entries must be strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::string escape_dot(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

namespace detail {

json plan_to_json(const FsmPlan& plan) {
  json doc;
  doc["format_version"] = kPlanFormatVersion;
  if (!plan.plan_id.empty()) {
    doc["plan_id"] = plan.plan_id;
  }
  doc["initial_state"] = plan.initial_state;
  json states = json::array();
  for (const auto& state : plan.states) {
    states.push_back({{"name", state.name},
                      {"description", state.description},
                      {"is_terminal", state.is_terminal}});
  }
  doc["states"] = std::move(states);
  json transitions = json::array();
  for (const auto& t : plan.transitions) {
    json actions = json::array();
    for (const auto& invocation : t.actions) {
      actions.push_back({{"helper", invocation.helper_name},
                         {"catalog_actions", invocation.catalog_actions},
                         {"targets", invocation.target_objects}});
    }
    transitions.push_back({{"from", t.from},
                           {"to", t.to},
                           {"trigger", t.trigger},
                           {"actions", std::move(actions)}});
  }
  doc["transitions"] = std::move(transitions);
  return doc;
}

FsmPlan plan_from_json(const json& doc, const std::string& context) {
  if (!doc.is_object()) {
    throw SchemaError(context + ": plan document must be a JSON object");
  }
  reject_unknown_keys(doc, {"format_version", "plan_id", "initial_state", "states", "transitions"},
                      context);

  const std::string version = require_string(doc, "format_version", context);
  if (version != kPlanFormatVersion) {
    throw SchemaError(context + ": unsupported format_version \"" + version + "\" (expected \"" +
                      kPlanFormatVersion + "\")");
  }

  FsmPlan plan;
  if (doc.contains("plan_id")) {
    if (!doc["plan_id"].is_string()) {
      throw SchemaError(context + ": \"plan_id\" must be a string");
    }
    plan.plan_id = doc["plan_id"].get<std::string>();
  }
  plan.initial_state = require_string(doc, "initial_state", context);

  const json& states = require_key(doc, "states", context);
  if (!states.is_array()) {
    throw SchemaError(context + ": \"states\" must be an array");
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    const std::string state_context = context + ": state " + std::to_string(i);
    const json& state_json = states[i];
    if (!state_json.is_object()) {
      throw SchemaError(state_context + ": must be an object");
    }
    reject_unknown_keys(state_json, {"name", "description", "is_terminal"}, state_context);
    StateDef state;
    state.name = require_string(state_json, "name", state_context);
    if (state_json.contains("description")) {
      if (!state_json["description"].is_string()) {
        throw SchemaError(state_context + ": \"description\" must be a string");
      }
      state.description = state_json["description"].get<std::string>();
    }
    if (state_json.contains("is_terminal")) {
      if (!state_json["is_terminal"].is_boolean()) {
        throw SchemaError(state_context + ": \"is_terminal\" must be a boolean");
      }
      state.is_terminal = state_json["is_terminal"].get<bool>();
    }
    plan.states.push_back(std::move(state));
  }

  const json& transitions = require_key(doc, "transitions", context);
  if (!transitions.is_array()) {
    throw SchemaError(context + ": \"transitions\" must be an array");
  }
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const std::string t_context = context + ": transition " + std::to_string(i);
    const json& t_json = transitions[i];
    if (!t_json.is_object()) {
      throw SchemaError(t_context + ": must be an object");
    }
    reject_unknown_keys(t_json, {"from", "to", "trigger", "actions"}, t_context);
    TransitionDef transition;
    transition.from = require_string(t_json, "from", t_context);
    transition.to = require_string(t_json, "to", t_context);
    transition.trigger = require_string(t_json, "trigger", t_context);
    if (t_json.contains("actions")) {
      const json& actions = t_json["actions"];
      if (!actions.is_array()) {
        throw SchemaError(t_context + ": \"actions\" must be an array");
      }
      for (std::size_t a = 0; a < actions.size(); ++a) {
        const std::string a_context = t_context + ": action " + std::to_string(a);
        const json& a_json = actions[a];
        if (!a_json.is_object()) {
          throw SchemaError(a_context + ": must be an object");
        }
        reject_unknown_keys(a_json, {"helper", "catalog_actions", "targets"}, a_context);
        ActionInvocation invocation;
        invocation.helper_name = require_string(a_json, "helper", a_context);
        invocation.catalog_actions = optional_string_array(a_json, "catalog_actions", a_context);
        invocation.target_objects = optional_string_array(a_json, "targets", a_context);
        transition.actions.push_back(std::move(invocation));
      }
    }
    plan.transitions.push_back(std::move(transition));
  }
  return plan;
}

}  // namespace detail

FsmPlan parse_plan(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    const int line = line_of_offset(text, ex.byte > 0 ? ex.byte - 1 : 0);
    throw ParseError("syntax error at line " + std::to_string(line) + ": " + ex.what(), line);
  }
  return detail::plan_from_json(doc, "plan document");
}

std::string serialize_plan(const FsmPlan& plan) {
  const auto errors = referential_errors(plan);
  if (!errors.empty()) {
    throw ValidationError("cannot serialize invalid plan: [" + errors.front().location + "] " +
                          errors.front().message);
  }
  return detail::plan_to_json(plan).dump(2) + "\n";
}

std::vector<FencedBlock> find_fenced_blocks(const std::string& text) {
  std::vector<FencedBlock> blocks;
  std::istringstream stream(text);
  std::string line;
  int line_number = 0;
  bool in_block = false;
  char fence_char = '`';
  std::size_t fence_length = 0;
  FencedBlock current;
  std::string body;

  auto fence_run = [](const std::string& l, char c) -> std::size_t {
    std::size_t i = 0;
    while (i < l.size() && l[i] == c) ++i;
    return i;
  };
  auto rest_is_blank = [](const std::string& l, std::size_t from) {
    return std::all_of(l.begin() + static_cast<std::ptrdiff_t>(from), l.end(),
                       [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
  };

  while (std::getline(stream, line)) {
    ++line_number;
    if (!in_block) {
      for (char candidate : {'`', '~'}) {
        const std::size_t run = fence_run(line, candidate);
        if (run >= 3) {
          in_block = true;
          fence_char = candidate;
          fence_length = run;
          current = FencedBlock{.body = "", .first_line = line_number + 1};
          body.clear();
          break;
        }
      }
    } else {
      const std::size_t run = fence_run(line, fence_char);
      if (run >= fence_length && rest_is_blank(line, run)) {
        current.body = body;
        blocks.push_back(current);
        in_block = false;
      } else {
        body += line;
        body += '\n';
      }
    }
  }
  // An unterminated fence is not a block.
  return blocks;
}

ExtractionResult extract_plan_from_response(const std::string& response) {
  const auto blocks = find_fenced_blocks(response);
  if (blocks.empty()) {
    throw NoPlanFoundError("no fenced code block found in response");
  }
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    try {
      ExtractionResult result;
      result.plan = parse_plan(blocks[i].body);
      result.block_index = static_cast<int>(i);
      result.warnings = warnings;
      return result;
    } catch (const Error& ex) {
      warnings.push_back("block " + std::to_string(i) + " (line " +
                         std::to_string(blocks[i].first_line) + "): " + ex.what());
    }
  }
  std::string message = "no fenced block parses as a plan document";
  for (const auto& warning : warnings) {
    message += "; " + warning;
  }
  throw ExtractionError(message);
}

std::string to_dot(const FsmPlan& plan) {
  const auto errors = referential_errors(plan);
  if (!errors.empty()) {
    throw ValidationError("cannot render invalid plan: [" + errors.front().location + "] " +
                          errors.front().message);
  }
  std::ostringstream out;
  out << "digraph fsm {\n";
  out << "  rankdir=LR;\n";
  for (const auto& state : plan.states) {
    out << "  \"" << escape_dot(state.name) << "\" [label=\"" << escape_dot(state.name) << "\"";
    if (state.name == plan.initial_state) {
      out << ", style=bold";
    }
    if (state.is_terminal) {
      out << ", peripheries=2";
    }
    out << "];\n";
  }
  for (const auto& t : plan.transitions) {
    std::string label = t.trigger;
    if (!t.actions.empty()) {
      label += " / ";
      for (std::size_t i = 0; i < t.actions.size(); ++i) {
        if (i > 0) label += "; ";
        label += t.actions[i].helper_name + "(";
        for (std::size_t a = 0; a < t.actions[i].catalog_actions.size(); ++a) {
          if (a > 0) label += ", ";
          label += t.actions[i].catalog_actions[a];
        }
        label += ")";
      }
    }
    out << "  \"" << escape_dot(t.from) << "\" -> \"" << escape_dot(t.to) << "\" [label=\""
        << escape_dot(label) << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace sap
