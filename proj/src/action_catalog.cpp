#include "sap/action_catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sap/errors.hpp"

namespace sap {
namespace {

using nlohmann::json;

// Case-insensitive and separator-insensitive: "Drag Object", "drag_object"
// and "DragObject" all collapse to "dragobject".
std::string normalize(const std::string& name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (c == '_' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
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

}  // namespace

const std::vector<std::string>& ActionCatalog::known_category_names() {
  static const std::vector<std::string> names = {
      "Basic Movement and Handling", "Grasping and Manipulation",
      "Cleaning and Organizing",     "Dynamic and Precise Actions",
      "Task-Specific Functions",     "Cognitive and Interactive Tasks",
  };
  return names;
}

bool ActionCatalog::contains(const std::string& id) const {
  return by_id_.contains(id);
}

const CatalogAction* ActionCatalog::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &actions_[it->second];
}

int ActionCatalog::category_count(const std::string& category_name) const {
  int count = 0;
  for (const auto& action : actions_) {
    if (action.category == category_name) ++count;
  }
  return count;
}

std::optional<std::string> ActionCatalog::resolve(const std::string& name) const {
  if (auto it = by_id_.find(name); it != by_id_.end()) {
    return actions_[it->second].id;
  }
  if (auto it = by_normalized_.find(normalize(name)); it != by_normalized_.end()) {
    return actions_[it->second].id;
  }
  return std::nullopt;
}

ActionCatalog load_catalog(const std::string& manifest_text) {
  json root;
  try {
    root = json::parse(manifest_text);
  } catch (const json::parse_error& ex) {
    throw SchemaError(std::string("catalog manifest is not valid JSON: ") + ex.what());
  }
  if (!root.is_object()) {
    throw SchemaError("catalog manifest must be a JSON object");
  }
  reject_unknown_keys(root, {"categories"}, "catalog manifest");
  if (!root.contains("categories") || !root["categories"].is_array()) {
    throw SchemaError("catalog manifest requires a \"categories\" array");
  }

  const auto& known = ActionCatalog::known_category_names();
  ActionCatalog catalog;
  for (const auto& category_json : root["categories"]) {
    if (!category_json.is_object()) {
      throw SchemaError("category entries must be objects");
    }
    reject_unknown_keys(category_json, {"name", "count", "actions"}, "category");
    if (!category_json.contains("name") || !category_json["name"].is_string()) {
      throw SchemaError("category requires a string \"name\"");
    }
    const std::string name = category_json["name"];
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw SchemaError("unknown category name \"" + name + "\"");
    }
    for (const auto& existing : catalog.categories_) {
      if (existing.name == name) {
        throw SchemaError("category \"" + name + "\" listed twice");
      }
    }
    if (!category_json.contains("actions") || !category_json["actions"].is_array()) {
      throw SchemaError("category \"" + name + "\" requires an \"actions\" array");
    }

    int listed = 0;
    for (const auto& action_json : category_json["actions"]) {
      if (!action_json.is_object()) {
        throw SchemaError("category \"" + name + "\": action entries must be objects");
      }
      reject_unknown_keys(action_json, {"id", "description"}, "action");
      if (!action_json.contains("id") || !action_json["id"].is_string()) {
        throw SchemaError("category \"" + name + "\": action requires a string \"id\"");
      }
      CatalogAction action;
      action.id = action_json["id"];
      action.description = action_json.value("description", "");
      action.category = name;
      if (catalog.by_id_.contains(action.id)) {
        throw SchemaError("duplicate action identifier \"" + action.id + "\"");
      }
      const std::string norm = normalize(action.id);
      if (catalog.by_normalized_.contains(norm)) {
        throw SchemaError("duplicate action identifier \"" + action.id +
                          "\" (collides after normalization)");
      }
      catalog.by_id_.emplace(action.id, catalog.actions_.size());
      catalog.by_normalized_.emplace(norm, catalog.actions_.size());
      catalog.actions_.push_back(std::move(action));
      ++listed;
    }

    int declared = listed;
    if (category_json.contains("count")) {
      if (!category_json["count"].is_number_integer()) {
        throw SchemaError("category \"" + name + "\": \"count\" must be an integer");
      }
      declared = category_json["count"];
    }
    if (declared != listed) {
      throw SchemaError("category \"" + name + "\" declares " + std::to_string(declared) +
                        " actions but lists " + std::to_string(listed));
    }
    if (listed == 0) {
      throw SchemaError("category \"" + name + "\" has no actions");
    }
    catalog.categories_.push_back({name, declared});
  }
  return catalog;
}

ActionCatalog load_catalog_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open catalog manifest " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_catalog(buffer.str());
}

std::optional<std::string> resolve_action(const ActionCatalog& catalog, const std::string& name) {
  return catalog.resolve(name);
}

}  // namespace sap
