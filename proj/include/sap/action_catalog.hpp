#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sap {

struct CatalogAction {
  std::string id;
  std::string description;
  std::string category;
};

struct CategoryDef {
  std::string name;
  int declared_count = 0;
};

/// The constrained vocabulary of robot behaviours plans may draw from,
/// grouped into six fixed categories. Immutable after load.
class ActionCatalog {
 public:
  static const std::vector<std::string>& known_category_names();

  const std::vector<CategoryDef>& categories() const { return categories_; }
  const std::vector<CatalogAction>& actions() const { return actions_; }

  bool contains(const std::string& id) const;
  const CatalogAction* find(const std::string& id) const;
  int total_actions() const { return static_cast<int>(actions_.size()); }
  int category_count(const std::string& category_name) const;

  /// Exact identifier match first, then a case- and separator-insensitive
  /// match ("Drag Object" resolves to drag_object). A near miss stays a
  /// miss: no edit-distance guessing.
  std::optional<std::string> resolve(const std::string& name) const;

  friend ActionCatalog load_catalog(const std::string& manifest_text);

 private:
  std::vector<CategoryDef> categories_;
  std::vector<CatalogAction> actions_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::string, std::size_t> by_normalized_;
};

/// Parses a catalog manifest (JSON, see README for the schema). Duplicate
/// identifiers, declared-vs-listed count mismatches and unknown category
/// names are rejected.
ActionCatalog load_catalog(const std::string& manifest_text);
ActionCatalog load_catalog_file(const std::string& path);

std::optional<std::string> resolve_action(const ActionCatalog& catalog, const std::string& name);

}  // namespace sap
