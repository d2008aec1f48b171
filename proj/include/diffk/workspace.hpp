#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffk/diffeo.hpp"
#include "diffk/errors.hpp"
#include "diffk/evolution.hpp"
#include "diffk/jets.hpp"

namespace diffk {

/// A malformed or inconsistent workspace; location() is a JSON pointer.
class WorkspaceError : public DomainError {
 public:
  WorkspaceError(std::string location, const std::string& message)
      : DomainError(location + ": " + message), location_(std::move(location)) {}
  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

/// Named bodies, fields, group elements and jets loaded from one JSON file:
///
///   {"version": "1.0",
///    "bodies":   {id: body descriptor},
///    "fields":   {id: {"body": id, "base": [...], "weight": ..., "time": [a, b],
///                      "params": [...], "param_box": {"lo": [...], "hi": [...]}}},
///    "elements": {id: {"kind": "identity", "body": id}
///                   | {"kind": "analytic", "field": id, "t": 0}
///                   | {"kind": "flow", "field": id, "time": 1}
///                   | {"kind": "compose", "outer": id, "inner": id}
///                   | {"kind": "invert", "of": id}},
///    "jets":     {id: jet JSON}}
///
/// Bodies and fields are parsed on load; elements are validated on load and
/// built on demand (flow settings come from the caller).
class Workspace {
 public:
  static Workspace from_json(const nlohmann::json& j);
  static Workspace load(const std::filesystem::path& path);
  /// The workspace shipped as data/workspace.json.
  static Workspace builtin();
  static const char* builtin_text();

  const std::string& version() const noexcept { return version_; }
  const ConvexBody& body(const std::string& id) const;
  const BoundaryVanishingField& field(const std::string& id) const;
  /// Parameter box from "param_box", or the single point "params".
  ParametricFlowSpec flow_spec(const std::string& field_id, const FlowSettings& settings) const;
  Diffeo element(const std::string& id, const FlowSettings& settings = {}) const;
  const nlohmann::json& jet(const std::string& id) const;

  std::vector<std::string> body_ids() const;
  std::vector<std::string> field_ids() const;
  std::vector<std::string> element_ids() const;
  std::vector<std::string> jet_ids() const;

 private:
  std::string version_;
  std::map<std::string, ConvexBody> bodies_;
  std::map<std::string, BoundaryVanishingField> fields_;
  std::map<std::string, std::string> field_body_;
  std::map<std::string, std::pair<Vector, Vector>> param_boxes_;
  std::map<std::string, nlohmann::json> elements_;
  std::map<std::string, nlohmann::json> jets_;
};

}  // namespace diffk
