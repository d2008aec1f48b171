#include "diffk/workspace.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace diffk {

namespace detail {
extern const char* const kBuiltinWorkspace;
}

namespace {

std::string pointer_token(const std::string& id) {
  std::string out;
  for (char c : id) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

std::string where(const char* section, const std::string& id) { return std::string("/") + section + "/" + pointer_token(id); }

const nlohmann::json& section(const nlohmann::json& j, const char* name) {
  static const nlohmann::json empty = nlohmann::json::object();
  if (!j.contains(name)) return empty;
  const auto& s = j.at(name);
  if (!s.is_object()) throw WorkspaceError(std::string("/") + name, "expected an object keyed by id");
  return s;
}

const std::string& ref(const nlohmann::json& desc, const char* key, const std::string& loc) {
  if (!desc.contains(key) || !desc.at(key).is_string())
    throw WorkspaceError(loc, std::string("missing string member \"") + key + "\"");
  return desc.at(key).get_ref<const std::string&>();
}

Vector vec(const nlohmann::json& j, const std::string& loc) {
  if (!j.is_array()) throw WorkspaceError(loc, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw WorkspaceError(loc + "/" + std::to_string(i), "expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

template <class Fn>
auto located(const std::string& loc, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const WorkspaceError&) {
    throw;
  } catch (const std::exception& e) {
    throw WorkspaceError(loc, e.what());
  }
}

}  // namespace

Workspace Workspace::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw WorkspaceError("", "workspace must be a JSON object");
  Workspace ws;
  if (!j.contains("version") || !j.at("version").is_string()) throw WorkspaceError("/version", "missing version string");
  ws.version_ = j.at("version").get<std::string>();
  const std::string major = ws.version_.substr(0, ws.version_.find('.'));
  if (major != std::to_string(DIFFK_VERSION_MAJOR))
    throw WorkspaceError("/version", "workspace version " + ws.version_ + " does not match tool major version " +
                                         std::to_string(DIFFK_VERSION_MAJOR));

  for (const auto& [id, desc] : section(j, "bodies").items())
    ws.bodies_.emplace(id, located(where("bodies", id), [&] { return body_from_json(desc); }));

  for (const auto& [id, desc] : section(j, "fields").items()) {
    const std::string loc = where("fields", id);
    const std::string& body_id = ref(desc, "body", loc);
    if (!ws.bodies_.count(body_id)) throw WorkspaceError(loc + "/body", "unknown body '" + body_id + "'");
    ws.fields_.emplace(id, located(loc, [&] { return field_from_json(desc, ws.bodies_.at(body_id)); }));
    ws.field_body_[id] = body_id;
    if (desc.contains("param_box")) {
      const auto& box = desc.at("param_box");
      if (!box.is_object() || !box.contains("lo") || !box.contains("hi"))
        throw WorkspaceError(loc + "/param_box", "expected {\"lo\": [...], \"hi\": [...]}");
      ws.param_boxes_[id] = {vec(box.at("lo"), loc + "/param_box/lo"), vec(box.at("hi"), loc + "/param_box/hi")};
    }
  }

  const auto& elements = section(j, "elements");
  for (const auto& [id, desc] : elements.items()) {
    const std::string loc = where("elements", id);
    if (!desc.is_object()) throw WorkspaceError(loc, "expected an object");
    const std::string& kind = ref(desc, "kind", loc);
    auto need_field = [&] {
      const std::string& f = ref(desc, "field", loc);
      if (!ws.fields_.count(f)) throw WorkspaceError(loc + "/field", "unknown field '" + f + "'");
    };
    auto need_element = [&](const char* key) {
      const std::string& e = ref(desc, key, loc);
      if (!elements.contains(e)) throw WorkspaceError(loc + "/" + key, "unknown element '" + e + "'");
    };
    if (kind == "identity") {
      const std::string& b = ref(desc, "body", loc);
      if (!ws.bodies_.count(b)) throw WorkspaceError(loc + "/body", "unknown body '" + b + "'");
    } else if (kind == "analytic" || kind == "flow") {
      need_field();
    } else if (kind == "compose") {
      need_element("outer");
      need_element("inner");
    } else if (kind == "invert") {
      need_element("of");
    } else {
      throw WorkspaceError(loc + "/kind", "unknown element kind '" + kind + "'");
    }
    ws.elements_.emplace(id, desc);
  }
  // reject cycles among compose/invert references
  std::map<std::string, int> state;
  std::function<void(const std::string&)> visit = [&](const std::string& id) {
    int& s = state[id];
    if (s == 2) return;
    if (s == 1) throw WorkspaceError(where("elements", id), "element refers to itself");
    s = 1;
    const auto& d = ws.elements_.at(id);
    for (const char* key : {"outer", "inner", "of"})
      if (d.contains(key)) visit(d.at(key).get<std::string>());
    state[id] = 2;
  };
  for (const auto& [id, d] : ws.elements_) visit(id);

  for (const auto& [id, desc] : section(j, "jets").items()) {
    located(where("jets", id), [&] { return double_jet_from_json(desc); });
    ws.jets_.emplace(id, desc);
  }
  return ws;
}

Workspace Workspace::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw WorkspaceError(path.string(), "cannot open workspace file");
  std::stringstream buf;
  buf << f.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw WorkspaceError(path.string() + ":byte " + std::to_string(e.byte), "malformed JSON");
  }
  return from_json(j);
}

const char* Workspace::builtin_text() { return detail::kBuiltinWorkspace; }

Workspace Workspace::builtin() { return from_json(nlohmann::json::parse(builtin_text())); }

const ConvexBody& Workspace::body(const std::string& id) const {
  const auto it = bodies_.find(id);
  if (it == bodies_.end()) throw WorkspaceError(where("bodies", id), "no such body");
  return it->second;
}

const BoundaryVanishingField& Workspace::field(const std::string& id) const {
  const auto it = fields_.find(id);
  if (it == fields_.end()) throw WorkspaceError(where("fields", id), "no such field");
  return it->second;
}

ParametricFlowSpec Workspace::flow_spec(const std::string& field_id, const FlowSettings& settings) const {
  const BoundaryVanishingField& f = field(field_id);
  const auto box = param_boxes_.find(field_id);
  if (box == param_boxes_.end()) return ParametricFlowSpec(f, settings);
  return located(where("fields", field_id) + "/param_box",
                 [&] { return ParametricFlowSpec(f, box->second.first, box->second.second, settings); });
}

Diffeo Workspace::element(const std::string& id, const FlowSettings& settings) const {
  const auto it = elements_.find(id);
  if (it == elements_.end()) throw WorkspaceError(where("elements", id), "no such element");
  const nlohmann::json& d = it->second;
  const std::string loc = where("elements", id);
  return located(loc, [&]() -> Diffeo {
    const std::string kind = d.at("kind").get<std::string>();
    if (kind == "identity") return Diffeo::identity(body(d.at("body").get<std::string>()));
    if (kind == "analytic") return Diffeo::analytic(field(d.at("field").get<std::string>()), d.value("t", 0.0));
    if (kind == "flow") {
      const BoundaryVanishingField& f = field(d.at("field").get<std::string>());
      const LieAlgebraCurve curve = LieAlgebraCurve::over(f, f.time().begin, f.time().end);
      return Diffeo::flow_generated(curve, d.value("time", 1.0), settings);
    }
    if (kind == "compose")
      return compose(element(d.at("outer").get<std::string>(), settings),
                     element(d.at("inner").get<std::string>(), settings));
    return invert(element(d.at("of").get<std::string>(), settings));
  });
}

const nlohmann::json& Workspace::jet(const std::string& id) const {
  const auto it = jets_.find(id);
  if (it == jets_.end()) throw WorkspaceError(where("jets", id), "no such jet");
  return it->second;
}

namespace {
template <class M>
std::vector<std::string> keys(const M& m) {
  std::vector<std::string> out;
  for (const auto& kv : m) out.push_back(kv.first);
  return out;
}
}  // namespace

std::vector<std::string> Workspace::body_ids() const { return keys(bodies_); }
std::vector<std::string> Workspace::field_ids() const { return keys(fields_); }
std::vector<std::string> Workspace::element_ids() const { return keys(elements_); }
std::vector<std::string> Workspace::jet_ids() const { return keys(jets_); }

}  // namespace diffk
