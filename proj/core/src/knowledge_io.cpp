#include "critique/knowledge_io.hpp"

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "json.hpp"

namespace critique {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Parsing

class Reader {
 public:
  [[noreturn]] static void fail(const std::string& where, const std::string& what) { throw KnowledgeError(where, what); }

  static const json& require(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(where, std::string("missing required field '") + key + "'");
    return *it;
  }

  static void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
  }

  static void expect_array(const json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array");
  }

  static void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    for (const auto& [k, _] : obj.items()) {
      bool known = false;
      for (const char* allowed : keys) known = known || k == allowed;
      if (!known) fail(where + "/" + k, "unknown field '" + k + "'");
    }
  }

  static std::string string_field(const json& obj, const std::string& where, const char* key) {
    const auto& v = require(obj, where, key);
    if (!v.is_string()) fail(where + "/" + key, "expected a string");
    return v.get<std::string>();
  }

  static std::string optional_string(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return {};
    if (!it->is_string()) fail(where + "/" + key, "expected a string");
    return it->get<std::string>();
  }

  static double number_field(const json& obj, const std::string& where, const char* key) {
    const auto& v = require(obj, where, key);
    if (!v.is_number()) fail(where + "/" + key, "expected a number");
    return v.get<double>();
  }

  static Duration seconds_field(const json& obj, const std::string& where, const char* key) {
    const auto& v = require(obj, where, key);
    if (!v.is_number_integer()) fail(where + "/" + key, "expected integer seconds");
    return Duration{v.get<std::int64_t>()};
  }

  static std::optional<Duration> optional_seconds(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) fail(where + "/" + key, "expected integer seconds");
    return Duration{it->get<std::int64_t>()};
  }

};

struct ConceptTable {
  std::map<std::string, Concept, std::less<>> by_id;

  const Concept& resolve(const std::string& id, const std::string& where) const {
    auto it = by_id.find(id);
    if (it == by_id.end()) Reader::fail(where, "dangling reference to undefined concept '" + id + "'");
    return it->second;
  }
};

ConstraintNode parse_node(const json& j, const std::string& where, const ConceptTable& table);

FuzzyComparison parse_comparison(const json& j, const std::string& where, const ConceptTable& table) {
  Reader::expect_object(j, where);
  Reader::allow_keys(j, where, {"param", "operator", "threshold", "deviation", "unit"});
  FuzzyComparison cmp;
  cmp.parameter = Reader::string_field(j, where, "param");
  const Concept& param = table.resolve(cmp.parameter, where + "/param");
  if (param.kind == ConceptKind::Abstract)
    Reader::fail(where + "/param", "comparison parameter '" + cmp.parameter + "' must be a primitive or event concept");

  const auto op_text = Reader::string_field(j, where, "operator");
  const auto op = compare_op_from_string(op_text);
  if (!op) Reader::fail(where + "/operator", "unknown operator '" + op_text + "'");
  cmp.op = *op;

  const auto& threshold = Reader::require(j, where, "threshold");
  if (param.domain == ValueDomain::Categorical) {
    if (!threshold.is_string()) Reader::fail(where + "/threshold", "categorical parameter needs a string threshold");
    cmp.threshold = threshold.get<std::string>();
  } else {
    if (!threshold.is_number()) Reader::fail(where + "/threshold", "numeric parameter needs a numeric threshold");
    cmp.threshold = threshold.get<double>();
  }

  cmp.deviation = j.contains("deviation") ? Reader::number_field(j, where, "deviation") : 0.0;
  cmp.unit = Reader::optional_string(j, where, "unit");
  if (!cmp.unit.empty() && cmp.unit != param.unit)
    Reader::fail(where + "/unit", "unit mismatch: comparison uses '" + cmp.unit + "' but parameter '" + param.id +
                                      "' is measured in '" + param.unit + "'");
  return cmp;
}

ConstraintNode parse_node(const json& j, const std::string& where, const ConceptTable& table) {
  Reader::expect_object(j, where);
  Reader::allow_keys(j, where, {"op", "children", "cmp", "concept"});
  const auto op = Reader::string_field(j, where, "op");

  if (op == "cmp") {
    return ConstraintNode::leaf(parse_comparison(Reader::require(j, where, "cmp"), where + "/cmp", table));
  }
  if (op == "ref") {
    const auto id = Reader::string_field(j, where, "concept");
    const Concept& target = table.resolve(id, where + "/concept");
    if (target.kind != ConceptKind::Abstract)
      Reader::fail(where + "/concept", "reference to '" + id + "' must name an abstract concept");
    return ConstraintNode::reference(id);
  }

  ConstraintNode node;
  if (op == "and") {
    node.kind = ConstraintNode::Kind::And;
  } else if (op == "or") {
    node.kind = ConstraintNode::Kind::Or;
  } else if (op == "not") {
    node.kind = ConstraintNode::Kind::Not;
  } else {
    Reader::fail(where + "/op", "unknown node op '" + op + "'");
  }
  const auto& children = Reader::require(j, where, "children");
  Reader::expect_array(children, where + "/children");
  for (std::size_t i = 0; i < children.size(); ++i)
    node.children.push_back(parse_node(children[i], where + "/children/" + std::to_string(i), table));
  return node;
}

/// Either a node object or a string naming an abstract concept.
ConstraintNode parse_expression(const json& j, const std::string& where, const ConceptTable& table) {
  if (j.is_string()) {
    const auto id = j.get<std::string>();
    const Concept& target = table.resolve(id, where);
    if (target.kind != ConceptKind::Abstract)
      Reader::fail(where, "concept reference '" + id + "' must name an abstract concept");
    return ConstraintNode::reference(id);
  }
  return parse_node(j, where, table);
}

Concept parse_concept_header(const json& j, const std::string& where) {
  Reader::expect_object(j, where);
  Reader::allow_keys(j, where, {"id", "kind", "unit", "domain", "persistence", "definition"});
  Concept c;
  c.id = Reader::string_field(j, where, "id");
  if (c.id.empty()) Reader::fail(where + "/id", "empty concept id");
  const auto kind = Reader::string_field(j, where, "kind");
  if (kind == "primitive") {
    c.kind = ConceptKind::Primitive;
  } else if (kind == "event") {
    c.kind = ConceptKind::Event;
  } else if (kind == "abstract") {
    c.kind = ConceptKind::Abstract;
  } else {
    Reader::fail(where + "/kind", "unknown concept kind '" + kind + "'");
  }
  c.unit = Reader::optional_string(j, where, "unit");
  const auto domain = Reader::optional_string(j, where, "domain");
  if (domain.empty() || domain == "numeric") {
    c.domain = ValueDomain::Numeric;
  } else if (domain == "categorical") {
    c.domain = ValueDomain::Categorical;
  } else {
    Reader::fail(where + "/domain", "unknown value domain '" + domain + "'");
  }
  if (auto it = j.find("persistence"); it != j.end() && !it->is_null()) {
    const auto pw = where + "/persistence";
    Reader::expect_object(*it, pw);
    Reader::allow_keys(*it, pw, {"good_before_s", "good_after_s"});
    c.persistence = PersistenceSpec{Reader::seconds_field(*it, pw, "good_before_s"),
                                    Reader::seconds_field(*it, pw, "good_after_s")};
  }
  return c;
}

PlanStepSpec parse_step(const json& j, const std::string& where, const ConceptTable& table) {
  Reader::expect_object(j, where);
  Reader::allow_keys(j, where,
                     {"id", "action_concept", "code", "step_kind", "earliest_offset_s", "latest_offset_s", "period_s",
                      "timing_deviation_s", "max_dose", "min_repeat_gap_s"});
  PlanStepSpec s;
  s.id = Reader::string_field(j, where, "id");
  s.action_concept = Reader::string_field(j, where, "action_concept");
  const Concept& action = table.resolve(s.action_concept, where + "/action_concept");
  if (action.kind == ConceptKind::Abstract)
    Reader::fail(where + "/action_concept", "step action '" + s.action_concept + "' must be an event or primitive concept");
  s.code = Reader::optional_string(j, where, "code");
  const auto kind = Reader::string_field(j, where, "step_kind");
  const auto parsed = step_kind_from_string(kind);
  if (!parsed) Reader::fail(where + "/step_kind", "unknown step kind '" + kind + "'");
  s.kind = *parsed;
  s.earliest_offset = Reader::seconds_field(j, where, "earliest_offset_s");
  s.latest_offset = Reader::seconds_field(j, where, "latest_offset_s");
  s.period = Reader::optional_seconds(j, where, "period_s");
  s.timing_deviation = Reader::optional_seconds(j, where, "timing_deviation_s").value_or(Duration{0});
  if (auto it = j.find("max_dose"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) Reader::fail(where + "/max_dose", "expected a number");
    s.max_dose = it->get<double>();
  }
  s.min_repeat_gap = Reader::optional_seconds(j, where, "min_repeat_gap_s").value_or(Duration{0});
  return s;
}

Intention parse_intention(const json& j, const std::string& where, const ConceptTable& table) {
  Reader::expect_object(j, where);
  Reader::allow_keys(j, where, {"kind", "mode", "target", "monitoring_delay_s", "max_gap_s"});
  Intention in;
  const auto kind = Reader::string_field(j, where, "kind");
  if (kind == "process") {
    in.kind = IntentionKind::Process;
  } else if (kind == "outcome") {
    in.kind = IntentionKind::Outcome;
  } else {
    Reader::fail(where + "/kind", "unknown intention kind '" + kind + "'");
  }
  const auto mode = Reader::string_field(j, where, "mode");
  if (mode == "achieve") {
    in.mode = IntentionMode::Achieve;
  } else if (mode == "maintain") {
    in.mode = IntentionMode::Maintain;
  } else if (mode == "avoid") {
    in.mode = IntentionMode::Avoid;
  } else {
    Reader::fail(where + "/mode", "unknown intention mode '" + mode + "'");
  }
  in.target = parse_expression(Reader::require(j, where, "target"), where + "/target", table);
  in.monitoring_delay = Reader::optional_seconds(j, where, "monitoring_delay_s").value_or(Duration{0});
  in.max_gap = Reader::seconds_field(j, where, "max_gap_s");
  return in;
}

GuidelinePlan parse_plan(const json& j, const std::string& where, const ConceptTable& table) {
  Reader::expect_object(j, where);
  Reader::allow_keys(j, where, {"id", "name", "max_start_delay_s", "conditions", "intentions", "body", "sub_plans"});
  GuidelinePlan plan;
  plan.id = Reader::string_field(j, where, "id");
  if (plan.id.empty() || plan.id.find('/') != std::string::npos)
    Reader::fail(where + "/id", "plan id must be non-empty and must not contain '/'");
  plan.name = Reader::optional_string(j, where, "name");
  plan.max_start_delay = Reader::optional_seconds(j, where, "max_start_delay_s").value_or(kDefaultMaxStartDelay);

  auto for_each = [&](const char* key, auto&& fn) {
    auto it = j.find(key);
    if (it == j.end()) return;
    const auto w = where + "/" + key;
    Reader::expect_array(*it, w);
    for (std::size_t i = 0; i < it->size(); ++i) fn((*it)[i], w + "/" + std::to_string(i));
  };

  for_each("conditions", [&](const json& c, const std::string& w) {
    Reader::expect_object(c, w);
    Reader::allow_keys(c, w, {"role", "expr"});
    const auto role_text = Reader::string_field(c, w, "role");
    const auto role = condition_role_from_string(role_text);
    if (!role) Reader::fail(w + "/role", "unknown condition role '" + role_text + "'");
    plan.conditions.push_back(Condition{*role, parse_expression(Reader::require(c, w, "expr"), w + "/expr", table)});
  });
  for_each("intentions",
           [&](const json& in, const std::string& w) { plan.intentions.push_back(parse_intention(in, w, table)); });

  std::set<std::string> step_ids;
  for_each("body", [&](const json& s, const std::string& w) {
    auto step = parse_step(s, w, table);
    if (!step_ids.insert(step.id).second) Reader::fail(w + "/id", "duplicate step id '" + step.id + "'");
    plan.body.push_back(std::move(step));
  });

  std::set<std::string> sub_ids;
  for_each("sub_plans", [&](const json& s, const std::string& w) {
    auto sub = parse_plan(s, w, table);
    if (!sub_ids.insert(sub.id).second) Reader::fail(w + "/id", "duplicate sub-plan id '" + sub.id + "'");
    plan.sub_plans.push_back(std::move(sub));
  });
  return plan;
}

// ---------------------------------------------------------------------------
// Serialization

ordered_json node_to_json(const ConstraintNode& n) {
  ordered_json j;
  switch (n.kind) {
    case ConstraintNode::Kind::Leaf: {
      j["op"] = "cmp";
      ordered_json c;
      c["param"] = n.cmp.parameter;
      c["operator"] = std::string(to_string(n.cmp.op));
      if (const auto* d = std::get_if<double>(&n.cmp.threshold)) {
        c["threshold"] = *d;
      } else {
        c["threshold"] = std::get<std::string>(n.cmp.threshold);
      }
      c["deviation"] = n.cmp.deviation;
      if (!n.cmp.unit.empty()) c["unit"] = n.cmp.unit;
      j["cmp"] = std::move(c);
      return j;
    }
    case ConstraintNode::Kind::Ref:
      j["op"] = "ref";
      j["concept"] = n.ref;
      return j;
    case ConstraintNode::Kind::And: j["op"] = "and"; break;
    case ConstraintNode::Kind::Or: j["op"] = "or"; break;
    case ConstraintNode::Kind::Not: j["op"] = "not"; break;
  }
  j["children"] = ordered_json::array();
  for (const auto& c : n.children) j["children"].push_back(node_to_json(c));
  return j;
}

ordered_json expression_to_json(const ConstraintNode& n) {
  if (n.kind == ConstraintNode::Kind::Ref) return n.ref;
  return node_to_json(n);
}

ordered_json plan_to_json(const GuidelinePlan& p) {
  ordered_json j;
  j["id"] = p.id;
  j["name"] = p.name;
  j["max_start_delay_s"] = p.max_start_delay.count();
  j["conditions"] = ordered_json::array();
  for (const auto& c : p.conditions)
    j["conditions"].push_back({{"role", std::string(to_string(c.role))}, {"expr", expression_to_json(c.expression)}});
  j["intentions"] = ordered_json::array();
  for (const auto& in : p.intentions) {
    ordered_json ij;
    ij["kind"] = std::string(to_string(in.kind));
    ij["mode"] = std::string(to_string(in.mode));
    ij["target"] = expression_to_json(in.target);
    ij["monitoring_delay_s"] = in.monitoring_delay.count();
    ij["max_gap_s"] = in.max_gap.count();
    j["intentions"].push_back(std::move(ij));
  }
  j["body"] = ordered_json::array();
  for (const auto& s : p.body) {
    ordered_json sj;
    sj["id"] = s.id;
    sj["action_concept"] = s.action_concept;
    sj["code"] = s.code;
    sj["step_kind"] = std::string(to_string(s.kind));
    sj["earliest_offset_s"] = s.earliest_offset.count();
    sj["latest_offset_s"] = s.latest_offset.count();
    if (s.period) sj["period_s"] = s.period->count();
    sj["timing_deviation_s"] = s.timing_deviation.count();
    if (s.max_dose) sj["max_dose"] = *s.max_dose;
    sj["min_repeat_gap_s"] = s.min_repeat_gap.count();
    j["body"].push_back(std::move(sj));
  }
  j["sub_plans"] = ordered_json::array();
  for (const auto& sub : p.sub_plans) j["sub_plans"].push_back(plan_to_json(sub));
  return j;
}

std::string_view kind_name(ConceptKind k) {
  switch (k) {
    case ConceptKind::Primitive: return "primitive";
    case ConceptKind::Event: return "event";
    case ConceptKind::Abstract: return "abstract";
  }
  return "?";
}

}  // namespace

KnowledgeLibrary parse_knowledge_library(std::string_view document) {
  json root;
  try {
    root = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw KnowledgeError("byte " + std::to_string(e.byte), std::string("syntax error: ") + e.what());
  }
  Reader::expect_object(root, "/");
  Reader::allow_keys(root, "", {"concepts", "plans"});

  const auto& concepts_json = Reader::require(root, "", "concepts");
  Reader::expect_array(concepts_json, "/concepts");

  // Headers first so that definitions may reference concepts declared later.
  ConceptTable table;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < concepts_json.size(); ++i) {
    const auto where = "/concepts/" + std::to_string(i);
    auto c = parse_concept_header(concepts_json[i], where);
    if (table.by_id.count(c.id)) Reader::fail(where + "/id", "duplicate concept id '" + c.id + "'");
    order.push_back(c.id);
    table.by_id.emplace(c.id, std::move(c));
  }
  std::vector<Concept> concepts;
  for (std::size_t i = 0; i < concepts_json.size(); ++i) {
    const auto where = "/concepts/" + std::to_string(i);
    Concept c = table.by_id.at(order[i]);
    if (auto it = concepts_json[i].find("definition"); it != concepts_json[i].end() && !it->is_null())
      c.definition = parse_node(*it, where + "/definition", table);
    concepts.push_back(std::move(c));
  }

  std::vector<GuidelinePlan> plans;
  std::set<std::string> plan_ids;
  if (auto it = root.find("plans"); it != root.end()) {
    Reader::expect_array(*it, "/plans");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto where = "/plans/" + std::to_string(i);
      auto plan = parse_plan((*it)[i], where, table);
      if (!plan_ids.insert(plan.id).second) Reader::fail(where + "/id", "duplicate plan id '" + plan.id + "'");
      plans.push_back(std::move(plan));
    }
  }
  return KnowledgeLibrary(std::move(concepts), std::move(plans));
}

KnowledgeLibrary load_knowledge_library(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open knowledge file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_knowledge_library(buf.str());
}

std::string serialize_knowledge_library(const KnowledgeLibrary& lib) {
  ordered_json root;
  root["concepts"] = ordered_json::array();
  for (const auto& [id, c] : lib.concepts()) {
    ordered_json cj;
    cj["id"] = c.id;
    cj["kind"] = std::string(kind_name(c.kind));
    if (!c.unit.empty()) cj["unit"] = c.unit;
    if (c.domain == ValueDomain::Categorical) cj["domain"] = "categorical";
    if (c.persistence)
      cj["persistence"] = {{"good_before_s", c.persistence->good_before.count()},
                           {"good_after_s", c.persistence->good_after.count()}};
    if (c.definition) cj["definition"] = node_to_json(*c.definition);
    root["concepts"].push_back(std::move(cj));
  }
  root["plans"] = ordered_json::array();
  for (const auto& p : lib.plans()) root["plans"].push_back(plan_to_json(p));
  return root.dump(2) + "\n";
}

std::string library_hash(const KnowledgeLibrary& lib) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : serialize_knowledge_library(lib)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::ok() const { return error_count() == 0; }

std::size_t ValidationReport::error_count() const {
  std::size_t n = 0;
  for (const auto& f : findings) n += f.severity == Severity::Error;
  return n;
}

namespace {

class Validator {
 public:
  explicit Validator(const KnowledgeLibrary& lib) : lib_(lib) {}

  ValidationReport run() {
    for (const auto& [id, c] : lib_.concepts()) check_concept(c);
    std::set<std::string> top_ids;
    for (const auto& p : lib_.plans()) {
      if (!top_ids.insert(p.id).second) error("plans[" + p.id + "]", "duplicate plan id");
      check_plan(p, "plans[" + p.id + "]");
    }
    return std::move(report_);
  }

 private:
  void error(std::string where, std::string what) {
    report_.findings.push_back({Severity::Error, std::move(where), std::move(what)});
  }
  void warning(std::string where, std::string what) {
    report_.findings.push_back({Severity::Warning, std::move(where), std::move(what)});
  }

  void check_concept(const Concept& c) {
    const auto where = "concepts[" + c.id + "]";
    if (c.kind == ConceptKind::Abstract) {
      if (!c.definition) error(where, "abstract concept has no definition");
      if (c.persistence) error(where, "abstract concept must not declare persistence");
      if (c.definition) check_node(*c.definition, where + ".definition", /*inside_definition=*/true);
      return;
    }
    if (c.definition) error(where, "only abstract concepts may have a definition");
    if (!c.persistence) {
      error(where, "primitive and event concepts need a persistence spec");
    } else {
      const auto& p = *c.persistence;
      if (p.good_before.count() < 0 || p.good_after.count() < 0) error(where, "persistence durations must be >= 0");
      if ((p.good_before + p.good_after).count() <= 0) error(where, "good_before + good_after must be > 0");
    }
  }

  void check_node(const ConstraintNode& n, const std::string& where, bool inside_definition) {
    using K = ConstraintNode::Kind;
    switch (n.kind) {
      case K::Leaf: {
        const Concept* param = lib_.find_concept(n.cmp.parameter);
        if (!param) {
          error(where, "dangling reference to undefined concept '" + n.cmp.parameter + "'");
          return;
        }
        if (param->kind == ConceptKind::Abstract)
          error(where, "comparison over abstract concept '" + param->id + "'");
        if (n.cmp.deviation < 0) error(where, "deviation interval must be >= 0");
        if (param->domain == ValueDomain::Categorical) {
          if (n.cmp.op != CompareOp::Equal && n.cmp.op != CompareOp::NotEqual)
            error(where, "categorical parameter '" + param->id + "' only supports '='");
          if (n.cmp.deviation != 0) error(where, "categorical comparison must be crisp (deviation 0)");
          if (!std::holds_alternative<std::string>(n.cmp.threshold))
            error(where, "categorical parameter needs a string threshold");
        } else if (!std::holds_alternative<double>(n.cmp.threshold)) {
          error(where, "numeric parameter needs a numeric threshold");
        }
        if (!n.cmp.unit.empty() && n.cmp.unit != param->unit) error(where, "unit mismatch with parameter");
        return;
      }
      case K::Ref: {
        const Concept* target = lib_.find_concept(n.ref);
        if (!target) {
          error(where, "dangling reference to undefined concept '" + n.ref + "'");
        } else if (target->kind != ConceptKind::Abstract) {
          error(where, "reference to non-abstract concept '" + n.ref + "'");
        } else if (inside_definition) {
          error(where, "abstract concept defined over abstract concept '" + n.ref + "' is not supported");
        }
        return;
      }
      case K::And:
      case K::Or:
        if (n.children.size() < 2) error(where, std::string(n.kind == K::And ? "AND" : "OR") + " node needs >= 2 children");
        break;
      case K::Not:
        if (n.children.size() != 1) error(where, "NOT node needs exactly one child");
        break;
    }
    for (std::size_t i = 0; i < n.children.size(); ++i)
      check_node(n.children[i], where + ".children[" + std::to_string(i) + "]", inside_definition);
  }

  void check_plan(const GuidelinePlan& p, const std::string& where) {
    std::set<ConditionRole> roles;
    for (const auto& c : p.conditions) {
      if (!roles.insert(c.role).second) error(where, "more than one " + std::string(to_string(c.role)) + " condition");
      check_node(c.expression, where + ".conditions[" + std::string(to_string(c.role)) + "]", false);
    }
    for (std::size_t i = 0; i < p.intentions.size(); ++i) {
      const auto& in = p.intentions[i];
      const auto w = where + ".intentions[" + std::to_string(i) + "]";
      check_node(in.target, w, false);
      if (in.monitoring_delay.count() < 0) error(w, "monitoring delay must be >= 0");
      if (in.max_gap.count() <= 0) error(w, "max measurement gap must be > 0");
    }
    if (p.max_start_delay.count() < 0) error(where, "max_start_delay must be >= 0");

    std::set<std::string> step_ids;
    for (const auto& s : p.body) {
      const auto w = where + ".body[" + s.id + "]";
      if (!step_ids.insert(s.id).second) error(w, "duplicate step id");
      const Concept* action = lib_.find_concept(s.action_concept);
      if (!action) {
        error(w, "dangling reference to undefined concept '" + s.action_concept + "'");
      } else if (action->kind == ConceptKind::Abstract) {
        error(w, "step action must be an event or primitive concept");
      }
      if (s.earliest_offset > s.latest_offset) error(w, "earliest offset exceeds latest offset");
      if (s.kind == StepKind::Periodic && (!s.period || s.period->count() <= 0))
        error(w, "periodic step needs a period > 0");
      if (s.timing_deviation.count() < 0 || s.min_repeat_gap.count() < 0) error(w, "durations must be >= 0");
      if (s.kind == StepKind::DrugIncrease && !s.max_dose) warning(w, "drug-increase step without max_dose");
    }

    std::set<std::string> sub_ids;
    for (const auto& sub : p.sub_plans) {
      if (!sub_ids.insert(sub.id).second) error(where + ".sub_plans[" + sub.id + "]", "duplicate sub-plan id");
      check_plan(sub, where + ".sub_plans[" + sub.id + "]");
    }
  }

  const KnowledgeLibrary& lib_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate_library(const KnowledgeLibrary& lib) {
  auto report = Validator(lib).run();
  for (const auto& path : lib.path_plans()) {
    if (!path.entry_expression())
      report.findings.push_back({Severity::Warning, "paths[" + path.id + "]",
                                 "path has no filter or setup condition and will never be activated"});
  }
  return report;
}

}  // namespace critique
