#include "critique/knowledge.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace critique {

std::string value_to_string(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", std::get<double>(v));
  return buf;
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Greater: return ">";
    case CompareOp::GreaterEqual: return ">=";
    case CompareOp::Less: return "<";
    case CompareOp::LessEqual: return "<=";
    case CompareOp::Equal: return "=";
    case CompareOp::NotEqual: return "!=";
  }
  return "?";
}

std::optional<CompareOp> compare_op_from_string(std::string_view s) {
  if (s == ">") return CompareOp::Greater;
  if (s == ">=") return CompareOp::GreaterEqual;
  if (s == "<") return CompareOp::Less;
  if (s == "<=") return CompareOp::LessEqual;
  if (s == "=" || s == "==") return CompareOp::Equal;
  if (s == "!=") return CompareOp::NotEqual;
  return std::nullopt;
}

CompareOp invert(CompareOp op) {
  switch (op) {
    case CompareOp::Greater: return CompareOp::LessEqual;
    case CompareOp::GreaterEqual: return CompareOp::Less;
    case CompareOp::Less: return CompareOp::GreaterEqual;
    case CompareOp::LessEqual: return CompareOp::Greater;
    case CompareOp::Equal: return CompareOp::NotEqual;
    case CompareOp::NotEqual: return CompareOp::Equal;
  }
  return op;
}

ConstraintNode ConstraintNode::leaf(FuzzyComparison c) {
  ConstraintNode n;
  n.kind = Kind::Leaf;
  n.cmp = std::move(c);
  return n;
}

ConstraintNode ConstraintNode::leaf(std::string parameter, CompareOp op, double threshold, double deviation) {
  return leaf(FuzzyComparison{std::move(parameter), op, threshold, deviation, {}});
}

ConstraintNode ConstraintNode::all_of(std::vector<ConstraintNode> children) {
  ConstraintNode n;
  n.kind = Kind::And;
  n.children = std::move(children);
  return n;
}

ConstraintNode ConstraintNode::any_of(std::vector<ConstraintNode> children) {
  ConstraintNode n;
  n.kind = Kind::Or;
  n.children = std::move(children);
  return n;
}

ConstraintNode ConstraintNode::negation(ConstraintNode child) {
  ConstraintNode n;
  n.kind = Kind::Not;
  n.children.push_back(std::move(child));
  return n;
}

ConstraintNode ConstraintNode::reference(std::string concept_id) {
  ConstraintNode n;
  n.kind = Kind::Ref;
  n.ref = std::move(concept_id);
  return n;
}

namespace {

ConstraintNode merge_nary(ConstraintNode::Kind kind, const ConstraintNode& a, const ConstraintNode& b) {
  ConstraintNode out;
  out.kind = kind;
  for (const auto* side : {&a, &b}) {
    if (side->kind == kind) {
      out.children.insert(out.children.end(), side->children.begin(), side->children.end());
    } else {
      out.children.push_back(*side);
    }
  }
  return out;
}

void render(const ConstraintNode& node, std::string& out, bool nested) {
  using K = ConstraintNode::Kind;
  switch (node.kind) {
    case K::Leaf:
      out += node.cmp.parameter;
      out += ' ';
      out += to_string(node.cmp.op);
      out += ' ';
      out += value_to_string(node.cmp.threshold);
      if (!node.cmp.unit.empty()) {
        out += ' ';
        out += node.cmp.unit;
      }
      return;
    case K::Ref:
      out += node.ref;
      return;
    case K::Not:
      out += "NOT(";
      if (!node.children.empty()) render(node.children.front(), out, false);
      out += ')';
      return;
    case K::And:
    case K::Or: {
      if (nested) out += '(';
      const char* sep = node.kind == K::And ? " AND " : " OR ";
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i) out += sep;
        render(node.children[i], out, true);
      }
      if (nested) out += ')';
      return;
    }
  }
}

}  // namespace

ConstraintNode conjoin(const ConstraintNode& a, const ConstraintNode& b) {
  return merge_nary(ConstraintNode::Kind::And, a, b);
}

ConstraintNode disjoin(const ConstraintNode& a, const ConstraintNode& b) {
  return merge_nary(ConstraintNode::Kind::Or, a, b);
}

std::string to_string(const ConstraintNode& node) {
  std::string out;
  render(node, out, false);
  return out;
}

std::string_view to_string(ConditionRole r) {
  switch (r) {
    case ConditionRole::Filter: return "filter";
    case ConditionRole::Setup: return "setup";
    case ConditionRole::Complete: return "complete";
    case ConditionRole::Abort: return "abort";
    case ConditionRole::Suspend: return "suspend";
    case ConditionRole::Restart: return "restart";
  }
  return "?";
}

std::optional<ConditionRole> condition_role_from_string(std::string_view s) {
  for (auto r : kAllConditionRoles)
    if (to_string(r) == s) return r;
  return std::nullopt;
}

bool is_entry_role(ConditionRole r) {
  return r == ConditionRole::Filter || r == ConditionRole::Setup || r == ConditionRole::Restart;
}

std::string_view to_string(IntentionKind k) { return k == IntentionKind::Process ? "process" : "outcome"; }

std::string_view to_string(IntentionMode m) {
  switch (m) {
    case IntentionMode::Achieve: return "achieve";
    case IntentionMode::Maintain: return "maintain";
    case IntentionMode::Avoid: return "avoid";
  }
  return "?";
}

std::string_view to_string(StepKind k) {
  switch (k) {
    case StepKind::Once: return "once";
    case StepKind::Periodic: return "periodic";
    case StepKind::DrugAdministration: return "drug-administration";
    case StepKind::DrugIncrease: return "drug-increase";
  }
  return "?";
}

std::optional<StepKind> step_kind_from_string(std::string_view s) {
  for (auto k : {StepKind::Once, StepKind::Periodic, StepKind::DrugAdministration, StepKind::DrugIncrease})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::string_view to_string(RoleKind k) {
  switch (k) {
    case RoleKind::EntryCondition: return "entry-condition";
    case RoleKind::StopCondition: return "stop-condition";
    case RoleKind::OutcomeIntention: return "outcome-intention";
    case RoleKind::ProcessIntention: return "process-intention";
    case RoleKind::BodyStep: return "body-step";
  }
  return "?";
}

const Condition* GuidelinePlan::condition(ConditionRole role) const {
  for (const auto& c : conditions)
    if (c.role == role) return &c;
  return nullptr;
}

std::string PathPlan::parent_id() const {
  const auto pos = id.rfind('/');
  return pos == std::string::npos ? std::string{} : id.substr(0, pos);
}

const ConstraintNode* PathPlan::condition(ConditionRole role) const {
  auto it = conditions.find(role);
  return it == conditions.end() ? nullptr : &it->second;
}

std::optional<ConstraintNode> PathPlan::entry_expression() const {
  const auto* filter = condition(ConditionRole::Filter);
  const auto* setup = condition(ConditionRole::Setup);
  if (filter && setup) return conjoin(*filter, *setup);
  if (filter) return *filter;
  if (setup) return *setup;
  return std::nullopt;
}

const PlanStepSpec* PathPlan::step(std::string_view step_id) const {
  for (const auto& s : body)
    if (s.id == step_id) return &s;
  return nullptr;
}

std::map<ConditionRole, ConstraintNode> propagate_conditions(const std::map<ConditionRole, ConstraintNode>& parent,
                                                             const std::map<ConditionRole, ConstraintNode>& child) {
  std::map<ConditionRole, ConstraintNode> merged = child;
  for (const auto& [role, expr] : parent) {
    auto it = merged.find(role);
    if (it == merged.end()) {
      merged.emplace(role, expr);
    } else {
      it->second = is_entry_role(role) ? conjoin(expr, it->second) : disjoin(expr, it->second);
    }
  }
  return merged;
}

namespace {

std::map<ConditionRole, ConstraintNode> own_conditions(const GuidelinePlan& plan) {
  std::map<ConditionRole, ConstraintNode> out;
  for (const auto& c : plan.conditions) out.emplace(c.role, c.expression);
  return out;
}

void flatten_into(const GuidelinePlan& plan, const PathPlan* parent, std::vector<PathPlan>& out) {
  PathPlan path;
  if (parent) {
    path.id = parent->id + "/" + plan.id;
    path.source_ids = parent->source_ids;
    path.conditions = propagate_conditions(parent->conditions, own_conditions(plan));
    path.intentions = parent->intentions;
  } else {
    path.id = plan.id;
    path.conditions = own_conditions(plan);
  }
  path.source_ids.push_back(plan.id);
  path.intentions.insert(path.intentions.end(), plan.intentions.begin(), plan.intentions.end());
  path.max_start_delay = plan.max_start_delay;

  if (plan.sub_plans.empty()) {
    path.body = plan.body;
    out.push_back(std::move(path));
    return;
  }
  for (const auto& sub : plan.sub_plans) flatten_into(sub, &path, out);
}

}  // namespace

std::vector<PathPlan> flatten_guideline_paths(const GuidelinePlan& plan) {
  std::vector<PathPlan> out;
  flatten_into(plan, nullptr, out);
  return out;
}

void collect_concept_ids(const ConstraintNode& node, std::vector<std::string>& out) {
  switch (node.kind) {
    case ConstraintNode::Kind::Leaf: out.push_back(node.cmp.parameter); break;
    case ConstraintNode::Kind::Ref: out.push_back(node.ref); break;
    default:
      for (const auto& c : node.children) collect_concept_ids(c, out);
  }
}

ConstraintNode resolve_references(const ConstraintNode& node, const KnowledgeLibrary& lib) {
  switch (node.kind) {
    case ConstraintNode::Kind::Leaf: return node;
    case ConstraintNode::Kind::Ref: {
      const Concept* c = lib.find_concept(node.ref);
      if (!c || !c->definition) throw UnknownConceptError(node.ref);
      return resolve_references(*c->definition, lib);
    }
    default: {
      ConstraintNode out = node;
      for (auto& child : out.children) child = resolve_references(child, lib);
      return out;
    }
  }
}

std::vector<std::string> referenced_parameters(const ConstraintNode& node, const KnowledgeLibrary& lib) {
  std::vector<std::string> ids;
  collect_concept_ids(resolve_references(node, lib), ids);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

KnowledgeLibrary::KnowledgeLibrary(std::vector<Concept> concepts, std::vector<GuidelinePlan> plans)
    : plans_(std::move(plans)) {
  for (auto& c : concepts) {
    auto id = c.id;
    concepts_.insert_or_assign(std::move(id), std::move(c));
  }
  for (const auto& p : plans_) {
    auto paths = flatten_guideline_paths(p);
    path_plans_.insert(path_plans_.end(), std::make_move_iterator(paths.begin()), std::make_move_iterator(paths.end()));
  }
  std::sort(path_plans_.begin(), path_plans_.end(), [](const PathPlan& a, const PathPlan& b) { return a.id < b.id; });
  build_index();
}

const Concept* KnowledgeLibrary::find_concept(std::string_view id) const {
  auto it = concepts_.find(id);
  return it == concepts_.end() ? nullptr : &it->second;
}

const Concept& KnowledgeLibrary::concept_at(std::string_view id) const {
  if (const auto* c = find_concept(id)) return *c;
  throw UnknownConceptError(std::string(id));
}

const PathPlan* KnowledgeLibrary::find_path_plan(std::string_view id) const {
  auto it = std::lower_bound(path_plans_.begin(), path_plans_.end(), id,
                             [](const PathPlan& p, std::string_view key) { return p.id < key; });
  return it != path_plans_.end() && it->id == id ? &*it : nullptr;
}

const std::vector<KnowledgeRole>& KnowledgeLibrary::roles_for_concept(std::string_view concept_id) const {
  if (!find_concept(concept_id)) throw UnknownConceptError(std::string(concept_id));
  static const std::vector<KnowledgeRole> kEmpty;
  auto it = role_index_.find(concept_id);
  return it == role_index_.end() ? kEmpty : it->second;
}

std::size_t KnowledgeLibrary::plan_count_for_concept(std::string_view concept_id) const {
  const auto& roles = roles_for_concept(concept_id);
  std::set<std::string_view> plans;
  for (const auto& r : roles) plans.insert(r.path_plan_id);
  return plans.size();
}

void KnowledgeLibrary::build_index() {
  std::map<std::string, std::set<KnowledgeRole>, std::less<>> index;

  // A reference to an abstract concept also mentions the parameters of its definition.
  auto mentioned = [this](const ConstraintNode& expr) {
    std::vector<std::string> ids;
    collect_concept_ids(expr, ids);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const Concept* c = find_concept(ids[i]);
      if (c && c->definition) {
        std::vector<std::string> nested;
        collect_concept_ids(*c->definition, nested);
        for (auto& n : nested)
          if (std::find(ids.begin(), ids.end(), n) == ids.end()) ids.push_back(std::move(n));
      }
    }
    return ids;
  };

  for (const auto& path : path_plans_) {
    for (const auto& [role, expr] : path.conditions) {
      const RoleKind kind = is_entry_role(role) ? RoleKind::EntryCondition : RoleKind::StopCondition;
      for (const auto& id : mentioned(expr)) index[id].insert(KnowledgeRole{path.id, kind, {}});
    }
    for (const auto& intention : path.intentions) {
      const RoleKind kind =
          intention.kind == IntentionKind::Outcome ? RoleKind::OutcomeIntention : RoleKind::ProcessIntention;
      for (const auto& id : mentioned(intention.target)) index[id].insert(KnowledgeRole{path.id, kind, {}});
    }
    for (const auto& step : path.body) {
      index[step.action_concept].insert(KnowledgeRole{path.id, RoleKind::BodyStep, step.id});
    }
  }

  for (auto& [id, roles] : index) role_index_.emplace(id, std::vector<KnowledgeRole>(roles.begin(), roles.end()));
}

}  // namespace critique
