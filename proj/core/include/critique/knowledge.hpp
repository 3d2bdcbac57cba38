#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "critique/time.hpp"

namespace critique {

/// A parameter value: numeric or categorical.
using Value = std::variant<double, std::string>;

std::string value_to_string(const Value& v);

enum class ConceptKind { Primitive, Event, Abstract };
enum class ValueDomain { Numeric, Categorical };

/// How long a single measurement stays valid around its timestamp.
struct PersistenceSpec {
  Duration good_before{0};
  Duration good_after{0};

  bool operator==(const PersistenceSpec&) const = default;
};

/// Relation operators. `NotEqual` never appears in authored knowledge files as a
/// comparison the reasoner is asked to saturate; it is produced when an `=` leaf is negated.
enum class CompareOp { Greater, GreaterEqual, Less, LessEqual, Equal, NotEqual };

std::string_view to_string(CompareOp op);
std::optional<CompareOp> compare_op_from_string(std::string_view s);
/// Opposite relation: `>` <-> `<=`, `>=` <-> `<`, `=` <-> `!=`.
CompareOp invert(CompareOp op);

struct FuzzyComparison {
  std::string parameter;
  CompareOp op = CompareOp::Greater;
  Value threshold = 0.0;
  /// Ramp width, same unit as the parameter. Zero means crisp.
  double deviation = 0.0;
  /// Optional unit annotation; checked against the parameter's unit at parse time.
  std::string unit;

  bool operator==(const FuzzyComparison&) const = default;
};

/// AND-OR constraint tree. `Ref` points at an abstract concept whose definition is
/// substituted before evaluation.
struct ConstraintNode {
  enum class Kind { Leaf, And, Or, Not, Ref };

  Kind kind = Kind::Leaf;
  FuzzyComparison cmp;                 // Leaf
  std::string ref;                     // Ref
  std::vector<ConstraintNode> children;  // And, Or (n-ary), Not (exactly one)

  static ConstraintNode leaf(FuzzyComparison c);
  static ConstraintNode leaf(std::string parameter, CompareOp op, double threshold, double deviation);
  static ConstraintNode all_of(std::vector<ConstraintNode> children);
  static ConstraintNode any_of(std::vector<ConstraintNode> children);
  static ConstraintNode negation(ConstraintNode child);
  static ConstraintNode reference(std::string concept_id);

  bool operator==(const ConstraintNode&) const = default;
};

/// AND of two expressions, flattening nested ANDs so that the merge is associative.
ConstraintNode conjoin(const ConstraintNode& a, const ConstraintNode& b);
/// OR of two expressions, flattening nested ORs.
ConstraintNode disjoin(const ConstraintNode& a, const ConstraintNode& b);

/// Human-readable infix rendering, e.g. `diabetes AND pregnancy`.
std::string to_string(const ConstraintNode& node);

struct Concept {
  std::string id;
  ConceptKind kind = ConceptKind::Primitive;
  std::string unit;
  ValueDomain domain = ValueDomain::Numeric;
  std::optional<PersistenceSpec> persistence;  // primitives and events
  std::optional<ConstraintNode> definition;    // abstract concepts

  bool operator==(const Concept&) const = default;
};

enum class ConditionRole { Filter, Setup, Complete, Abort, Suspend, Restart };
inline constexpr ConditionRole kAllConditionRoles[] = {ConditionRole::Filter,   ConditionRole::Setup,
                                                      ConditionRole::Complete, ConditionRole::Abort,
                                                      ConditionRole::Suspend,  ConditionRole::Restart};

std::string_view to_string(ConditionRole r);
std::optional<ConditionRole> condition_role_from_string(std::string_view s);
/// Filter, Setup and Restart gate entry; Complete, Abort and Suspend stop a plan.
bool is_entry_role(ConditionRole r);

struct Condition {
  ConditionRole role = ConditionRole::Filter;
  ConstraintNode expression;

  bool operator==(const Condition&) const = default;
};

enum class IntentionKind { Process, Outcome };
enum class IntentionMode { Achieve, Maintain, Avoid };

std::string_view to_string(IntentionKind k);
std::string_view to_string(IntentionMode m);

struct Intention {
  IntentionKind kind = IntentionKind::Outcome;
  IntentionMode mode = IntentionMode::Achieve;
  ConstraintNode target;
  Duration monitoring_delay{0};
  Duration max_gap{days(180)};

  bool operator==(const Intention&) const = default;
};

enum class StepKind { Once, Periodic, DrugAdministration, DrugIncrease };

std::string_view to_string(StepKind k);
std::optional<StepKind> step_kind_from_string(std::string_view s);

struct PlanStepSpec {
  std::string id;
  std::string action_concept;
  std::string code;
  StepKind kind = StepKind::Once;
  Duration earliest_offset{0};
  Duration latest_offset{0};
  std::optional<Duration> period;
  Duration timing_deviation{0};
  std::optional<double> max_dose;
  Duration min_repeat_gap{0};

  bool operator==(const PlanStepSpec&) const = default;
};

inline constexpr Duration kDefaultMaxStartDelay = days(90);

struct GuidelinePlan {
  std::string id;
  std::string name;
  std::vector<Condition> conditions;
  std::vector<Intention> intentions;
  std::vector<PlanStepSpec> body;
  std::vector<GuidelinePlan> sub_plans;
  Duration max_start_delay = kDefaultMaxStartDelay;

  const Condition* condition(ConditionRole role) const;
  bool operator==(const GuidelinePlan&) const = default;
};

/// A single clinical path through a composite guideline, with conditions merged
/// from every ancestor.
struct PathPlan {
  std::string id;  // source ids joined with '/'
  std::vector<std::string> source_ids;
  std::map<ConditionRole, ConstraintNode> conditions;
  std::vector<Intention> intentions;
  std::vector<PlanStepSpec> body;
  Duration max_start_delay = kDefaultMaxStartDelay;

  /// Path id of the enclosing plan; empty for top-level plans.
  std::string parent_id() const;
  const ConstraintNode* condition(ConditionRole role) const;
  /// Conjunction of the filter and setup conditions, if any.
  std::optional<ConstraintNode> entry_expression() const;
  const PlanStepSpec* step(std::string_view step_id) const;

  bool operator==(const PathPlan&) const = default;
};

enum class RoleKind { EntryCondition, StopCondition, OutcomeIntention, ProcessIntention, BodyStep };

std::string_view to_string(RoleKind k);

struct KnowledgeRole {
  std::string path_plan_id;
  RoleKind kind = RoleKind::BodyStep;
  std::string step_id;  // body steps only

  auto operator<=>(const KnowledgeRole&) const = default;
};

class UnknownConceptError : public std::out_of_range {
 public:
  explicit UnknownConceptError(const std::string& id) : std::out_of_range("unknown concept '" + id + "'"), id_(id) {}
  const std::string& concept_id() const { return id_; }

 private:
  std::string id_;
};

/// Immutable after construction; safe for concurrent reads.
class KnowledgeLibrary {
 public:
  KnowledgeLibrary() = default;
  KnowledgeLibrary(std::vector<Concept> concepts, std::vector<GuidelinePlan> plans);

  const std::map<std::string, Concept, std::less<>>& concepts() const { return concepts_; }
  const std::vector<GuidelinePlan>& plans() const { return plans_; }
  const std::vector<PathPlan>& path_plans() const { return path_plans_; }

  const Concept* find_concept(std::string_view id) const;
  const Concept& concept_at(std::string_view id) const;
  const PathPlan* find_path_plan(std::string_view id) const;

  /// Roles across all path plans whose definitions mention the concept, sorted by
  /// (plan id, role kind, step id). Throws UnknownConceptError.
  const std::vector<KnowledgeRole>& roles_for_concept(std::string_view concept_id) const;

  /// Number of distinct path plans that give the concept any role.
  std::size_t plan_count_for_concept(std::string_view concept_id) const;

 private:
  void build_index();

  std::map<std::string, Concept, std::less<>> concepts_;
  std::vector<GuidelinePlan> plans_;
  std::vector<PathPlan> path_plans_;
  std::map<std::string, std::vector<KnowledgeRole>, std::less<>> role_index_;
};

/// Replaces every `Ref` by the referenced concept's definition (one level; referenced
/// definitions are themselves expanded). Throws UnknownConceptError for dangling references.
ConstraintNode resolve_references(const ConstraintNode& node, const KnowledgeLibrary& lib);

/// Parameter ids (primitive/event concepts) mentioned in an expression, after resolving refs.
std::vector<std::string> referenced_parameters(const ConstraintNode& node, const KnowledgeLibrary& lib);

/// Every concept id that appears syntactically in the expression, both ref targets and leaf parameters.
void collect_concept_ids(const ConstraintNode& node, std::vector<std::string>& out);

/// Propagates a parent's conditions into a child: entry roles AND-merged, stop roles OR-merged.
std::map<ConditionRole, ConstraintNode> propagate_conditions(const std::map<ConditionRole, ConstraintNode>& parent,
                                                             const std::map<ConditionRole, ConstraintNode>& child);

/// One PathPlan per leaf path of the hierarchy.
std::vector<PathPlan> flatten_guideline_paths(const GuidelinePlan& plan);

}  // namespace critique
