#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "critique/knowledge.hpp"
#include "critique/record.hpp"
#include "critique/time.hpp"

namespace critique {

/// Numeric equality tolerance for merging values and coalescing scores.
inline constexpr double kScoreTolerance = 1e-9;

/// Half-open [start, end).
struct TimeWindow {
  Timestamp start{};
  Timestamp end{};

  bool empty() const { return !(start < end); }
  bool operator==(const TimeWindow&) const = default;
};

struct ValuedInterval {
  std::string parameter;
  Value value = 0.0;
  Timestamp start{};
  Timestamp end{};
  /// Position of the source item among same-parameter items; breaks ties between equal starts.
  std::size_t order = 0;

  bool operator==(const ValuedInterval&) const = default;
};

struct Partition {
  Timestamp start{};
  Timestamp end{};
  std::map<std::string, Value, std::less<>> values;

  bool operator==(const Partition&) const = default;
};

struct ScoredInterval {
  Timestamp start{};
  Timestamp end{};
  double membership = 0.0;
  std::string concept_id;

  bool operator==(const ScoredInterval&) const = default;
};

bool values_equal(const Value& a, const Value& b);

/// Point items become [t - good_before, t + good_after); interval items keep
/// [valid_start, valid_stop). Zero-width results are kept: they still supersede older values.
std::vector<ValuedInterval> extrapolate_intervals(std::span<const DataItem> points, const PersistenceSpec& persistence);

/// Latest measurement wins: an interval is truncated at the start of the first later-starting
/// interval of a different value that overlaps it. Empty results are dropped. Output sorted by start.
std::vector<ValuedInterval> resolve_precedence(std::vector<ValuedInterval> intervals);

/// Overlapping or abutting intervals of equal value become one. Output disjoint and sorted
/// only when the input had no different-valued overlaps.
std::vector<ValuedInterval> merge_same_value(std::vector<ValuedInterval> intervals);

/// extrapolate -> resolve_precedence -> merge_same_value.
std::vector<ValuedInterval> parameter_intervals(std::span<const DataItem> points, const PersistenceSpec& persistence);

using IntervalsByParameter = std::map<std::string, std::vector<ValuedInterval>, std::less<>>;

/// Tiles `window` with partitions whose boundaries are the window ends plus every interval
/// endpoint inside it. Each partition holds at most one value per parameter.
std::vector<Partition> partition_timeline(const IntervalsByParameter& intervals, TimeWindow window);

/// Smallest window covering every interval, or nullopt if there are none.
std::optional<TimeWindow> covering_window(const IntervalsByParameter& intervals);

/// Linear-ramp membership of `value` against the comparison. Zero deviation is crisp.
double fuzzify_comparison(double value, const FuzzyComparison& cmp);
/// Categorical comparisons are crisp equality; a numeric/categorical mismatch yields nullopt.
std::optional<double> fuzzify_value(const Value& value, const FuzzyComparison& cmp);

/// Pushes a negation through the tree: leaf operators invert, AND/OR swap (De Morgan),
/// double negations cancel. The result contains no Not nodes. Throws std::invalid_argument on Ref nodes.
ConstraintNode negate_node(const ConstraintNode& node);
/// Removes every Not node from the tree without changing its meaning.
ConstraintNode eliminate_negations(const ConstraintNode& node);

/// AND = min over operands, defined only when all are defined; OR = max over the defined
/// operands, defined when at least one is; NOT evaluates the child with inverted relations.
/// nullopt means "no membership" (missing data). Throws std::invalid_argument on Ref nodes.
std::optional<double> evaluate_node(const ConstraintNode& node, const Partition& partition);

/// Merges abutting intervals whose memberships agree within kScoreTolerance.
std::vector<ScoredInterval> coalesce(std::vector<ScoredInterval> intervals);

/// Full pipeline for an expression: references resolved, per-parameter intervals built with each
/// parameter's persistence, partitioned over `window` (default: covering window), evaluated per
/// partition, coalesced. Partitions without a membership emit nothing.
/// Throws UnknownConceptError for unresolved parameters.
std::vector<ScoredInterval> evaluate_expression(const ConstraintNode& expression, const KnowledgeLibrary& lib,
                                                const PatientRecord& record, std::string label,
                                                std::optional<TimeWindow> window = std::nullopt);

/// evaluate_expression on an abstract concept's definition.
std::vector<ScoredInterval> evaluate_concept(const Concept& abstract_concept, const KnowledgeLibrary& lib,
                                             const PatientRecord& record,
                                             std::optional<TimeWindow> window = std::nullopt);

/// Membership of the interval containing `t`, or nullopt.
std::optional<double> membership_at(std::span<const ScoredInterval> intervals, Timestamp t);

}  // namespace critique
