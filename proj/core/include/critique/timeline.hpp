#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "critique/knowledge.hpp"
#include "critique/reasoner.hpp"
#include "critique/record.hpp"

namespace critique {

enum class LifecycleEventType { EarliestStart, LatestStart, Stopped, Completed, Suspended, Restart };
std::string_view to_string(LifecycleEventType t);

struct PlanLifecycleEvent {
  std::string plan_id;
  LifecycleEventType type = LifecycleEventType::EarliestStart;
  Timestamp time{};
  double membership = 0.0;
  std::size_t activation = 0;

  bool operator==(const PlanLifecycleEvent&) const = default;
};

enum class ExplanationType {
  StepNotSupported,
  StoppedPlanStep,
  RedundantStepRepeated,
  DuplicateStep,
  WrongPathSelection,
  StepTooEarly,
  StepOnTime,
  StepTooLate,
  MissingAction,
  ConditionEvidence,
  IntentionEvidence,
  SuppressedMaxDose,
  SuppressedLowCompliance,
};
std::string_view to_string(ExplanationType t);
/// Condition and intention evidence only annotate an item; they are not critiques.
bool is_bookkeeping(ExplanationType t);
/// Types that report a departure from the guideline.
bool is_deviation(ExplanationType t);

struct ComputedExplanation {
  std::optional<std::size_t> item;  // index into the record; absent for missing actions
  Timestamp time{};
  std::string plan_id;
  KnowledgeRole role;
  std::string concept_id;
  ExplanationType type = ExplanationType::StepNotSupported;
  std::optional<double> timing;
  double applicability = 0.0;
  double specificity = 1.0;
  double reasonableness = 0.0;
  std::string note;

  bool operator==(const ComputedExplanation&) const = default;
};

enum class IntentionStatus { Achievement, ShouldMonitor, NotMonitored };
std::string_view to_string(IntentionStatus s);

struct IntentionAssessment {
  std::string plan_id;
  std::size_t intention = 0;  // index into PathPlan::intentions
  std::size_t activation = 0;
  IntentionStatus status = IntentionStatus::ShouldMonitor;
  TimeWindow interval;
  std::optional<double> score;  // achievement only
  double membership = 0.0;      // activation membership

  bool operator==(const IntentionAssessment&) const = default;
};

struct DataItemRef {
  std::size_t index = 0;
  bool operator==(const DataItemRef&) const = default;
};

using PointPayload = std::variant<PlanLifecycleEvent, DataItemRef, ComputedExplanation, IntentionAssessment>;

enum class PointKind { DataItem, ComputedExplanation };

struct TimePoint {
  Timestamp time{};
  PointPayload payload;
  std::uint64_t seq = 0;  // insertion order, last tie-break

  PointKind kind() const {
    return std::holds_alternative<DataItemRef>(payload) ? PointKind::DataItem : PointKind::ComputedExplanation;
  }
};

/// One activation of a path plan, from its earliest start to its stop or the record end.
struct Activation {
  std::string plan_id;
  std::size_t index = 0;
  Timestamp earliest_start{};
  Timestamp latest_start{};
  Timestamp end{};
  std::optional<LifecycleEventType> stop;
  double membership = 0.0;
};

enum class Pass { TopDown, BottomUp, MissingActions };

/// Per-patient chronological store of data items and everything derived from them.
class TimeLine {
 public:
  explicit TimeLine(PatientRecord record);

  const PatientRecord& record() const { return record_; }
  const std::string& patient_id() const { return record_.patient_id; }
  const std::vector<TimePoint>& points() const { return points_; }

  /// Keeps points ordered by (time, point type, plan id, concept id, seq).
  void insert(Timestamp time, PointPayload payload);

  bool pass_done(Pass p) const { return passes_.count(p) > 0; }
  void mark_pass(Pass p) { passes_.insert(p); }
  /// Throws std::logic_error unless every earlier pass has run.
  void require_passes_before(Pass p) const;

  std::vector<PlanLifecycleEvent> lifecycle_events() const;
  std::vector<PlanLifecycleEvent> lifecycle_events(std::string_view plan_id) const;
  std::vector<ComputedExplanation> explanations() const;
  std::vector<IntentionAssessment> assessments() const;

  /// Plans the top-down pass considered; applicability queries for other ids throw.
  const std::set<std::string, std::less<>>& known_plans() const { return known_plans_; }
  void add_known_plan(std::string id) { known_plans_.insert(std::move(id)); }

  /// Unthresholded condition tracks per (plan, role), kept for evidence and sibling lookups.
  void set_condition_track(const std::string& plan_id, ConditionRole role, std::vector<ScoredInterval> track);
  const std::vector<ScoredInterval>* condition_track(std::string_view plan_id, ConditionRole role) const;
  void set_entry_track(const std::string& plan_id, std::vector<ScoredInterval> track);
  const std::vector<ScoredInterval>* entry_track(std::string_view plan_id) const;

  void add_activation(Activation a) { activations_.push_back(std::move(a)); }
  const std::vector<Activation>& activations() const { return activations_; }
  const Activation* activation(std::string_view plan_id, std::size_t index) const;

 private:
  PatientRecord record_;
  std::vector<TimePoint> points_;
  std::uint64_t next_seq_ = 0;
  std::set<Pass> passes_;
  std::set<std::string, std::less<>> known_plans_;
  std::map<std::pair<std::string, ConditionRole>, std::vector<ScoredInterval>> condition_tracks_;
  std::map<std::string, std::vector<ScoredInterval>, std::less<>> entry_tracks_;
  std::vector<Activation> activations_;
};

/// Strict weak order used by TimeLine::insert.
bool point_less(const TimePoint& a, const TimePoint& b);

}  // namespace critique
