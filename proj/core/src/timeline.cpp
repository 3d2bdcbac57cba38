#include "critique/timeline.hpp"

#include <algorithm>
#include <stdexcept>

namespace critique {

std::string_view to_string(LifecycleEventType t) {
  switch (t) {
    case LifecycleEventType::EarliestStart: return "plan-earliest-start";
    case LifecycleEventType::LatestStart: return "plan-latest-start";
    case LifecycleEventType::Stopped: return "plan-stopped";
    case LifecycleEventType::Completed: return "plan-completed";
    case LifecycleEventType::Suspended: return "plan-suspended";
    case LifecycleEventType::Restart: return "plan-restart";
  }
  return "?";
}

std::string_view to_string(ExplanationType t) {
  switch (t) {
    case ExplanationType::StepNotSupported: return "step-not-supported";
    case ExplanationType::StoppedPlanStep: return "stopped-plan-step";
    case ExplanationType::RedundantStepRepeated: return "redundant-step-repeated";
    case ExplanationType::DuplicateStep: return "duplicate-step";
    case ExplanationType::WrongPathSelection: return "wrong-path-selection";
    case ExplanationType::StepTooEarly: return "step-too-early";
    case ExplanationType::StepOnTime: return "step-on-time";
    case ExplanationType::StepTooLate: return "step-too-late";
    case ExplanationType::MissingAction: return "missing-action";
    case ExplanationType::ConditionEvidence: return "condition-evidence";
    case ExplanationType::IntentionEvidence: return "intention-evidence";
    case ExplanationType::SuppressedMaxDose: return "suppressed-max-dose";
    case ExplanationType::SuppressedLowCompliance: return "suppressed-low-compliance";
  }
  return "?";
}

bool is_bookkeeping(ExplanationType t) {
  return t == ExplanationType::ConditionEvidence || t == ExplanationType::IntentionEvidence;
}

bool is_deviation(ExplanationType t) {
  switch (t) {
    case ExplanationType::StepNotSupported:
    case ExplanationType::StoppedPlanStep:
    case ExplanationType::RedundantStepRepeated:
    case ExplanationType::DuplicateStep:
    case ExplanationType::WrongPathSelection:
    case ExplanationType::StepTooEarly:
    case ExplanationType::StepTooLate:
    case ExplanationType::MissingAction: return true;
    default: return false;
  }
}

std::string_view to_string(IntentionStatus s) {
  switch (s) {
    case IntentionStatus::Achievement: return "intention-achievement";
    case IntentionStatus::ShouldMonitor: return "intention-should-monitor";
    case IntentionStatus::NotMonitored: return "intention-not-monitored";
  }
  return "?";
}

namespace {

struct SortKey {
  std::string_view plan;
  std::string_view concept_id;
};

// Data items carry no key of their own: they enter in chronological_less order, so seq ranks them.
SortKey sort_key(const TimePoint& p) {
  return std::visit(
      [](const auto& v) -> SortKey {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PlanLifecycleEvent>) {
          return {v.plan_id, {}};
        } else if constexpr (std::is_same_v<T, DataItemRef>) {
          return {};
        } else if constexpr (std::is_same_v<T, ComputedExplanation>) {
          return {v.plan_id, v.concept_id};
        } else {
          return {v.plan_id, {}};
        }
      },
      p.payload);
}

}  // namespace

bool point_less(const TimePoint& a, const TimePoint& b) {
  if (a.time != b.time) return a.time < b.time;
  if (a.payload.index() != b.payload.index()) return a.payload.index() < b.payload.index();
  const auto ka = sort_key(a);
  const auto kb = sort_key(b);
  if (ka.plan != kb.plan) return ka.plan < kb.plan;
  if (ka.concept_id != kb.concept_id) return ka.concept_id < kb.concept_id;
  return a.seq < b.seq;
}

TimeLine::TimeLine(PatientRecord record) : record_(std::move(record)) {
  record_.sort_items();
  points_.reserve(record_.items.size());
  for (std::size_t i = 0; i < record_.items.size(); ++i)
    points_.push_back(TimePoint{record_.items[i].valid_start, DataItemRef{i}, next_seq_++});
}

void TimeLine::insert(Timestamp time, PointPayload payload) {
  TimePoint p{time, std::move(payload), next_seq_++};
  auto it = std::upper_bound(points_.begin(), points_.end(), p, point_less);
  points_.insert(it, std::move(p));
}

void TimeLine::require_passes_before(Pass p) const {
  static constexpr Pass order[] = {Pass::TopDown, Pass::BottomUp, Pass::MissingActions};
  for (Pass q : order) {
    if (q == p) return;
    if (!pass_done(q)) throw std::logic_error("analysis passes must run in order");
  }
}

std::vector<PlanLifecycleEvent> TimeLine::lifecycle_events() const {
  std::vector<PlanLifecycleEvent> out;
  for (const auto& p : points_)
    if (const auto* e = std::get_if<PlanLifecycleEvent>(&p.payload)) out.push_back(*e);
  return out;
}

std::vector<PlanLifecycleEvent> TimeLine::lifecycle_events(std::string_view plan_id) const {
  std::vector<PlanLifecycleEvent> out;
  for (const auto& p : points_)
    if (const auto* e = std::get_if<PlanLifecycleEvent>(&p.payload); e && e->plan_id == plan_id) out.push_back(*e);
  return out;
}

std::vector<ComputedExplanation> TimeLine::explanations() const {
  std::vector<ComputedExplanation> out;
  for (const auto& p : points_)
    if (const auto* e = std::get_if<ComputedExplanation>(&p.payload)) out.push_back(*e);
  return out;
}

std::vector<IntentionAssessment> TimeLine::assessments() const {
  std::vector<IntentionAssessment> out;
  for (const auto& p : points_)
    if (const auto* a = std::get_if<IntentionAssessment>(&p.payload)) out.push_back(*a);
  return out;
}

void TimeLine::set_condition_track(const std::string& plan_id, ConditionRole role, std::vector<ScoredInterval> track) {
  condition_tracks_[{plan_id, role}] = std::move(track);
}

const std::vector<ScoredInterval>* TimeLine::condition_track(std::string_view plan_id, ConditionRole role) const {
  auto it = condition_tracks_.find({std::string(plan_id), role});
  return it == condition_tracks_.end() ? nullptr : &it->second;
}

void TimeLine::set_entry_track(const std::string& plan_id, std::vector<ScoredInterval> track) {
  entry_tracks_[plan_id] = std::move(track);
}

const std::vector<ScoredInterval>* TimeLine::entry_track(std::string_view plan_id) const {
  auto it = entry_tracks_.find(plan_id);
  return it == entry_tracks_.end() ? nullptr : &it->second;
}

const Activation* TimeLine::activation(std::string_view plan_id, std::size_t index) const {
  for (const auto& a : activations_)
    if (a.plan_id == plan_id && a.index == index) return &a;
  return nullptr;
}

}  // namespace critique
