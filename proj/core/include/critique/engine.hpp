#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "critique/knowledge.hpp"
#include "critique/reasoner.hpp"
#include "critique/record.hpp"
#include "critique/timeline.hpp"

namespace critique {

/// Scores an expression over a record. The default is evaluate_expression; tests swap in a
/// crisp evaluator to check that fuzzy decisions reduce to boolean ones.
using ConditionEvaluator = std::function<std::vector<ScoredInterval>(
    const ConstraintNode& expression, const KnowledgeLibrary& lib, const PatientRecord& record, const std::string& label)>;

struct EngineConfig {
  double acceptance_threshold = 0.5;
  std::map<ConditionRole, double> role_thresholds;  // overrides acceptance_threshold per role
  double compliance_threshold = 0.8;
  double wrong_path_margin = 0.1;
  bool debug = false;
  ConditionEvaluator evaluator;  // empty means evaluate_expression

  double threshold_for(ConditionRole role) const;
  std::vector<ScoredInterval> evaluate(const ConstraintNode& expression, const KnowledgeLibrary& lib,
                                       const PatientRecord& record, const std::string& label) const;
};

/// Intervals with membership >= threshold, with abutting ones joined. The membership of
/// each result is that of its first constituent (the onset).
std::vector<ScoredInterval> accepted_spans(const std::vector<ScoredInterval>& track, double threshold);

/// Pass 1: evaluates every path plan's conditions and intentions and inserts lifecycle
/// events and intention assessments. Throws UnknownConceptError on library/record mismatch.
void top_down_analysis(TimeLine& timeline, const KnowledgeLibrary& lib, const EngineConfig& config);

enum class Applicability { NotYetApplicable, Applicable, Suspended, Stopped, Completed, Unknown };
std::string_view to_string(Applicability a);

struct ApplicabilityStatus {
  Applicability value = Applicability::Unknown;
  double membership = 0.0;
  std::optional<Timestamp> activation_start;
  std::size_t activation = 0;
};

/// Status implied by the latest lifecycle event strictly before `time`.
/// Throws std::out_of_range when the plan id is not known to the timeline.
ApplicabilityStatus applicability_status(const TimeLine& timeline, std::string_view plan_id, Timestamp time);

struct TimingResult {
  ExplanationType label = ExplanationType::StepOnTime;
  double score = 1.0;
  TimeWindow window;  // the expected window the occurrence was measured against

  bool operator==(const TimingResult&) const = default;
};

/// Once-like steps, and the first periodic occurrence, are due in
/// [plan_start + earliest, plan_start + latest]. Later periodic occurrences are due in
/// [anchor + nP - (latest - earliest), anchor + nP] for the n >= 1 nearest to `time`, where
/// anchor is the previous timed occurrence. Outside the window the score decays linearly
/// over timing_deviation.
TimingResult classify_step_timing(const PlanStepSpec& step, Timestamp time, Timestamp plan_start,
                                  std::optional<Timestamp> previous_occurrence);

/// Pass 2: one computed explanation per (data item, knowledge role).
void bottom_up_analysis(TimeLine& timeline, const KnowledgeLibrary& lib, const EngineConfig& config);

/// Pass 3: at each plan-latest-start, body steps without a matching occurrence become
/// missing actions. Periodic steps yield one per missed due time.
void missing_actions_analysis(TimeLine& timeline, const KnowledgeLibrary& lib, const EngineConfig& config);

enum class DrugIncreaseDecision { Emit, SuppressedMaxDose, SuppressedLowCompliance };

struct DrugIncreaseAssessment {
  DrugIncreaseDecision decision = DrugIncreaseDecision::Emit;
  std::optional<double> latest_dose;
  std::optional<double> coverage;
  std::string note;
};

/// Decides whether a missing dose increase at `time` should be reported. Coverage is the
/// union of the drug's administration intervals over [activation_start, time] divided by
/// the elapsed time.
DrugIncreaseAssessment assess_missing_drug_increase(const TimeLine& timeline, const PlanStepSpec& step,
                                                    Timestamp activation_start, Timestamp time,
                                                    const EngineConfig& config);

/// Mean of applicability, specificity and, when defined, timing.
double reasonableness_score(double applicability, double specificity, std::optional<double> timing);
double reasonableness_score(const ComputedExplanation& e);
/// 1/k where k is the number of path plans giving the concept any role; 1 when k is 0.
double specificity_score(const KnowledgeLibrary& lib, std::string_view concept_id);

struct CommentScores {
  double reasonableness = 0.0;
  double applicability = 0.0;
  std::optional<double> specificity;
  std::optional<double> timing;
  std::optional<double> membership;

  bool operator==(const CommentScores&) const = default;
};

struct Comment {
  std::string type;
  Timestamp time{};
  std::optional<Timestamp> end;  // interval comments
  std::string plan_id;
  RoleKind role_kind = RoleKind::BodyStep;
  std::string step_id;
  std::string concept_id;
  std::optional<std::size_t> item;
  CommentScores scores;
  std::string text;

  bool operator==(const Comment&) const = default;
};

struct ConfigEcho {
  std::map<std::string, double> thresholds;
  std::string library_hash;

  bool operator==(const ConfigEcho&) const = default;
};

struct DebugSection {
  std::vector<PlanLifecycleEvent> lifecycle_events;
  std::vector<ComputedExplanation> explanations;
};

struct CritiqueReport {
  std::string patient_id;
  ConfigEcho config;
  std::vector<Comment> comments;
  std::map<std::string, std::size_t> statistics;
  std::optional<DebugSection> debug;
};

/// Pass 4: one comment per data item (highest reasonableness), plus missing-action,
/// suppression and intention comments, sorted by (time, plan, role kind, step).
CritiqueReport summarize(const TimeLine& timeline, const KnowledgeLibrary& lib, const EngineConfig& config,
                         std::string library_hash = {});

/// All four passes on one patient.
CritiqueReport analyze_patient(PatientRecord record, const KnowledgeLibrary& lib, const EngineConfig& config,
                               std::string library_hash = {});

}  // namespace critique
