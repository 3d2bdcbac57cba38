#include "critique/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <tuple>

#include "critique/knowledge_io.hpp"

namespace critique {

double EngineConfig::threshold_for(ConditionRole role) const {
  auto it = role_thresholds.find(role);
  return it == role_thresholds.end() ? acceptance_threshold : it->second;
}

std::vector<ScoredInterval> EngineConfig::evaluate(const ConstraintNode& expression, const KnowledgeLibrary& lib,
                                                   const PatientRecord& record, const std::string& label) const {
  if (evaluator) return evaluator(expression, lib, record, label);
  return evaluate_expression(expression, lib, record, label);
}

std::vector<ScoredInterval> accepted_spans(const std::vector<ScoredInterval>& track, double threshold) {
  std::vector<ScoredInterval> out;
  for (const auto& iv : track) {
    if (iv.membership < threshold) continue;
    if (!out.empty() && out.back().end == iv.start) {
      out.back().end = iv.end;
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

namespace {

constexpr ConditionRole kStopRoles[] = {ConditionRole::Abort, ConditionRole::Complete, ConditionRole::Suspend};

LifecycleEventType stop_event(ConditionRole role) {
  switch (role) {
    case ConditionRole::Abort: return LifecycleEventType::Stopped;
    case ConditionRole::Complete: return LifecycleEventType::Completed;
    default: return LifecycleEventType::Suspended;
  }
}

struct StopSpan {
  Timestamp start;
  Timestamp end;
  double membership;
  LifecycleEventType type;
  int priority;  // abort before complete before suspend at equal times
};

struct StopHit {
  Timestamp time;
  double membership;
  LifecycleEventType type;
};

/// First stop span that reaches past `from`, taking effect no earlier than `from`.
/// With `fresh_only`, spans must begin at or after `from`.
std::optional<StopHit> first_stop(const std::vector<StopSpan>& spans, Timestamp from, bool fresh_only) {
  std::optional<StopHit> best;
  int best_priority = 0;
  for (const auto& s : spans) {
    if (s.end <= from) continue;
    if (fresh_only && s.start < from) continue;
    const Timestamp at = std::max(s.start, from);
    if (!best || at < best->time || (at == best->time && s.priority < best_priority)) {
      best = StopHit{at, s.membership, s.type};
      best_priority = s.priority;
    }
  }
  return best;
}

double weighted_mean_over(const std::vector<ScoredInterval>& track, TimeWindow w, bool& covered) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& iv : track) {
    const Timestamp a = std::max(iv.start, w.start);
    const Timestamp b = std::min(iv.end, w.end);
    if (!(a < b)) continue;
    const double len = static_cast<double>((b - a).count());
    num += iv.membership * len;
    den += len;
  }
  covered = den > 0.0;
  return covered ? num / den : 0.0;
}

void assess_intentions(TimeLine& tl, const KnowledgeLibrary& lib, const EngineConfig& cfg, const PathPlan& plan,
                       const std::vector<Activation>& activations) {
  const auto& rec = tl.record();
  for (std::size_t i = 0; i < plan.intentions.size(); ++i) {
    const Intention& intent = plan.intentions[i];
    const ConstraintNode target =
        intent.mode == IntentionMode::Avoid ? ConstraintNode::negation(intent.target) : intent.target;
    const auto track = cfg.evaluate(target, lib, rec, plan.id + ":intention");
    const auto params = referenced_parameters(intent.target, lib);

    for (const auto& act : activations) {
      const TimeWindow window{act.earliest_start + intent.monitoring_delay, act.end};
      if (window.empty()) continue;
      IntentionAssessment base{plan.id, i, act.index, IntentionStatus::ShouldMonitor, window, std::nullopt,
                               act.membership};
      tl.insert(window.start, base);

      bool covered = false;
      const double score = weighted_mean_over(track, window, covered);
      if (covered) {
        auto a = base;
        a.status = IntentionStatus::Achievement;
        a.score = score;
        tl.insert(window.start, a);
      }

      std::vector<Timestamp> marks{window.start};
      for (const auto& item : rec.items) {
        if (item.valid_start < window.start || item.valid_start >= window.end) continue;
        if (std::find(params.begin(), params.end(), item.concept_id) != params.end()) marks.push_back(item.valid_start);
      }
      marks.push_back(window.end);
      std::sort(marks.begin(), marks.end());
      for (std::size_t k = 0; k + 1 < marks.size(); ++k) {
        if (marks[k + 1] - marks[k] <= intent.max_gap) continue;
        auto a = base;
        a.status = IntentionStatus::NotMonitored;
        a.interval = TimeWindow{marks[k], marks[k + 1]};
        tl.insert(marks[k], a);
      }
    }
  }
}

}  // namespace

void top_down_analysis(TimeLine& tl, const KnowledgeLibrary& lib, const EngineConfig& cfg) {
  if (tl.pass_done(Pass::TopDown)) return;
  const auto& rec = tl.record();
  const auto record_end = rec.last_time();

  for (const auto& plan : lib.path_plans()) {
    tl.add_known_plan(plan.id);
    for (ConditionRole role : kAllConditionRoles) {
      if (const auto* c = plan.condition(role))
        tl.set_condition_track(plan.id, role, cfg.evaluate(*c, lib, rec, plan.id + ":" + std::string(to_string(role))));
    }
    const auto entry = plan.entry_expression();
    if (!entry) continue;
    const auto entry_track = cfg.evaluate(*entry, lib, rec, plan.id + ":entry");
    tl.set_entry_track(plan.id, entry_track);
    if (!record_end) continue;

    const double entry_threshold =
        cfg.threshold_for(plan.condition(ConditionRole::Filter) ? ConditionRole::Filter : ConditionRole::Setup);
    const auto entry_spans = accepted_spans(entry_track, entry_threshold);

    std::optional<std::vector<ScoredInterval>> restart_spans;
    if (const auto* track = tl.condition_track(plan.id, ConditionRole::Restart))
      restart_spans = accepted_spans(*track, cfg.threshold_for(ConditionRole::Restart));

    std::vector<StopSpan> stops;
    int priority = 0;
    for (ConditionRole role : kStopRoles) {
      if (const auto* track = tl.condition_track(plan.id, role)) {
        for (const auto& s : accepted_spans(*track, cfg.threshold_for(role)))
          stops.push_back(StopSpan{s.start, s.end, s.membership, stop_event(role), priority});
      }
      ++priority;
    }

    std::vector<Activation> activations;
    std::optional<Timestamp> prev_stop;
    for (std::size_t index = 0;; ++index) {
      std::optional<std::pair<Timestamp, double>> start;
      if (!prev_stop) {
        if (!entry_spans.empty()) start = {entry_spans.front().start, entry_spans.front().membership};
      } else if (restart_spans) {
        for (const auto& r : *restart_spans) {
          if (r.start <= *prev_stop) continue;
          const double em = membership_at(entry_track, r.start).value_or(0.0);
          if (em < entry_threshold) continue;
          start = {r.start, std::min(r.membership, em)};
          break;
        }
      } else {
        for (const auto& s : entry_spans) {
          if (s.start > *prev_stop) {
            start = {s.start, s.membership};
            break;
          }
        }
      }
      if (!start) break;

      Activation act;
      act.plan_id = plan.id;
      act.index = index;
      act.earliest_start = start->first;
      act.latest_start = start->first + plan.max_start_delay;
      act.membership = start->second;

      auto stop = first_stop(stops, act.earliest_start, false);
      act.end = stop ? stop->time : std::max(*record_end, act.earliest_start);
      if (stop) act.stop = stop->type;

      tl.insert(act.earliest_start,
                PlanLifecycleEvent{plan.id, LifecycleEventType::EarliestStart, act.earliest_start, act.membership, index});
      if (act.latest_start <= act.end)
        tl.insert(act.latest_start,
                  PlanLifecycleEvent{plan.id, LifecycleEventType::LatestStart, act.latest_start, act.membership, index});

      // A suspension may be lifted by the restart condition (or re-entry) within the same activation.
      while (stop) {
        tl.insert(stop->time, PlanLifecycleEvent{plan.id, stop->type, stop->time, stop->membership, index});
        prev_stop = stop->time;
        if (stop->type != LifecycleEventType::Suspended) break;
        std::optional<std::pair<Timestamp, double>> resume;
        const auto& gate = restart_spans ? *restart_spans : entry_spans;
        for (const auto& g : gate) {
          if (g.start > stop->time) {
            resume = {g.start, g.membership};
            break;
          }
        }
        if (!resume) break;
        tl.insert(resume->first,
                  PlanLifecycleEvent{plan.id, LifecycleEventType::Restart, resume->first, resume->second, index});
        stop = first_stop(stops, resume->first, true);
        prev_stop = resume->first;
        if (!stop) prev_stop.reset();
      }

      tl.add_activation(act);
      activations.push_back(act);
      if (!prev_stop) break;
    }
    assess_intentions(tl, lib, cfg, plan, activations);
  }
  tl.mark_pass(Pass::TopDown);
}

std::string_view to_string(Applicability a) {
  switch (a) {
    case Applicability::NotYetApplicable: return "not-yet-applicable";
    case Applicability::Applicable: return "applicable";
    case Applicability::Suspended: return "suspended";
    case Applicability::Stopped: return "stopped";
    case Applicability::Completed: return "completed";
    case Applicability::Unknown: return "unknown";
  }
  return "?";
}

ApplicabilityStatus applicability_status(const TimeLine& tl, std::string_view plan_id, Timestamp time) {
  if (!tl.known_plans().count(plan_id)) throw std::out_of_range("unknown plan '" + std::string(plan_id) + "'");
  const auto events = tl.lifecycle_events(plan_id);
  const PlanLifecycleEvent* latest = nullptr;
  for (const auto& e : events) {
    if (e.time >= time) break;
    latest = &e;
  }
  ApplicabilityStatus st;
  if (!latest) {
    st.value = events.empty() ? Applicability::Unknown : Applicability::NotYetApplicable;
    return st;
  }
  switch (latest->type) {
    case LifecycleEventType::EarliestStart:
    case LifecycleEventType::LatestStart:
    case LifecycleEventType::Restart: st.value = Applicability::Applicable; break;
    case LifecycleEventType::Stopped: st.value = Applicability::Stopped; break;
    case LifecycleEventType::Completed: st.value = Applicability::Completed; break;
    case LifecycleEventType::Suspended: st.value = Applicability::Suspended; break;
  }
  st.membership = latest->membership;
  st.activation = latest->activation;
  if (const auto* act = tl.activation(plan_id, latest->activation)) {
    st.activation_start = act->earliest_start;
    // Applicability is carried by the activation's onset, not by a restart's own membership.
    if (st.value == Applicability::Applicable) st.membership = act->membership;
  }
  return st;
}

namespace {

TimingResult score_against(TimeWindow w, Timestamp t, Duration tolerance) {
  TimingResult r{ExplanationType::StepOnTime, 1.0, w};
  if (t >= w.start && t <= w.end) return r;
  const Duration dist = t < w.start ? w.start - t : t - w.end;
  r.label = t < w.start ? ExplanationType::StepTooEarly : ExplanationType::StepTooLate;
  r.score = tolerance.count() > 0
                ? std::clamp(1.0 - static_cast<double>(dist.count()) / static_cast<double>(tolerance.count()), 0.0, 1.0)
                : 0.0;
  return r;
}

Duration distance_to(TimeWindow w, Timestamp t) {
  if (t < w.start) return w.start - t;
  if (t > w.end) return t - w.end;
  return Duration{0};
}

}  // namespace

TimingResult classify_step_timing(const PlanStepSpec& step, Timestamp time, Timestamp plan_start,
                                  std::optional<Timestamp> previous_occurrence) {
  if (step.kind != StepKind::Periodic || !previous_occurrence || !step.period || step.period->count() <= 0)
    return score_against(TimeWindow{plan_start + step.earliest_offset, plan_start + step.latest_offset}, time,
                         step.timing_deviation);

  const Duration period = *step.period;
  const Duration width = step.latest_offset - step.earliest_offset;
  const Timestamp anchor = *previous_occurrence;
  auto window_n = [&](long long n) { return TimeWindow{anchor + n * period - width, anchor + n * period}; };

  // Nearest recurrence; ties go to the earlier window.
  long long n = std::max<long long>(1, (time - anchor) / period);
  if (n > 1 && distance_to(window_n(n - 1), time) <= distance_to(window_n(n), time)) --n;
  while (distance_to(window_n(n + 1), time) < distance_to(window_n(n), time)) ++n;
  return score_against(window_n(n), time, step.timing_deviation);
}

double reasonableness_score(double applicability, double specificity, std::optional<double> timing) {
  return timing ? (applicability + specificity + *timing) / 3.0 : (applicability + specificity) / 2.0;
}

double reasonableness_score(const ComputedExplanation& e) {
  return reasonableness_score(e.applicability, e.specificity, e.timing);
}

double specificity_score(const KnowledgeLibrary& lib, std::string_view concept_id) {
  const std::size_t k = lib.plan_count_for_concept(concept_id);
  return k == 0 ? 1.0 : 1.0 / static_cast<double>(k);
}

namespace {

ComputedExplanation make_explanation(std::optional<std::size_t> item, Timestamp time, const KnowledgeRole& role,
                                     std::string concept_id, ExplanationType type, double applicability,
                                     double specificity, std::optional<double> timing = std::nullopt,
                                     std::string note = {}) {
  ComputedExplanation e;
  e.item = item;
  e.time = time;
  e.plan_id = role.path_plan_id;
  e.role = role;
  e.concept_id = std::move(concept_id);
  e.type = type;
  e.timing = timing;
  e.applicability = applicability;
  e.specificity = specificity;
  e.reasonableness = reasonableness_score(e);
  e.note = std::move(note);
  return e;
}

double max_condition_membership(const TimeLine& tl, const std::string& plan_id, bool entry, Timestamp t) {
  double best = 0.0;
  for (ConditionRole role : kAllConditionRoles) {
    if (is_entry_role(role) != entry) continue;
    if (const auto* track = tl.condition_track(plan_id, role))
      best = std::max(best, membership_at(*track, t).value_or(0.0));
  }
  return best;
}

double entry_membership(const TimeLine& tl, std::string_view plan_id, Timestamp t) {
  const auto* track = tl.entry_track(plan_id);
  return track ? membership_at(*track, t).value_or(0.0) : 0.0;
}

/// A sibling path whose entry condition fits clearly better and which has no step for the concept.
std::optional<std::pair<std::string, double>> better_sibling(const TimeLine& tl, const KnowledgeLibrary& lib,
                                                             const PathPlan& plan, std::string_view concept_id,
                                                             Timestamp t, double margin) {
  const std::string parent = plan.parent_id();
  if (parent.empty()) return std::nullopt;
  const double own = entry_membership(tl, plan.id, t);
  std::optional<std::pair<std::string, double>> best;
  for (const auto& sib : lib.path_plans()) {
    if (sib.id == plan.id || sib.parent_id() != parent) continue;
    const double m = entry_membership(tl, sib.id, t);
    if (m + kScoreTolerance < own + margin) continue;
    const bool has_step = std::any_of(sib.body.begin(), sib.body.end(),
                                      [&](const PlanStepSpec& s) { return s.action_concept == concept_id; });
    if (has_step) continue;
    if (!best || m > best->second) best = {sib.id, m};
  }
  return best;
}

struct StepState {
  std::size_t activation = 0;
  bool seen = false;
  std::optional<Timestamp> anchor;
};

}  // namespace

void bottom_up_analysis(TimeLine& tl, const KnowledgeLibrary& lib, const EngineConfig& cfg) {
  if (tl.pass_done(Pass::BottomUp)) return;
  tl.require_passes_before(Pass::BottomUp);
  const auto& items = tl.record().items;

  std::map<std::pair<std::string, std::string>, StepState> steps;
  std::map<std::string, std::vector<Timestamp>, std::less<>> seen_times;
  std::map<std::string, double, std::less<>> last_dose;

  for (std::size_t idx = 0; idx < items.size(); ++idx) {
    const DataItem& item = items[idx];
    const Timestamp t = item.valid_start;
    const auto& roles = lib.roles_for_concept(item.concept_id);
    const double spec = specificity_score(lib, item.concept_id);
    const auto& prior = seen_times[item.concept_id];

    std::optional<double> prev_dose;
    if (auto it = last_dose.find(item.concept_id); it != last_dose.end()) prev_dose = it->second;
    const bool dose_increase = item.dose && prev_dose && *item.dose > *prev_dose;

    std::vector<ComputedExplanation> out;
    for (const auto& role : roles) {
      switch (role.kind) {
        case RoleKind::EntryCondition:
        case RoleKind::StopCondition: {
          const double m = max_condition_membership(tl, role.path_plan_id, role.kind == RoleKind::EntryCondition, t);
          out.push_back(make_explanation(idx, t, role, item.concept_id, ExplanationType::ConditionEvidence, m, spec));
          break;
        }
        case RoleKind::OutcomeIntention:
        case RoleKind::ProcessIntention: {
          const auto st = applicability_status(tl, role.path_plan_id, t);
          const double m = st.value == Applicability::Applicable ? st.membership : 0.0;
          out.push_back(make_explanation(idx, t, role, item.concept_id, ExplanationType::IntentionEvidence, m, spec));
          break;
        }
        case RoleKind::BodyStep: {
          const PathPlan* plan = lib.find_path_plan(role.path_plan_id);
          const PlanStepSpec* step = plan ? plan->step(role.step_id) : nullptr;
          if (!step) break;
          if (step->kind == StepKind::DrugIncrease && !dose_increase) break;

          const auto st = applicability_status(tl, plan->id, t);
          auto add = [&](ExplanationType type, double app, std::optional<double> timing = std::nullopt,
                         std::string note = {}) {
            out.push_back(make_explanation(idx, t, role, item.concept_id, type, app, spec, timing, std::move(note)));
          };

          if (st.value == Applicability::Stopped) {
            add(ExplanationType::StoppedPlanStep, st.membership);
            break;
          }
          if (st.value == Applicability::Suspended) {
            add(ExplanationType::StoppedPlanStep, st.membership, std::nullopt, "suspended");
            break;
          }
          if (st.value == Applicability::Completed) {
            add(ExplanationType::RedundantStepRepeated, st.membership);
            break;
          }
          if (auto sib = better_sibling(tl, lib, *plan, item.concept_id, t, cfg.wrong_path_margin)) {
            add(ExplanationType::WrongPathSelection, sib->second, std::nullopt, "better fit: " + sib->first);
            break;
          }
          if (st.value != Applicability::Applicable) {
            add(ExplanationType::StepNotSupported, 0.0, std::nullopt, std::string(to_string(st.value)));
            break;
          }

          auto& state = steps[{plan->id, step->id}];
          if (state.activation != st.activation) state = StepState{st.activation, false, std::nullopt};

          if (step->min_repeat_gap.count() > 0 &&
              std::any_of(prior.begin(), prior.end(), [&](Timestamp p) { return t - p < step->min_repeat_gap; })) {
            add(ExplanationType::DuplicateStep, st.membership);
            break;
          }

          const Timestamp es = *st.activation_start;
          switch (step->kind) {
            case StepKind::Once:
              if (state.seen) {
                add(ExplanationType::RedundantStepRepeated, st.membership);
              } else {
                const auto r = classify_step_timing(*step, t, es, std::nullopt);
                add(r.label, st.membership, r.score);
              }
              break;
            case StepKind::Periodic: {
              const auto r = classify_step_timing(*step, t, es, state.anchor);
              add(r.label, st.membership, r.score);
              state.anchor = t;
              break;
            }
            case StepKind::DrugAdministration:
              if (state.seen) {
                add(ExplanationType::StepOnTime, st.membership);
              } else {
                const auto r = classify_step_timing(*step, t, es, std::nullopt);
                add(r.label, st.membership, r.score);
              }
              break;
            case StepKind::DrugIncrease: add(ExplanationType::StepOnTime, st.membership); break;
          }
          state.seen = true;
          break;
        }
      }
    }

    if (out.empty())
      out.push_back(make_explanation(idx, t, KnowledgeRole{{}, RoleKind::BodyStep, {}}, item.concept_id,
                                     ExplanationType::StepNotSupported, 0.0, 1.0, std::nullopt, "no guideline role"));
    for (auto& e : out) tl.insert(t, std::move(e));

    seen_times[item.concept_id].push_back(t);
    if (item.dose) last_dose[item.concept_id] = *item.dose;
  }
  tl.mark_pass(Pass::BottomUp);
}

DrugIncreaseAssessment assess_missing_drug_increase(const TimeLine& tl, const PlanStepSpec& step,
                                                    Timestamp activation_start, Timestamp time,
                                                    const EngineConfig& cfg) {
  DrugIncreaseAssessment out;
  std::vector<TimeWindow> covered;
  for (const auto& item : tl.record().items) {
    if (item.concept_id != step.action_concept || item.valid_start > time) continue;
    if (item.dose) out.latest_dose = item.dose;
    const Timestamp end = item.valid_stop.value_or(item.valid_start + kOneDay);
    const TimeWindow w{std::max(item.valid_start, activation_start), std::min(end, time)};
    if (!w.empty()) covered.push_back(w);
  }

  if (!out.latest_dose) {
    out.note = "no dose data";
    return out;
  }
  if (step.max_dose && *out.latest_dose >= *step.max_dose) {
    out.decision = DrugIncreaseDecision::SuppressedMaxDose;
    out.note = "maximal dose reached";
    return out;
  }
  if (time > activation_start) {
    std::sort(covered.begin(), covered.end(), [](const TimeWindow& a, const TimeWindow& b) { return a.start < b.start; });
    Duration total{0};
    std::optional<TimeWindow> run;
    for (const auto& w : covered) {
      if (run && w.start <= run->end) {
        run->end = std::max(run->end, w.end);
        continue;
      }
      if (run) total += run->end - run->start;
      run = w;
    }
    if (run) total += run->end - run->start;
    out.coverage = static_cast<double>(total.count()) / static_cast<double>((time - activation_start).count());
    if (*out.coverage < cfg.compliance_threshold) {
      out.decision = DrugIncreaseDecision::SuppressedLowCompliance;
      out.note = "low medication compliance";
    }
  }
  return out;
}

void missing_actions_analysis(TimeLine& tl, const KnowledgeLibrary& lib, const EngineConfig& cfg) {
  if (tl.pass_done(Pass::MissingActions)) return;
  tl.require_passes_before(Pass::MissingActions);
  const auto& items = tl.record().items;

  std::vector<ComputedExplanation> found;
  for (const auto& ev : tl.lifecycle_events()) {
    if (ev.type != LifecycleEventType::LatestStart) continue;
    const Activation* act = tl.activation(ev.plan_id, ev.activation);
    const PathPlan* plan = lib.find_path_plan(ev.plan_id);
    if (!act || !plan || act->end < act->latest_start) continue;
    // Within an activation that was suspended, only the span before the suspension is audited.
    const Timestamp es = act->earliest_start;
    const Timestamp ls = act->latest_start;

    for (const auto& step : plan->body) {
      const KnowledgeRole role{plan->id, RoleKind::BodyStep, step.id};
      const double spec = specificity_score(lib, step.action_concept);
      auto missing = [&](Timestamp at, ExplanationType type = ExplanationType::MissingAction, std::string note = {}) {
        found.push_back(make_explanation(std::nullopt, at, role, step.action_concept, type, act->membership, spec,
                                         std::nullopt, std::move(note)));
      };

      std::vector<Timestamp> occurrences;
      std::optional<double> prev_dose;
      for (const auto& item : items) {
        if (item.concept_id != step.action_concept) continue;
        const bool increase = item.dose && prev_dose && *item.dose > *prev_dose;
        if (item.dose) prev_dose = item.dose;
        if (item.valid_start < es) continue;
        if (step.kind == StepKind::DrugIncrease && !increase) continue;
        occurrences.push_back(item.valid_start);
      }

      if (step.kind == StepKind::Periodic && step.period && step.period->count() > 0) {
        const Duration period = *step.period;
        Timestamp anchor = es;
        std::optional<Timestamp> last;
        Timestamp due = es + step.latest_offset;
        while (due <= act->end) {
          auto it = std::find_if(occurrences.begin(), occurrences.end(), [&](Timestamp o) {
            return o > anchor && (!last || o - *last >= step.min_repeat_gap);
          });
          if (it != occurrences.end() && *it <= due + step.timing_deviation) {
            anchor = *it;
            last = *it;
            due = *it + period;
            continue;
          }
          missing(due);
          anchor = due;
          due += period;
        }
        continue;
      }

      const Timestamp hi = std::min(std::max(ls, es + step.latest_offset + step.timing_deviation), act->end);
      const bool present =
          std::any_of(occurrences.begin(), occurrences.end(), [&](Timestamp o) { return o >= es && o <= hi; });
      if (present) continue;
      if (step.kind != StepKind::DrugIncrease) {
        missing(ls);
        continue;
      }
      const auto verdict = assess_missing_drug_increase(tl, step, es, ls, cfg);
      switch (verdict.decision) {
        case DrugIncreaseDecision::Emit: missing(ls, ExplanationType::MissingAction, verdict.note); break;
        case DrugIncreaseDecision::SuppressedMaxDose:
          missing(ls, ExplanationType::SuppressedMaxDose, verdict.note);
          break;
        case DrugIncreaseDecision::SuppressedLowCompliance:
          missing(ls, ExplanationType::SuppressedLowCompliance, verdict.note);
          break;
      }
    }
  }
  for (auto& e : found) {
    const Timestamp at = e.time;
    tl.insert(at, std::move(e));
  }
  tl.mark_pass(Pass::MissingActions);
}

namespace {

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string explanation_text(const ComputedExplanation& e) {
  std::string subject = e.role.step_id.empty() ? e.concept_id : e.role.step_id;
  std::string where = e.plan_id.empty() ? std::string("no guideline") : e.plan_id;
  std::string s;
  switch (e.type) {
    case ExplanationType::StepNotSupported: s = e.concept_id + " is not supported by an applicable plan"; break;
    case ExplanationType::StoppedPlanStep:
      s = subject + " performed while " + where + " was " + (e.note == "suspended" ? "suspended" : "stopped");
      break;
    case ExplanationType::RedundantStepRepeated: s = subject + " repeated after it was no longer needed in " + where; break;
    case ExplanationType::DuplicateStep: s = subject + " repeated too soon in " + where; break;
    case ExplanationType::WrongPathSelection: s = subject + " belongs to " + where + " but another path fits better"; break;
    case ExplanationType::StepTooEarly: s = subject + " in " + where + " was too early"; break;
    case ExplanationType::StepOnTime: s = subject + " in " + where + " was on time"; break;
    case ExplanationType::StepTooLate: s = subject + " in " + where + " was late"; break;
    case ExplanationType::MissingAction: s = subject + " expected by " + where + " was not performed"; break;
    case ExplanationType::ConditionEvidence: s = e.concept_id + " informs the conditions of " + where; break;
    case ExplanationType::IntentionEvidence: s = e.concept_id + " informs the intentions of " + where; break;
    case ExplanationType::SuppressedMaxDose:
      s = subject + " dose increase in " + where + " not expected: maximal dose reached";
      break;
    case ExplanationType::SuppressedLowCompliance:
      s = subject + " dose increase in " + where + " withheld: medication compliance was low";
      break;
  }
  const bool note_in_text = e.type == ExplanationType::StoppedPlanStep || e.type == ExplanationType::SuppressedMaxDose ||
                            e.type == ExplanationType::SuppressedLowCompliance;
  if (!e.note.empty() && !note_in_text) s += " (" + e.note + ")";
  return s;
}

Comment comment_from(const ComputedExplanation& e) {
  Comment c;
  c.type = std::string(to_string(e.type));
  c.time = e.time;
  c.plan_id = e.plan_id;
  c.role_kind = e.role.kind;
  c.step_id = e.role.step_id;
  c.concept_id = e.concept_id;
  c.item = e.item;
  c.scores.reasonableness = e.reasonableness;
  c.scores.applicability = e.applicability;
  c.scores.specificity = e.specificity;
  c.scores.timing = e.timing;
  c.text = explanation_text(e);
  return c;
}

Comment comment_from(const IntentionAssessment& a, const KnowledgeLibrary& lib) {
  Comment c;
  c.type = std::string(to_string(a.status));
  c.time = a.interval.start;
  c.end = a.interval.end;
  c.plan_id = a.plan_id;
  const PathPlan* plan = lib.find_path_plan(a.plan_id);
  const Intention* intent = plan && a.intention < plan->intentions.size() ? &plan->intentions[a.intention] : nullptr;
  c.role_kind = intent && intent->kind == IntentionKind::Process ? RoleKind::ProcessIntention
                                                                   : RoleKind::OutcomeIntention;
  const std::string target = intent ? to_string(intent->target) : std::string("?");
  const std::string mode = intent ? std::string(to_string(intent->mode)) : std::string("achieve");
  c.scores.applicability = a.membership;
  c.scores.reasonableness = a.score.value_or(a.membership);
  c.scores.membership = a.score;
  switch (a.status) {
    case IntentionStatus::Achievement:
      c.text = "intention to " + mode + " " + target + " in " + a.plan_id + " met to degree " + fmt3(*a.score);
      break;
    case IntentionStatus::ShouldMonitor:
      c.text = target + " should have been monitored for " + a.plan_id + " from " + format_timestamp(a.interval.start);
      break;
    case IntentionStatus::NotMonitored:
      c.text = target + " was not monitored for " + a.plan_id + " between " + format_timestamp(a.interval.start) +
               " and " + format_timestamp(a.interval.end);
      break;
  }
  return c;
}

bool better_explanation(const ComputedExplanation& a, const ComputedExplanation& b) {
  if (a.reasonableness != b.reasonableness) return a.reasonableness > b.reasonableness;
  if (a.applicability != b.applicability) return a.applicability > b.applicability;
  return std::tie(a.plan_id, a.role, a.type) < std::tie(b.plan_id, b.role, b.type);
}

}  // namespace

CritiqueReport summarize(const TimeLine& tl, const KnowledgeLibrary& lib, const EngineConfig& cfg,
                         std::string hash) {
  CritiqueReport report;
  report.patient_id = tl.patient_id();
  report.config.thresholds["acceptance"] = cfg.acceptance_threshold;
  for (const auto& [role, v] : cfg.role_thresholds) report.config.thresholds[std::string(to_string(role))] = v;
  report.config.thresholds["compliance"] = cfg.compliance_threshold;
  report.config.thresholds["wrong_path_margin"] = cfg.wrong_path_margin;
  report.config.library_hash = hash.empty() ? library_hash(lib) : std::move(hash);

  const auto all = tl.explanations();
  std::vector<std::vector<const ComputedExplanation*>> per_item(tl.record().items.size());
  for (const auto& e : all) {
    if (e.item) {
      per_item[*e.item].push_back(&e);
    } else {
      report.comments.push_back(comment_from(e));
    }
  }
  for (const auto& cands : per_item) {
    const ComputedExplanation* best = nullptr;
    // Critiques with some support win; bookkeeping only speaks when nothing else applies.
    for (const auto* e : cands)
      if (!is_bookkeeping(e->type) && e->applicability > 0.0 && (!best || better_explanation(*e, *best))) best = e;
    if (!best)
      for (const auto* e : cands)
        if (!best || better_explanation(*e, *best)) best = e;
    if (best) report.comments.push_back(comment_from(*best));
  }
  for (const auto& a : tl.assessments()) report.comments.push_back(comment_from(a, lib));

  std::stable_sort(report.comments.begin(), report.comments.end(), [](const Comment& a, const Comment& b) {
    return std::tie(a.time, a.plan_id, a.role_kind, a.step_id, a.type, a.concept_id, a.item) <
           std::tie(b.time, b.plan_id, b.role_kind, b.step_id, b.type, b.concept_id, b.item);
  });
  for (const auto& c : report.comments) ++report.statistics[c.type];

  if (cfg.debug) report.debug = DebugSection{tl.lifecycle_events(), all};
  return report;
}

CritiqueReport analyze_patient(PatientRecord record, const KnowledgeLibrary& lib, const EngineConfig& cfg,
                               std::string hash) {
  TimeLine tl(std::move(record));
  top_down_analysis(tl, lib, cfg);
  bottom_up_analysis(tl, lib, cfg);
  missing_actions_analysis(tl, lib, cfg);
  return summarize(tl, lib, cfg, std::move(hash));
}

}  // namespace critique
