#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "critique/engine.hpp"
#include "critique/ingestion.hpp"
#include "critique/knowledge_io.hpp"
#include "critique_tools/synth.hpp"

using namespace critique;

namespace {

const std::filesystem::path kFixtures = CRITIQUE_FIXTURES_DIR;

const KnowledgeLibrary& diabetes() {
  static const auto lib = load_knowledge_library(kFixtures / "diabetes_guideline.json");
  return lib;
}

Timestamp at(const char* s) { return parse_timestamp(s); }

DataItem item(const std::string& id, double v, Timestamp t, std::size_t row) {
  DataItem d;
  d.patient_id = "p";
  d.concept_id = id;
  d.value = v;
  d.valid_start = t;
  d.source_row = row;
  return d;
}

PatientRecord record(std::vector<DataItem> items) {
  PatientRecord r;
  r.patient_id = "p";
  r.items = std::move(items);
  r.sort_items();
  return r;
}

/// Monthly HbA1c values starting at `from`.
std::vector<DataItem> monthly_hba1c(Timestamp from, std::vector<double> values) {
  std::vector<DataItem> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    out.push_back(item("hba1c", values[i], from + days(30 * static_cast<std::int64_t>(i)), i + 1));
  return out;
}

TimeLine run_passes(PatientRecord rec, const KnowledgeLibrary& lib, const EngineConfig& cfg = {}) {
  TimeLine tl(std::move(rec));
  top_down_analysis(tl, lib, cfg);
  bottom_up_analysis(tl, lib, cfg);
  missing_actions_analysis(tl, lib, cfg);
  return tl;
}

std::vector<PlanLifecycleEvent> events_of(const TimeLine& tl, const std::string& plan, LifecycleEventType type) {
  std::vector<PlanLifecycleEvent> out;
  for (const auto& e : tl.lifecycle_events(plan))
    if (e.type == type) out.push_back(e);
  return out;
}

Concept primitive(std::string id, Duration after) {
  Concept c;
  c.id = std::move(id);
  c.persistence = PersistenceSpec{Duration{0}, after};
  return c;
}

/// Enrolment marker opens the plan for as long as the record runs; body steps are plain events.
KnowledgeLibrary enrolment_library(std::vector<PlanStepSpec> body, Duration max_start_delay = days(90)) {
  std::vector<Concept> concepts = {primitive("enrolled", days(4000)), primitive("hba1c", days(1)),
                                   primitive("a", days(1)), primitive("b", days(1)), primitive("visit", days(1))};
  GuidelinePlan plan;
  plan.id = "q";
  plan.conditions.push_back({ConditionRole::Filter, ConstraintNode::leaf("enrolled", CompareOp::GreaterEqual, 1, 0)});
  plan.body = std::move(body);
  plan.max_start_delay = max_start_delay;
  return KnowledgeLibrary(std::move(concepts), {plan});
}

PlanStepSpec quarterly_step() {
  PlanStepSpec s;
  s.id = "hba1c_test";
  s.action_concept = "hba1c";
  s.kind = StepKind::Periodic;
  s.earliest_offset = days(60);
  s.latest_offset = days(90);
  s.period = days(90);
  return s;
}

PlanStepSpec once_step(std::string id, std::string action) {
  PlanStepSpec s;
  s.id = std::move(id);
  s.action_concept = std::move(action);
  s.kind = StepKind::Once;
  s.earliest_offset = days(0);
  s.latest_offset = days(30);
  s.timing_deviation = days(10);
  return s;
}

std::size_t count_type(const std::vector<ComputedExplanation>& es, ExplanationType t) {
  return static_cast<std::size_t>(std::count_if(es.begin(), es.end(), [&](const auto& e) { return e.type == t; }));
}

const Comment* comment_for_item(const CritiqueReport& r, std::size_t index) {
  for (const auto& c : r.comments)
    if (c.item == index) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("accepted spans join abutting intervals and keep the onset membership") {
  const Timestamp t = at("2021-01-01");
  const std::vector<ScoredInterval> track = {
      {t, t + days(1), 0.6, "c"}, {t + days(1), t + days(2), 0.9, "c"}, {t + days(2), t + days(3), 0.3, "c"},
      {t + days(3), t + days(4), 0.7, "c"}, {t + days(5), t + days(6), 0.8, "c"}};
  const auto spans = accepted_spans(track, 0.5);
  REQUIRE(spans.size() == 3);
  CHECK(spans[0].end == t + days(2));
  CHECK(spans[0].membership == 0.6);
  CHECK(spans[1].start == t + days(3));
  CHECK(spans[2].start == t + days(5));
}

TEST_CASE("top-down: a year of HbA1c above 6.5 opens one activation") {
  const Timestamp start = at("2021-01-01");
  TimeLine tl(record(monthly_hba1c(start, {7.1, 7.3, 7.2, 7.4, 7.1, 7.2, 7.3, 7.4, 7.2, 7.1, 7.3, 7.2})));
  top_down_analysis(tl, diabetes(), EngineConfig{});
  const auto* entry = tl.entry_track("t2dm/lifestyle");
  REQUIRE(entry);
  CHECK(accepted_spans(*entry, 0.5).size() == 1);
  const auto es = events_of(tl, "t2dm/lifestyle", LifecycleEventType::EarliestStart);
  const auto ls = events_of(tl, "t2dm/lifestyle", LifecycleEventType::LatestStart);
  REQUIRE(es.size() == 1);
  REQUIRE(ls.size() == 1);
  CHECK(es[0].time == start);
  CHECK(ls[0].time == start + kDefaultMaxStartDelay);
  CHECK(tl.lifecycle_events("t2dm/metformin").empty());
  for (const auto& a : tl.activations()) CHECK(a.latest_start >= a.earliest_start);
}

TEST_CASE("top-down: no matching data leaves the timeline without lifecycle events") {
  TimeLine tl(record({item("lithium", 1.0, at("2021-01-01"), 1)}));
  top_down_analysis(tl, diabetes(), EngineConfig{});
  CHECK(tl.lifecycle_events().empty());
  CHECK(tl.assessments().empty());
  CHECK(tl.points().size() == 1);
}

TEST_CASE("top-down: reduced kidney function mid-record stops the plan") {
  auto items = monthly_hba1c(at("2021-01-01"), {7.1, 7.2, 7.3, 7.2, 7.1, 7.2, 7.3, 7.2});
  items.push_back(item("creatinine", 1.9, at("2021-04-15"), 100));
  TimeLine tl(record(items));
  top_down_analysis(tl, diabetes(), EngineConfig{});
  const auto stopped = events_of(tl, "t2dm/lifestyle", LifecycleEventType::Stopped);
  REQUIRE(stopped.size() == 1);
  CHECK(stopped[0].time == at("2021-04-15"));
}

TEST_CASE("applicability status follows lifecycle events") {
  auto items = monthly_hba1c(at("2021-01-01"), {7.1, 7.2, 7.3, 7.2});
  items.push_back(item("creatinine", 1.9, at("2021-03-15"), 100));
  TimeLine tl(record(items));
  top_down_analysis(tl, diabetes(), EngineConfig{});

  CHECK(applicability_status(tl, "t2dm/lifestyle", at("2020-12-01")).value == Applicability::NotYetApplicable);
  CHECK(applicability_status(tl, "t2dm/lifestyle", at("2021-01-01")).value == Applicability::NotYetApplicable);
  const auto active = applicability_status(tl, "t2dm/lifestyle", at("2021-02-01"));
  CHECK(active.value == Applicability::Applicable);
  CHECK(active.activation_start == at("2021-01-01"));
  CHECK(applicability_status(tl, "t2dm/lifestyle", at("2021-03-16")).value == Applicability::Stopped);
  CHECK(applicability_status(tl, "t2dm/metformin", at("2021-02-01")).value == Applicability::Unknown);
  CHECK_THROWS_AS(applicability_status(tl, "nosuch", at("2021-02-01")), std::out_of_range);

  SUBCASE("completion") {
    auto healed = monthly_hba1c(at("2021-01-01"), {7.1, 7.2, 5.0, 5.1});
    TimeLine t2(record(healed));
    top_down_analysis(t2, diabetes(), EngineConfig{});
    CHECK(applicability_status(t2, "t2dm/lifestyle", at("2021-03-15")).value == Applicability::Completed);
  }
}

TEST_CASE("applicability status has the prefix property") {
  auto items = monthly_hba1c(at("2021-01-01"), {7.1, 7.2, 7.3, 7.2, 7.4, 7.1});
  TimeLine base(record(items));
  top_down_analysis(base, diabetes(), EngineConfig{});
  TimeLine extended = base;
  const Timestamp cut = at("2021-03-10");
  extended.insert(cut, PlanLifecycleEvent{"t2dm/lifestyle", LifecycleEventType::Stopped, cut, 1.0, 0});
  extended.insert(cut + days(20), PlanLifecycleEvent{"t2dm/lifestyle", LifecycleEventType::Restart, cut + days(20), 1.0, 0});
  for (Timestamp t = at("2020-12-01"); t <= cut; t += days(3)) {
    const auto a = applicability_status(base, "t2dm/lifestyle", t);
    const auto b = applicability_status(extended, "t2dm/lifestyle", t);
    CHECK(a.value == b.value);
    CHECK(a.membership == b.membership);
  }
  CHECK(applicability_status(extended, "t2dm/lifestyle", cut + days(1)).value == Applicability::Stopped);
}

TEST_CASE("step timing") {
  const Timestamp start = at("2021-01-01");
  PlanStepSpec s = once_step("s", "a");
  s.earliest_offset = days(10);
  s.latest_offset = days(20);
  s.timing_deviation = days(10);

  const auto on_time = classify_step_timing(s, start + days(15), start, std::nullopt);
  CHECK(on_time.label == ExplanationType::StepOnTime);
  CHECK(on_time.score == 1.0);
  CHECK(on_time.window == TimeWindow{start + days(10), start + days(20)});

  const auto late = classify_step_timing(s, start + days(25), start, std::nullopt);
  CHECK(late.label == ExplanationType::StepTooLate);
  CHECK(late.score == doctest::Approx(0.5));

  const auto early = classify_step_timing(s, start - days(1), start, std::nullopt);
  CHECK(early.label == ExplanationType::StepTooEarly);
  CHECK(early.score == 0.0);

  SUBCASE("later periodic occurrences are measured from the previous one") {
    PlanStepSpec p = quarterly_step();
    p.timing_deviation = days(30);
    const Timestamp prev = start + days(85);
    CHECK(classify_step_timing(p, prev + days(80), start, prev).label == ExplanationType::StepOnTime);
    const auto r = classify_step_timing(p, prev + days(105), start, prev);
    CHECK(r.label == ExplanationType::StepTooLate);
    CHECK(r.score == doctest::Approx(0.5));
    CHECK(classify_step_timing(p, prev + days(45), start, prev).label == ExplanationType::StepTooEarly);
  }
}

TEST_CASE("bottom-up explanations") {
  SUBCASE("a screening HbA1c is explained by both screening and monitoring roles") {
    auto items = monthly_hba1c(at("2021-01-01"), {6.0, 7.2, 7.3, 7.1});
    const auto tl = run_passes(record(items), diabetes());
    std::set<RoleKind> kinds;
    for (const auto& e : tl.explanations())
      if (e.item == 0u) kinds.insert(e.role.kind);
    CHECK(kinds.count(RoleKind::EntryCondition));
    CHECK(kinds.count(RoleKind::BodyStep));
  }
  SUBCASE("unexplained data") {
    auto items = monthly_hba1c(at("2021-01-01"), {7.2, 7.3});
    items.push_back(item("lithium", 1.0, at("2021-01-20"), 50));
    const auto rec = record(items);
    const auto report = analyze_patient(rec, diabetes(), EngineConfig{});
    const auto idx = static_cast<std::size_t>(
        std::find_if(rec.items.begin(), rec.items.end(), [](const auto& d) { return d.concept_id == "lithium"; }) -
        rec.items.begin());
    const Comment* c = comment_for_item(report, idx);
    REQUIRE(c);
    CHECK(c->type == "step-not-supported");
  }
  SUBCASE("step after the plan stopped") {
    auto items = monthly_hba1c(at("2021-01-01"), {7.1, 7.2, 7.3, 7.2, 7.1, 7.2, 7.3});
    items.push_back(item("creatinine", 1.9, at("2021-04-10"), 100));
    const auto rec = record(items);
    const auto report = analyze_patient(rec, diabetes(), EngineConfig{});
    for (std::size_t i = 0; i < rec.items.size(); ++i) {
      if (rec.items[i].concept_id != "hba1c" || rec.items[i].valid_start <= at("2021-04-10")) continue;
      const Comment* c = comment_for_item(report, i);
      REQUIRE(c);
      CHECK(c->type == "stopped-plan-step");
    }
  }
  SUBCASE("repeat within the minimum gap") {
    const Timestamp t = at("2021-01-01");
    const auto rec = record({item("enrolled", 1, t, 1), item("a", 1, t + days(5), 2), item("a", 1, t + days(6), 3),
                             item("visit", 1, t + days(200), 4)});
    PlanStepSpec s = once_step("a_step", "a");
    s.min_repeat_gap = days(30);
    const auto lib = enrolment_library({s});
    const auto report = analyze_patient(rec, lib, EngineConfig{});
    REQUIRE(comment_for_item(report, 1));
    REQUIRE(comment_for_item(report, 2));
    CHECK(comment_for_item(report, 1)->type == "step-on-time");
    CHECK(comment_for_item(report, 2)->type == "duplicate-step");
  }
}

TEST_CASE("missing actions") {
  const Timestamp t = at("2021-01-01");
  SUBCASE("two steps, one performed") {
    const auto lib = enrolment_library({once_step("a_step", "a"), once_step("b_step", "b")}, days(30));
    const auto tl = run_passes(
        record({item("enrolled", 1, t, 1), item("a", 1, t + days(10), 2), item("visit", 1, t + days(90), 3)}), lib);
    const auto ex = tl.explanations();
    REQUIRE(count_type(ex, ExplanationType::MissingAction) == 1);
    for (const auto& e : ex)
      if (e.type == ExplanationType::MissingAction) {
        CHECK(e.role.step_id == "b_step");
        CHECK(e.time == t + days(30));
        CHECK_FALSE(e.item.has_value());
      }
  }
  SUBCASE("plan never entered") {
    const auto lib = enrolment_library({once_step("a_step", "a")});
    const auto tl = run_passes(record({item("visit", 1, t, 1), item("visit", 1, t + days(400), 2)}), lib);
    CHECK(count_type(tl.explanations(), ExplanationType::MissingAction) == 0);
  }
  SUBCASE("quarterly test over one year with two tests") {
    const auto lib = enrolment_library({quarterly_step()});
    const auto tl = run_passes(record({item("enrolled", 1, t, 1), item("hba1c", 7, t + days(80), 2),
                                       item("hba1c", 7, t + days(170), 3), item("visit", 1, t + days(365), 4)}),
                               lib);
    CHECK(count_type(tl.explanations(), ExplanationType::MissingAction) == 2);
  }
}

TEST_CASE("periodic missing actions agree with a window count") {
  // Each due time is one period after the previous occurrence, or after the previous due time
  // when that one was missed. Planted tests land inside the window just before their due time.
  const auto lib = enrolment_library({quarterly_step()});
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> span(100, 1100), coin(0, 2), offset(0, 30);
  const Timestamp t = at("2021-01-01");
  for (int round = 0; round < 200; ++round) {
    const int length = span(rng);
    std::vector<DataItem> items = {item("enrolled", 1, t, 1), item("visit", 1, t + days(length), 2)};
    std::size_t expected = 0, performed = 0;
    for (std::int64_t due = 90; due <= length;) {
      if (coin(rng) == 0) {
        ++expected;
        due += 90;
        continue;
      }
      const std::int64_t when = due - offset(rng);
      items.push_back(item("hba1c", 7, t + days(when), items.size() + 1));
      ++performed;
      due = when + 90;
    }
    const auto tl = run_passes(record(items), lib);
    const auto missing = count_type(tl.explanations(), ExplanationType::MissingAction);
    CHECK(missing == expected);
    const auto floor_count = static_cast<std::size_t>(length / 90);
    CHECK(missing >= (floor_count > performed ? floor_count - performed : 0));
  }
}

TEST_CASE("drug increase assessment") {
  const auto lib = load_knowledge_library(kFixtures / "titration_guideline.json");
  const auto mapping = load_mapping_table(kFixtures / "mapping.csv");
  const auto recs = ingest_patient_records(kFixtures / "titration_data.csv", mapping, lib).records;
  const PathPlan& plan = *lib.find_path_plan("titration");
  const PlanStepSpec& step = *plan.step("metformin_increase");
  const Timestamp es = at("2021-01-01");
  const Timestamp when = es + days(90);

  std::map<std::string, DrugIncreaseAssessment> by_patient;
  for (const auto& r : recs) {
    TimeLine tl(r);
    top_down_analysis(tl, lib, EngineConfig{});
    bottom_up_analysis(tl, lib, EngineConfig{});
    by_patient[r.patient_id] = assess_missing_drug_increase(tl, step, es, when, EngineConfig{});
  }
  CHECK(by_patient.at("p_maxdose").decision == DrugIncreaseDecision::SuppressedMaxDose);
  CHECK(by_patient.at("p_lowcomp").decision == DrugIncreaseDecision::SuppressedLowCompliance);
  CHECK(*by_patient.at("p_lowcomp").coverage == doctest::Approx(27.0 / 90.0));
  CHECK(by_patient.at("p_highcomp").decision == DrugIncreaseDecision::Emit);
  CHECK(*by_patient.at("p_highcomp").coverage == doctest::Approx(85.5 / 90.0));

  SUBCASE("no dose data") {
    auto rec = recs.front();
    for (auto& d : rec.items) d.dose.reset();
    TimeLine tl(rec);
    top_down_analysis(tl, lib, EngineConfig{});
    bottom_up_analysis(tl, lib, EngineConfig{});
    const auto a = assess_missing_drug_increase(tl, step, es, when, EngineConfig{});
    CHECK(a.decision == DrugIncreaseDecision::Emit);
    CHECK_FALSE(a.note.empty());
  }
}

TEST_CASE("reasonableness and specificity") {
  CHECK(reasonableness_score(1.0, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(reasonableness_score(1.0, 1.0 / 3.0, std::nullopt) == doctest::Approx(2.0 / 3.0));
  CHECK(reasonableness_score(0.0, 1.0, 0.0) == doctest::Approx(1.0 / 3.0));
  CHECK(specificity_score(diabetes(), "eye_exam") == 1.0);
  CHECK(specificity_score(diabetes(), "hba1c") == doctest::Approx(0.5));
  CHECK(specificity_score(diabetes(), "lithium") == 1.0);

  // Scaling every defined subscore by a common factor keeps the ranking.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const double a1 = u(rng), s1 = u(rng), t1 = u(rng), a2 = u(rng), s2 = u(rng), t2 = u(rng), k = u(rng) + 0.01;
    const bool before = reasonableness_score(a1, s1, t1) > reasonableness_score(a2, s2, t2);
    const bool after = reasonableness_score(k * a1, k * s1, k * t1) > reasonableness_score(k * a2, k * s2, k * t2);
    CHECK(before == after);
  }
}

TEST_CASE("summary picks the most reasonable explanation per item") {
  const auto lib = enrolment_library({once_step("a_step", "a")});
  TimeLine tl(record({item("a", 1, at("2021-01-01"), 1)}));
  auto make = [](double r, ExplanationType type, std::string plan) {
    ComputedExplanation e;
    e.item = 0;
    e.time = at("2021-01-01");
    e.plan_id = plan;
    e.role = KnowledgeRole{plan, RoleKind::BodyStep, "a_step"};
    e.concept_id = "a";
    e.type = type;
    e.applicability = 1.0;
    e.reasonableness = r;
    return e;
  };
  tl.insert(at("2021-01-01"), make(0.4, ExplanationType::StepTooLate, "x"));
  tl.insert(at("2021-01-01"), make(0.9, ExplanationType::StepOnTime, "y"));
  const auto report = summarize(tl, lib, EngineConfig{});
  REQUIRE(report.comments.size() == 1);
  CHECK(report.comments[0].type == "step-on-time");
  CHECK(report.comments[0].plan_id == "y");
  CHECK(report.statistics.at("step-on-time") == 1);
  CHECK(report.config.thresholds.at("acceptance") == 0.5);
  CHECK(report.config.library_hash == library_hash(lib));
}

TEST_CASE("intention comments") {
  const Timestamp start = at("2021-01-01");
  const auto report = analyze_patient(
      record(monthly_hba1c(start, {7.3, 7.3, 7.3, 7.3, 7.3, 7.3, 7.3, 7.3, 7.3, 7.3})), diabetes(), EngineConfig{});
  const Comment* monitor = nullptr;
  const Comment* achieved = nullptr;
  for (const auto& c : report.comments) {
    if (c.plan_id != "t2dm/lifestyle") continue;
    if (c.type == "intention-should-monitor") monitor = &c;
    if (c.type == "intention-achievement") achieved = &c;
  }
  REQUIRE(monitor);
  CHECK(monitor->time == at("2021-04-01"));
  REQUIRE(achieved);
  REQUIRE(achieved->scores.membership.has_value());
  CHECK(*achieved->scores.membership == doctest::Approx(0.7));
}

TEST_CASE("pass ordering and idempotence") {
  TimeLine early(record(monthly_hba1c(at("2021-01-01"), {7.2})));
  CHECK_THROWS_AS(bottom_up_analysis(early, diabetes(), EngineConfig{}), std::logic_error);
  CHECK_THROWS_AS(missing_actions_analysis(early, diabetes(), EngineConfig{}), std::logic_error);

  auto tl = run_passes(record(monthly_hba1c(at("2021-01-01"), {7.2, 7.3, 7.1, 7.2, 7.4, 7.3, 7.2})), diabetes());
  const auto n = tl.points().size();
  top_down_analysis(tl, diabetes(), EngineConfig{});
  bottom_up_analysis(tl, diabetes(), EngineConfig{});
  missing_actions_analysis(tl, diabetes(), EngineConfig{});
  CHECK(tl.points().size() == n);
}

TEST_CASE("comment count invariant on synthetic cohorts") {
  ScenarioSpec spec;
  spec.id = "inv";
  spec.plan = "t2dm/metformin";
  spec.patients = 4;
  spec.duration_days = 900;
  spec.start = at("2020-01-01");
  spec.deviations = {{"missing-action", 1, ""}, {"step-too-late", 1, ""}, {"step-not-supported", 1, ""},
                     {"wrong-path-selection", 1, ""}, {"stopped-plan-step", 1, ""}};
  for (auto& rec : cohort_records(generate_synthetic_cohort(diabetes(), spec, 77))) {
    const auto tl = run_passes(rec, diabetes());
    const auto ex = tl.explanations();
    std::vector<std::size_t> per_item(rec.items.size(), 0);
    std::size_t item_less = 0;
    for (const auto& e : ex) {
      if (e.item) ++per_item[*e.item];
      else ++item_less;
    }
    for (auto n : per_item) CHECK(n >= 1);
    const auto report = summarize(tl, diabetes(), EngineConfig{});
    CHECK(report.comments.size() == rec.items.size() + item_less + tl.assessments().size());
    std::size_t total = 0;
    for (const auto& [_, n] : report.statistics) total += n;
    CHECK(total == report.comments.size());
    CHECK(std::is_sorted(report.comments.begin(), report.comments.end(),
                         [](const Comment& a, const Comment& b) { return a.time < b.time; }));
  }
}

TEST_CASE("timeline ordering") {
  TimeLine tl(record(monthly_hba1c(at("2021-01-01"), {7.2, 7.3})));
  const Timestamp t = at("2021-01-01");
  tl.insert(t, PlanLifecycleEvent{"b", LifecycleEventType::EarliestStart, t, 1.0, 0});
  tl.insert(t, PlanLifecycleEvent{"a", LifecycleEventType::EarliestStart, t, 1.0, 0});
  tl.insert(t - days(1), PlanLifecycleEvent{"c", LifecycleEventType::Stopped, t - days(1), 1.0, 0});
  const auto& pts = tl.points();
  for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i - 1].time <= pts[i].time);
  const auto events = tl.lifecycle_events();
  REQUIRE(events.size() == 3);
  CHECK(events[0].plan_id == "c");
  CHECK(events[1].plan_id == "a");
  CHECK(events[2].plan_id == "b");
}
