#include "critique_tools/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <system_error>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "critique/csv.hpp"
#include "critique/reasoner.hpp"
#include "json.hpp"

namespace critique {

using nlohmann::json;

namespace {

const std::set<std::string, std::less<>> kPlantable = {
    "missing-action", "step-too-late",     "step-too-early",     "duplicate-step",
    "redundant-step-repeated", "stopped-plan-step", "step-not-supported", "wrong-path-selection"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::filesystem::filesystem_error("cannot open scenario", path,
                                            std::make_error_code(std::errc::no_such_file_or_directory));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ScenarioSpec parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SynthesisError(std::string("scenario: ") + e.what());
  }
  try {
    ScenarioSpec s;
    s.id = j.at("id").get<std::string>();
    s.plan = j.at("plan").get<std::string>();
    s.patients = j.value("patients", std::size_t{1});
    s.duration_days = j.value("duration_days", std::int64_t{1825});
    s.start = parse_timestamp(j.value("start", std::string("2020-01-01")));
    for (const auto& d : j.value("deviations", json::array())) {
      DeviationSpec dev;
      dev.type = d.at("type").get<std::string>();
      dev.count = d.value("count", std::size_t{1});
      dev.step = d.value("step", std::string{});
      if (!kPlantable.count(dev.type)) throw SynthesisError("scenario: cannot plant '" + dev.type + "'");
      s.deviations.push_back(std::move(dev));
    }
    if (s.duration_days <= 0) throw SynthesisError("scenario: duration_days must be positive");
    return s;
  } catch (const json::exception& e) {
    throw SynthesisError(std::string("scenario: ") + e.what());
  } catch (const TimeFormatError& e) {
    throw SynthesisError(std::string("scenario: ") + e.what());
  }
}

ScenarioSpec load_scenario(const std::filesystem::path& path) { return parse_scenario(read_file(path)); }

namespace {

struct Bounds {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double dev = 0.0;
  std::optional<Value> exact;
};

void collect_bounds(const ConstraintNode& n, std::map<std::string, Bounds>& out) {
  using K = ConstraintNode::Kind;
  switch (n.kind) {
    case K::Leaf: {
      auto& b = out[n.cmp.parameter];
      b.dev = std::max(b.dev, n.cmp.deviation);
      if (const auto* s = std::get_if<std::string>(&n.cmp.threshold)) {
        if (n.cmp.op == CompareOp::Equal) b.exact = *s;
        break;
      }
      const double t = std::get<double>(n.cmp.threshold);
      switch (n.cmp.op) {
        case CompareOp::Greater:
        case CompareOp::GreaterEqual: b.lo = std::max(b.lo, t); break;
        case CompareOp::Less:
        case CompareOp::LessEqual: b.hi = std::min(b.hi, t); break;
        case CompareOp::Equal: b.exact = t; break;
        case CompareOp::NotEqual: break;
      }
      break;
    }
    case K::And:
      for (const auto& c : n.children) collect_bounds(c, out);
      break;
    case K::Or:
      // One satisfied disjunct is enough.
      if (!n.children.empty()) collect_bounds(n.children.front(), out);
      break;
    default: break;
  }
}

}  // namespace

std::map<std::string, Value> solve_expression(const ConstraintNode& expression, const KnowledgeLibrary& lib) {
  std::map<std::string, Bounds> bounds;
  collect_bounds(eliminate_negations(resolve_references(expression, lib)), bounds);
  std::map<std::string, Value> out;
  for (const auto& [param, b] : bounds) {
    if (b.exact) {
      out[param] = *b.exact;
      continue;
    }
    if (b.lo > b.hi) throw SynthesisError("constraints on '" + param + "' cannot be satisfied together");
    const bool has_lo = std::isfinite(b.lo);
    const bool has_hi = std::isfinite(b.hi);
    if (has_lo && has_hi) {
      out[param] = (b.lo + b.hi) / 2.0;
    } else if (has_lo) {
      out[param] = b.lo + std::max(2.0 * b.dev, 0.1 * std::abs(b.lo));
    } else if (has_hi) {
      out[param] = b.hi - std::max(2.0 * b.dev, 0.1 * std::abs(b.hi));
    } else {
      out[param] = 0.0;
    }
  }
  return out;
}

namespace {

using Rng = std::mt19937_64;

std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

Timestamp floor_day(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

struct Scenario {
  const KnowledgeLibrary& lib;
  const PathPlan& plan;
  const ScenarioSpec& spec;
  std::map<std::string, Value> base;
  std::map<std::string, Value> abort_values;
  std::map<std::string, Value> complete_values;
  const PlanStepSpec* periodic = nullptr;
  std::string roleless_concept;
  std::optional<std::pair<const PathPlan*, const PlanStepSpec*>> sibling_step;
};

DataItem make_item(const Scenario& sc, const std::string& patient, const std::string& concept_id, Value value,
                   Timestamp at) {
  DataItem item;
  item.patient_id = patient;
  item.concept_id = concept_id;
  const Concept& c = sc.lib.concept_at(concept_id);
  item.kind = c.kind;
  item.unit = c.unit;
  item.value = std::move(value);
  item.valid_start = at;
  return item;
}

std::size_t count_of(const ScenarioSpec& spec, std::string_view type) {
  std::size_t n = 0;
  for (const auto& d : spec.deviations)
    if (d.type == type) n += d.count;
  return n;
}

const PlanStepSpec* step_named(const PathPlan& plan, const std::string& id) {
  const PlanStepSpec* s = plan.step(id);
  if (!s) throw SynthesisError("plan '" + plan.id + "' has no step '" + id + "'");
  return s;
}

enum class Mark { None, Omit, Late, Early, Duplicate };

SyntheticPatient generate_patient(const Scenario& sc, const std::string& patient_id, Rng& rng) {
  const auto& plan = sc.plan;
  const auto& spec = sc.spec;
  SyntheticPatient p;
  p.patient_id = patient_id;
  const Timestamp es = floor_day(spec.start) + days(uniform(rng, 0, 30));
  const Timestamp horizon = floor_day(spec.start) + days(spec.duration_days);
  p.earliest_start = es;

  std::vector<DataItem> items;
  auto add = [&](const std::string& concept_id, Value v, Timestamp at) {
    items.push_back(make_item(sc, patient_id, concept_id, std::move(v), at));
    return items.size() - 1;
  };
  auto plant = [&](std::string type, const std::string& plan_id, const std::string& step_id,
                   const std::string& concept_id, Timestamp at) {
    p.planted.push_back(PlantedDeviation{std::move(type), plan_id, step_id, concept_id, at});
  };

  // Diagnosing measurements open the plan.
  for (const auto& [param, v] : sc.base) add(param, v, es);

  // Periodic schedule: jitter keeps every occurrence inside its window.
  std::vector<Timestamp> times;
  std::vector<Mark> marks;
  std::size_t redundant = count_of(spec, "redundant-step-repeated");
  std::size_t stopped = count_of(spec, "stopped-plan-step");
  if (redundant && stopped) throw SynthesisError("a patient cannot both complete and abort the plan");

  std::size_t periodic_missing = 0;
  std::optional<const PlanStepSpec*> once_missing;
  for (const auto& d : spec.deviations) {
    if (d.type != "missing-action") continue;
    const PlanStepSpec* s = d.step.empty() ? sc.periodic : step_named(plan, d.step);
    if (!s) throw SynthesisError("missing-action needs a periodic step or an explicit step");
    if (s->kind == StepKind::Periodic) {
      periodic_missing += d.count;
    } else {
      if (d.count != 1) throw SynthesisError("a non-periodic step can be missing at most once");
      once_missing = s;
    }
  }
  const std::size_t late = count_of(spec, "step-too-late");
  const std::size_t early = count_of(spec, "step-too-early");
  const std::size_t duplicate = count_of(spec, "duplicate-step");
  const bool needs_periodic = periodic_missing + late + early + duplicate + redundant + stopped > 0;
  if (needs_periodic && !sc.periodic) throw SynthesisError("scenario needs a periodic step in '" + plan.id + "'");

  Timestamp activation_end = horizon;
  if (sc.periodic) {
    const auto& s = *sc.periodic;
    const Duration period = *s.period;
    const std::int64_t half_width = (s.latest_offset - s.earliest_offset).count() / 86400 / 2;
    std::vector<std::int64_t> jitter;
    {
      Timestamp t = es + s.latest_offset - days(uniform(rng, 0, half_width));
      while (t <= horizon) {
        jitter.push_back(uniform(rng, 0, half_width));
        times.push_back(t);
        t = t + period - days(jitter.back());
      }
    }
    const std::size_t k_count = times.size();
    marks.assign(k_count, Mark::None);

    // Indices 0-based; index 0 is the first monitoring occurrence.
    const std::size_t tail = redundant + stopped;
    const std::size_t interior = periodic_missing + late + early + duplicate;
    if (k_count < tail + 2) throw SynthesisError("record too short for the planted deviations");
    const std::size_t last_free = k_count - 1 - tail - (tail ? 1 : 0);  // keep one clean occurrence before the end
    std::vector<std::size_t> slots;
    for (std::size_t k = 1; k + 1 <= last_free; k += 2) slots.push_back(k);
    if (slots.size() < interior) throw SynthesisError("not enough periodic occurrences for the planted deviations");
    std::shuffle(slots.begin(), slots.end(), rng);
    slots.resize(interior);
    std::sort(slots.begin(), slots.end());
    std::vector<Mark> kinds;
    kinds.insert(kinds.end(), periodic_missing, Mark::Omit);
    kinds.insert(kinds.end(), late, Mark::Late);
    kinds.insert(kinds.end(), early, Mark::Early);
    kinds.insert(kinds.end(), duplicate, Mark::Duplicate);
    std::shuffle(kinds.begin(), kinds.end(), rng);
    for (std::size_t i = 0; i < slots.size(); ++i) marks[slots[i]] = kinds[i];

    // Recompute times so shifted occurrences move the rest of the schedule with them.
    const Duration width = s.latest_offset - s.earliest_offset;
    for (std::size_t k = 1; k < k_count; ++k) {
      switch (marks[k]) {
        case Mark::Late: times[k] = times[k - 1] + period + s.timing_deviation / 2; break;
        case Mark::Early: times[k] = times[k - 1] + period - width - s.timing_deviation / 2; break;
        default: times[k] = times[k - 1] + period - days(jitter[k - 1]); break;
      }
    }

    std::map<std::string, Value> state = sc.base;
    const std::size_t end_index = tail ? k_count - tail - 1 : k_count;  // occurrence that closes the activation
    for (std::size_t k = 0; k < k_count; ++k) {
      if (redundant && k == end_index) {
        state = sc.base;
        for (const auto& [param, v] : sc.complete_values) state[param] = v;
        activation_end = times[k];
        for (const auto& [param, v] : sc.complete_values)
          if (param != s.action_concept) add(param, v, times[k]);
      }
      const Value v = state.count(s.action_concept) ? state.at(s.action_concept) : Value{1.0};
      if (marks[k] == Mark::Omit) {
        plant("missing-action", plan.id, s.id, s.action_concept, times[k - 1] + period);
        continue;
      }
      add(s.action_concept, v, times[k]);
      if (marks[k] == Mark::Late) plant("step-too-late", plan.id, s.id, s.action_concept, times[k]);
      if (marks[k] == Mark::Early) plant("step-too-early", plan.id, s.id, s.action_concept, times[k]);
      if (marks[k] == Mark::Duplicate) {
        add(s.action_concept, v, times[k] + kOneDay);
        plant("duplicate-step", plan.id, s.id, s.action_concept, times[k] + kOneDay);
      }
      if (redundant && k > end_index) plant("redundant-step-repeated", plan.id, s.id, s.action_concept, times[k]);
      if (stopped && k == end_index) {
        const Timestamp at = times[k] + days(10);
        activation_end = at;
        for (const auto& [param, v2] : sc.abort_values) add(param, v2, at);
      }
      if (stopped && k > end_index) plant("stopped-plan-step", plan.id, s.id, s.action_concept, times[k]);
    }
  }
  const Timestamp record_end = times.empty() ? horizon : times.back();
  if (times.empty()) activation_end = horizon;

  // Non-periodic body steps.
  for (const auto& s : plan.body) {
    if (&s == sc.periodic) continue;
    if (once_missing && *once_missing == &s) {
      plant("missing-action", plan.id, s.id, s.action_concept, es + plan.max_start_delay);
      continue;
    }
    const std::int64_t lo = std::max<std::int64_t>(s.earliest_offset.count() / 86400, 1);
    const std::int64_t hi = std::max<std::int64_t>(s.latest_offset.count() / 86400, lo);
    const Timestamp first = es + days(uniform(rng, lo, hi));
    switch (s.kind) {
      case StepKind::Once: add(s.action_concept, 1.0, first); break;
      case StepKind::DrugAdministration:
        for (Timestamp t = first; t < activation_end && t < record_end; t += days(30)) {
          auto i = add(s.action_concept, 1.0, t);
          items[i].valid_stop = t + days(30);
          items[i].dose = 500.0;
        }
        break;
      case StepKind::Periodic:
      case StepKind::DrugIncrease: throw SynthesisError("cannot synthesize step '" + s.id + "'");
    }
  }

  const std::int64_t span_days = (record_end - es).count() / 86400;
  for (std::size_t i = 0; i < count_of(spec, "step-not-supported"); ++i) {
    if (sc.roleless_concept.empty()) throw SynthesisError("library has no concept without a guideline role");
    const Timestamp at = es + days(uniform(rng, 1, span_days - 1)) + hours(12);
    add(sc.roleless_concept, 1.0, at);
    plant("step-not-supported", "", "", sc.roleless_concept, at);
  }
  const std::size_t wrong = count_of(spec, "wrong-path-selection");
  if (wrong) {
    if (!sc.sibling_step) throw SynthesisError("no sibling path has a step exclusive to it");
    const auto [sib, step] = *sc.sibling_step;
    const std::int64_t active_days = (activation_end - es).count() / 86400;
    for (std::size_t i = 0; i < wrong; ++i) {
      const Timestamp at = es + days(uniform(rng, 1, active_days - 1)) + hours(12);
      add(step->action_concept, 1.0, at);
      plant("wrong-path-selection", sib->id, step->id, step->action_concept, at);
    }
  }

  for (std::size_t i = 0; i < items.size(); ++i) items[i].source_row = i;
  std::stable_sort(items.begin(), items.end(), chronological_less);
  p.items = std::move(items);
  std::sort(p.planted.begin(), p.planted.end(),
            [](const PlantedDeviation& a, const PlantedDeviation& b) { return a.time < b.time; });
  return p;
}

}  // namespace

SyntheticCohort generate_synthetic_cohort(const KnowledgeLibrary& lib, const ScenarioSpec& spec, std::uint64_t seed) {
  const PathPlan* plan = lib.find_path_plan(spec.plan);
  if (!plan) throw SynthesisError("unknown plan '" + spec.plan + "'");
  const auto entry = plan->entry_expression();
  if (!entry) throw SynthesisError("plan '" + spec.plan + "' has no entry condition");

  Scenario sc{lib, *plan, spec, solve_expression(*entry, lib), {}, {}, nullptr, {}, std::nullopt};
  if (const auto* c = plan->condition(ConditionRole::Abort)) sc.abort_values = solve_expression(*c, lib);
  if (const auto* c = plan->condition(ConditionRole::Complete)) sc.complete_values = solve_expression(*c, lib);
  if (count_of(spec, "stopped-plan-step") && sc.abort_values.empty())
    throw SynthesisError("plan '" + spec.plan + "' has no abort condition");
  if (count_of(spec, "redundant-step-repeated") && sc.complete_values.empty())
    throw SynthesisError("plan '" + spec.plan + "' has no complete condition");

  for (const auto& s : plan->body) {
    if (s.kind == StepKind::Periodic && s.period && s.period->count() > 0) {
      sc.periodic = &s;
      break;
    }
  }
  for (const auto& [id, c] : lib.concepts()) {
    if (c.kind != ConceptKind::Abstract && lib.roles_for_concept(id).empty()) {
      sc.roleless_concept = id;
      break;
    }
  }
  for (const auto& sib : lib.path_plans()) {
    if (sib.id == plan->id || sib.parent_id() != plan->parent_id() || plan->parent_id().empty()) continue;
    for (const auto& s : sib.body) {
      const auto& roles = lib.roles_for_concept(s.action_concept);
      const bool exclusive = std::all_of(roles.begin(), roles.end(), [&](const KnowledgeRole& r) {
        return r.path_plan_id == sib.id && r.kind == RoleKind::BodyStep;
      });
      if (exclusive && !sc.sibling_step) sc.sibling_step = {&sib, &s};
    }
  }

  SyntheticCohort cohort{spec, seed, {}};
  Rng rng(seed);
  for (std::size_t i = 0; i < spec.patients; ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "%s-%03zu", spec.id.c_str(), i + 1);
    cohort.patients.push_back(generate_patient(sc, id, rng));
  }
  return cohort;
}

std::vector<PatientRecord> cohort_records(const SyntheticCohort& cohort) {
  std::vector<PatientRecord> out;
  for (const auto& p : cohort.patients) {
    PatientRecord r;
    r.patient_id = p.patient_id;
    r.items = p.items;
    r.sort_items();
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SynthesisError("cannot write " + path.string());
  out << text;
}

const std::string kExternalPrefix = "SYN:";

}  // namespace

void write_cohort(const SyntheticCohort& cohort, const KnowledgeLibrary& lib, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::string data = "patient_id,external_concept_id,value,unit,dose,valid_start,valid_stop\n";
  for (const auto& p : cohort.patients) {
    for (const auto& item : p.items) {
      const std::string value = std::holds_alternative<double>(item.value) ? number(std::get<double>(item.value))
                                                                           : std::get<std::string>(item.value);
      data += csv::escape(p.patient_id) + "," + csv::escape(kExternalPrefix + item.concept_id) + "," +
              csv::escape(value) + "," + csv::escape(item.unit) + "," + (item.dose ? number(*item.dose) : "") + "," +
              format_timestamp(item.valid_start) + "," + (item.valid_stop ? format_timestamp(*item.valid_stop) : "") +
              "\n";
    }
  }
  write_text(dir / "data.csv", data);

  std::string mapping = "external_id,internal_concept_id,unit_factor,unit_offset\n";
  for (const auto& [id, c] : lib.concepts())
    if (c.kind != ConceptKind::Abstract) mapping += csv::escape(kExternalPrefix + id) + "," + csv::escape(id) + ",1,0\n";
  write_text(dir / "mapping.csv", mapping);

  nlohmann::ordered_json m;
  m["scenario"] = cohort.spec.id;
  m["plan"] = cohort.spec.plan;
  m["seed"] = cohort.seed;
  m["patients"] = nlohmann::ordered_json::array();
  for (const auto& p : cohort.patients) {
    nlohmann::ordered_json pj;
    pj["patient_id"] = p.patient_id;
    pj["earliest_start"] = format_timestamp(p.earliest_start);
    pj["deviations"] = nlohmann::ordered_json::array();
    for (const auto& d : p.planted)
      pj["deviations"].push_back({{"type", d.type},
                                  {"plan_id", d.plan_id},
                                  {"step_id", d.step_id},
                                  {"concept_id", d.concept_id},
                                  {"time", format_timestamp(d.time)}});
    m["patients"].push_back(std::move(pj));
  }
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::map<std::string, std::vector<PlantedDeviation>> read_manifest(const std::filesystem::path& path) {
  std::map<std::string, std::vector<PlantedDeviation>> out;
  try {
    const json m = json::parse(read_file(path));
    for (const auto& p : m.at("patients")) {
      auto& list = out[p.at("patient_id").get<std::string>()];
      for (const auto& d : p.at("deviations"))
        list.push_back(PlantedDeviation{d.at("type").get<std::string>(), d.at("plan_id").get<std::string>(),
                                        d.at("step_id").get<std::string>(), d.at("concept_id").get<std::string>(),
                                        parse_timestamp(d.at("time").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw SynthesisError(std::string("manifest: ") + e.what());
  }
  return out;
}

}  // namespace critique
