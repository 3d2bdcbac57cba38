#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "critique/engine.hpp"
#include "critique/ingestion.hpp"
#include "critique/knowledge_io.hpp"
#include "critique_tools/synth.hpp"
#include "support/roundtrip.hpp"

using namespace critique;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CRITIQUE_FIXTURES_DIR;

const KnowledgeLibrary& diabetes() {
  static const auto lib = load_knowledge_library(kFixtures / "diabetes_guideline.json");
  return lib;
}

ScenarioSpec spec_for(std::string plan, std::vector<DeviationSpec> devs) {
  ScenarioSpec s;
  s.id = "t";
  s.plan = std::move(plan);
  s.patients = 3;
  s.duration_days = 1095;
  s.start = parse_timestamp("2020-01-01");
  s.deviations = std::move(devs);
  return s;
}

}  // namespace

TEST_CASE("scenario parsing") {
  const auto s = load_scenario(kFixtures / "scenarios" / "lifestyle_baseline.json");
  CHECK(s.plan == "t2dm/lifestyle");
  CHECK(s.patients == 3);
  CHECK(s.duration_days == 730);
  CHECK(s.deviations.empty());
  CHECK_THROWS_AS(parse_scenario(R"({"id":"x","plan":"p","deviations":[{"type":"step-on-time"}]})"), SynthesisError);
  CHECK_THROWS_AS(parse_scenario(R"({"id":"x","plan":"p","duration_days":0})"), SynthesisError);
  CHECK_THROWS_AS(parse_scenario("not json"), SynthesisError);
}

TEST_CASE("expression solving stays clear of the ramps") {
  const auto& lib = diabetes();
  const auto entry = lib.find_path_plan("t2dm/metformin")->entry_expression();
  const auto values = solve_expression(*entry, lib);
  PatientRecord rec;
  rec.patient_id = "p";
  DataItem d;
  d.patient_id = "p";
  d.concept_id = "hba1c";
  d.value = values.at("hba1c");
  d.valid_start = parse_timestamp("2020-01-01");
  rec.items = {d};
  const auto r = evaluate_expression(*entry, lib, rec, "entry");
  REQUIRE(r.size() == 1);
  CHECK(r[0].membership == 1.0);

  const auto conflict = ConstraintNode::all_of({ConstraintNode::leaf("hba1c", CompareOp::Greater, 9, 0.5),
                                                ConstraintNode::leaf("hba1c", CompareOp::Less, 7, 0.5)});
  CHECK_THROWS_AS(solve_expression(conflict, lib), SynthesisError);
}

TEST_CASE("generation is deterministic per seed") {
  const auto spec = spec_for("t2dm/lifestyle", {{"missing-action", 1, ""}, {"duplicate-step", 1, ""}});
  const auto a = generate_synthetic_cohort(diabetes(), spec, 9);
  const auto b = generate_synthetic_cohort(diabetes(), spec, 9);
  const auto c = generate_synthetic_cohort(diabetes(), spec, 10);
  REQUIRE(a.patients.size() == 3);
  for (std::size_t i = 0; i < a.patients.size(); ++i) {
    CHECK(a.patients[i].items == b.patients[i].items);
    CHECK(a.patients[i].planted == b.patients[i].planted);
  }
  CHECK(a.patients[0].items != c.patients[0].items);
}

TEST_CASE("unrealizable specs are rejected") {
  CHECK_THROWS_AS(generate_synthetic_cohort(diabetes(), spec_for("nosuch", {}), 1), SynthesisError);
  CHECK_THROWS_AS(generate_synthetic_cohort(
                      diabetes(), spec_for("t2dm/lifestyle", {{"stopped-plan-step", 1, ""}, {"redundant-step-repeated", 1, ""}}), 1),
                  SynthesisError);
  auto short_spec = spec_for("t2dm/lifestyle", {{"step-too-late", 6, ""}});
  short_spec.duration_days = 200;
  CHECK_THROWS_AS(generate_synthetic_cohort(diabetes(), short_spec, 1), SynthesisError);
  CHECK_THROWS_AS(generate_synthetic_cohort(diabetes(), spec_for("t2dm/lifestyle", {{"missing-action", 1, "nosuch"}}), 1),
                  SynthesisError);
}

TEST_CASE("each deviation type round-trips on its own") {
  for (const auto& type : roundtrip::deviation_types()) {
    for (const char* plan : {"t2dm/lifestyle", "t2dm/metformin"}) {
      const auto cohort = generate_synthetic_cohort(diabetes(), spec_for(plan, {{type, 1, ""}}), 31);
      for (const auto& p : cohort.patients) {
        PatientRecord rec;
        rec.patient_id = p.patient_id;
        rec.items = p.items;
        rec.sort_items();
        const auto report = analyze_patient(rec, diabetes(), EngineConfig{});
        const auto m = roundtrip::match(p.planted, report.comments);
        CHECK_MESSAGE(m.planted == 1, type << " " << plan);
        CHECK_MESSAGE(m.detected == m.planted, type << " " << plan);
        CHECK_MESSAGE(m.spurious.empty(), type << " " << plan);
      }
    }
  }
}

TEST_CASE("written cohorts ingest back to the same records") {
  const auto spec = spec_for("t2dm/metformin", {{"step-not-supported", 1, ""}, {"missing-action", 1, ""}});
  const auto cohort = generate_synthetic_cohort(diabetes(), spec, 4);
  const fs::path dir = fs::temp_directory_path() / "critique_synth_test";
  fs::remove_all(dir);
  write_cohort(cohort, diabetes(), dir);
  const auto mapping = load_mapping_table(dir / "mapping.csv");
  const auto ingested = ingest_patient_records(dir / "data.csv", mapping, diabetes());
  CHECK(ingested.report.skipped.empty());
  CHECK(ingested.report.unmapped.empty());
  const auto records = cohort_records(cohort);
  REQUIRE(ingested.records.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    REQUIRE(ingested.records[i].items.size() == records[i].items.size());
    for (std::size_t k = 0; k < records[i].items.size(); ++k) {
      CHECK(ingested.records[i].items[k].concept_id == records[i].items[k].concept_id);
      CHECK(ingested.records[i].items[k].valid_start == records[i].items[k].valid_start);
    }
  }
  const auto manifest = read_manifest(dir / "manifest.json");
  for (const auto& p : cohort.patients) CHECK(manifest.at(p.patient_id) == p.planted);
  fs::remove_all(dir);
}
