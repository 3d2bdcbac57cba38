#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>

#include "critique/csv.hpp"
#include "critique/ingestion.hpp"
#include "critique/knowledge_io.hpp"
#include "critique/timeline.hpp"

using namespace critique;

namespace {

const std::filesystem::path kFixtures = CRITIQUE_FIXTURES_DIR;

const KnowledgeLibrary& library() {
  static const auto lib = load_knowledge_library(kFixtures / "diabetes_guideline.json");
  return lib;
}

const MappingTable& mapping() {
  static const auto m = load_mapping_table(kFixtures / "mapping.csv");
  return m;
}

IngestResult ingest(const std::string& rows) {
  std::istringstream in("patient_id,external_concept_id,value,unit,dose,valid_start,valid_stop\n" + rows);
  return ingest_patient_records(in, mapping(), library());
}

}  // namespace

TEST_CASE("csv splitting and escaping") {
  CHECK(csv::split_line("a,\"b,c\",\"d\"\"e\",") == std::vector<std::string>{"a", "b,c", "d\"e", ""});
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  for (const std::string s : {"x", "a,b", " lead", "q\"q"}) CHECK(csv::split_line(csv::escape(s)) == std::vector{s});
}

TEST_CASE("concept mapping") {
  CHECK(map_concept("LOINC:4548-4", mapping()) == "hba1c");
  const auto identity = MappingTable::identity(library());
  CHECK(map_concept("hba1c", identity) == "hba1c");
  CHECK_FALSE(map_concept("LOINC:0000-0", mapping()).has_value());
  CHECK_FALSE(identity.find("diabetes"));
}

TEST_CASE("unit conversion") {
  CHECK(std::get<double>(convert_units(86.0, MappingEntry{"x", "y", 1.0, 0.0})) == 86.0);
  CHECK(std::get<double>(convert_units(100.0, MappingEntry{"glu", "glucose", 0.0555, 0.0})) ==
        doctest::Approx(5.55).epsilon(1e-12));
  CHECK_THROWS_AS(MappingTable({MappingEntry{"x", "y", 0.0, 0.0}}), IngestError);
  std::istringstream zero("external_id,internal_concept_id,unit_factor,unit_offset\nA,hba1c,0,0\n");
  CHECK_THROWS_AS(read_mapping_table(zero), IngestError);
  CHECK(std::get<std::string>(convert_units(std::string("pos"), MappingEntry{"x", "y", 1.0, 0.0})) == "pos");
  CHECK_THROWS_AS(convert_units(std::string("pos"), MappingEntry{"x", "y", 2.0, 0.0}), IngestError);
}

TEST_CASE("affine conversion is invertible") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    double factor = u(rng);
    if (std::fabs(factor) < 1e-3) factor = 1.0;
    const MappingEntry e{"x", "y", factor, u(rng)};
    const double v = u(rng);
    const double back = invert_units(std::get<double>(convert_units(v, e)), e);
    CHECK(std::fabs(back - v) <= 1e-9 * std::max(1.0, std::fabs(v)));
  }
}

TEST_CASE("records are grouped per patient") {
  const auto r = ingest(
      "a,LOINC:4548-4,7.1,%,,2021-01-01,\n"
      "b,LOINC:4548-4,7.2,%,,2021-01-02,\n"
      "a,RX:metformin,1,tab,500,2021-01-03,2021-02-03\n"
      "b,LAB:creat_umol,88.4,umol/L,,2021-01-04,\n"
      "a,PROC:eye_exam,1,,,2021-01-05T10:00:00+01:00,\n"
      "b,RX:lithium,1,tab,300,2021-01-06,\n");
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].patient_id == "a");
  CHECK(r.records[0].items.size() == 3);
  CHECK(r.records[1].items.size() == 3);
  CHECK(r.report.lossless());
  const auto& creat = *r.records[1].items_of("creatinine").front();
  CHECK(std::get<double>(creat.value) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(creat.unit == "mg/dL");
  const auto& met = *r.records[0].items_of("metformin").front();
  CHECK(met.dose == 500.0);
  CHECK(met.valid_stop == parse_timestamp("2021-02-03"));
  CHECK(r.records[0].items_of("eye_exam").front()->valid_start == parse_timestamp("2021-01-05T09:00:00Z"));
}

TEST_CASE("unmapped and malformed rows are reported, never dropped silently") {
  const auto r = ingest(
      "a,LOINC:4548-4,7.1,%,,2021-01-01,\n"
      "a,LOINC:9999-9,1,%,,2021-01-01,\n"
      "a,LOINC:4548-4,high,%,,2021-01-01,\n"
      "a,LOINC:4548-4,7.0,%,,yesterday,\n"
      "a,RX:metformin,1,tab,500,2021-02-01,2021-01-01\n"
      ",LOINC:4548-4,7.1,%,,2021-01-01,\n"
      "a,LOINC:4548-4,7.1\n");
  CHECK(r.report.rows_in == 7);
  CHECK(r.report.items_out == 1);
  CHECK(r.report.unmapped.size() == 1);
  CHECK(r.report.unmapped[0].row == 3);
  CHECK(r.report.skipped.size() == 5);
  CHECK(r.report.lossless());
}

TEST_CASE("out-of-order rows come back sorted, ties by concept then source row") {
  std::vector<std::string> rows = {"p,LOINC:4548-4,7.0,%,,2021-03-01,\n", "p,RX:metformin,1,tab,500,2021-01-01,\n",
                                   "p,LOINC:4548-4,7.1,%,,2021-01-01,\n", "p,PROC:eye_exam,1,,,2021-02-01,\n",
                                   "p,LOINC:4548-4,7.2,%,,2021-01-01,\n", "p,LOINC:4548-4,7.3,%,,2021-02-01,\n"};
  std::mt19937 rng(1);
  for (int round = 0; round < 20; ++round) {
    std::shuffle(rows.begin(), rows.end(), rng);
    std::string all;
    for (const auto& r : rows) all += r;
    const auto rec = ingest(all).records.at(0);
    CHECK(std::is_sorted(rec.items.begin(), rec.items.end(), chronological_less));
    for (std::size_t i = 1; i < rec.items.size(); ++i) {
      const auto& a = rec.items[i - 1];
      const auto& b = rec.items[i];
      if (a.valid_start == b.valid_start && a.concept_id == b.concept_id) CHECK(a.source_row < b.source_row);
    }
  }
}

TEST_CASE("demographics attach to matching records") {
  auto r = ingest("a,LOINC:4548-4,7.1,%,,2021-01-01,\n");
  std::istringstream demo("patient_id,key,value\na,sex,F\nz,sex,M\n");
  CHECK(attach_demographics(demo, r.records) == 1);
  CHECK(r.records[0].demographics.at("sex") == "F");
}

TEST_CASE("timeline construction keeps one point per item") {
  CHECK(TimeLine(PatientRecord{}).points().empty());
  const auto rec = ingest(
                       "p,LOINC:4548-4,7.1,%,,2021-01-01,\n"
                       "p,RX:metformin,1,tab,500,2021-01-01,\n"
                       "p,LOINC:4548-4,7.1,%,,2021-01-01,\n"
                       "p,PROC:eye_exam,1,,,2020-12-01,\n")
                       .records.at(0);
  const TimeLine tl(rec);
  REQUIRE(tl.points().size() == rec.items.size());
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < tl.points().size(); ++i) {
    const auto idx = std::get<DataItemRef>(tl.points()[i].payload).index;
    CHECK(idx == i);
    seen.insert(idx);
    CHECK(tl.points()[i].time == rec.items[idx].valid_start);
  }
  CHECK(seen.size() == rec.items.size());
}
