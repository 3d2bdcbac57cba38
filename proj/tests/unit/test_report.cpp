#include "doctest.h"

#include "critique/report.hpp"
#include "json.hpp"

using namespace critique;

namespace {

CritiqueReport sample() {
  CritiqueReport r;
  r.patient_id = "p1";
  r.config.thresholds = {{"acceptance", 0.5}, {"compliance", 0.8}};
  r.config.library_hash = "0123456789abcdef";
  Comment point;
  point.type = "step-too-late";
  point.time = parse_timestamp("2021-02-01");
  point.plan_id = "t2dm/lifestyle";
  point.step_id = "hba1c_test";
  point.concept_id = "hba1c";
  point.item = 3;
  point.scores = {0.75, 1.0, 0.5, 0.75, std::nullopt};
  point.text = "late";
  Comment span;
  span.type = "intention-achievement";
  span.time = parse_timestamp("2021-04-01");
  span.end = parse_timestamp("2021-07-01");
  span.plan_id = "t2dm/lifestyle";
  span.role_kind = RoleKind::OutcomeIntention;
  span.concept_id = "hba1c";
  span.scores.reasonableness = 0.7;
  span.scores.membership = 0.7;
  r.comments = {point, span};
  r.statistics = {{"intention-achievement", 1}, {"step-too-late", 1}};
  return r;
}

}  // namespace

TEST_CASE("json report layout") {
  const auto j = nlohmann::json::parse(emit_report(sample(), ReportFormat::Json));
  CHECK(j.at("patient_id") == "p1");
  CHECK(j.at("config_echo").at("library_hash") == "0123456789abcdef");
  CHECK(j.at("config_echo").at("thresholds").at("compliance") == 0.8);
  const auto& c = j.at("comments");
  REQUIRE(c.size() == 2);
  CHECK(c[0].at("time") == "2021-02-01T00:00:00Z");
  CHECK(c[0].at("step_id") == "hba1c_test");
  CHECK(c[0].at("scores").at("timing") == 0.75);
  CHECK_FALSE(c[0].at("scores").contains("membership"));
  CHECK(c[1].at("interval").at("end") == "2021-07-01T00:00:00Z");
  CHECK_FALSE(c[1].contains("time"));
  CHECK_FALSE(c[1].contains("step_id"));
  CHECK(j.at("statistics").at("step-too-late") == 1);
  CHECK_FALSE(j.contains("debug"));
}

TEST_CASE("debug section") {
  auto r = sample();
  r.debug = DebugSection{{PlanLifecycleEvent{"t2dm", LifecycleEventType::EarliestStart, parse_timestamp("2021-01-01"), 1.0, 0}},
                         {}};
  const auto j = nlohmann::json::parse(emit_report(r, ReportFormat::Json));
  REQUIRE(j.contains("debug"));
  CHECK(j.at("debug").at("lifecycle_events").size() == 1);
  CHECK(j.at("debug").at("all_explanations").empty());
}

TEST_CASE("text report") {
  const auto text = emit_report(sample(), ReportFormat::Text);
  CHECK(text.rfind("patient p1\n", 0) == 0);
  CHECK(text.find("step-too-late  [t2dm/lifestyle#hba1c_test]  r=0.750") != std::string::npos);
  CHECK(text.find("2021-04-01T00:00:00Z .. 2021-07-01T00:00:00Z") != std::string::npos);
  CHECK(text.find("statistics\n") != std::string::npos);
}

TEST_CASE("emission is a pure function of the report") {
  CHECK(emit_report(sample(), ReportFormat::Json) == emit_report(sample(), ReportFormat::Json));
  CHECK(extension(ReportFormat::Json) == "json");
  CHECK(extension(ReportFormat::Text) == "txt");
}
