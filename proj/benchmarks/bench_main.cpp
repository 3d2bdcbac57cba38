#include <benchmark/benchmark.h>

#include <filesystem>

#include "critique/engine.hpp"
#include "critique/knowledge_io.hpp"
#include "critique/reasoner.hpp"
#include "critique_tools/synth.hpp"

using namespace critique;

namespace {

const KnowledgeLibrary& library() {
  static const auto lib = load_knowledge_library(std::filesystem::path(CRITIQUE_FIXTURES_DIR) / "diabetes_guideline.json");
  return lib;
}

SyntheticCohort cohort(std::size_t patients) {
  ScenarioSpec spec;
  spec.id = "bench";
  spec.plan = "t2dm/metformin";
  spec.patients = patients;
  spec.duration_days = 1825;
  spec.start = parse_timestamp("2020-01-01");
  spec.deviations = {{"missing-action", 1, ""}, {"step-too-late", 1, ""}, {"duplicate-step", 1, ""}};
  return generate_synthetic_cohort(library(), spec, 7);
}

void BM_Fuzzify(benchmark::State& state) {
  FuzzyComparison cmp;
  cmp.parameter = "hba1c";
  cmp.op = CompareOp::GreaterEqual;
  cmp.threshold = 7.0;
  cmp.deviation = 0.5;
  double v = 6.0, sum = 0.0;
  for (auto _ : state) {
    sum += fuzzify_comparison(v, cmp);
    v = v > 8.0 ? 6.0 : v + 0.01;
  }
  benchmark::DoNotOptimize(sum);
}
BENCHMARK(BM_Fuzzify);

void BM_EvaluateConcept(benchmark::State& state) {
  const auto records = cohort_records(cohort(1));
  const Concept* c = library().find_concept("diabetes");
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_concept(*c, library(), records.front()));
}
BENCHMARK(BM_EvaluateConcept);

void BM_AnalyzePatient(benchmark::State& state) {
  const auto records = cohort_records(cohort(1));
  const EngineConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(analyze_patient(records.front(), library(), cfg));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AnalyzePatient);

}  // namespace

BENCHMARK_MAIN();
