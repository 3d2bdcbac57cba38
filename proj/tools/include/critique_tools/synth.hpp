#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "critique/knowledge.hpp"
#include "critique/record.hpp"

namespace critique {

class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DeviationSpec {
  std::string type;   // a deviation comment type
  std::size_t count = 1;
  std::string step;   // optional body step id; defaults depend on the type
};

struct ScenarioSpec {
  std::string id;
  std::string plan;  // path plan the patients follow
  std::size_t patients = 1;
  std::int64_t duration_days = 1825;
  Timestamp start{};
  std::vector<DeviationSpec> deviations;
};

/// JSON: {"id", "plan", "patients", "duration_days", "start", "deviations": [{"type", "count", "step"}]}.
ScenarioSpec parse_scenario(std::string_view json_text);
ScenarioSpec load_scenario(const std::filesystem::path& path);

struct PlantedDeviation {
  std::string type;
  std::string plan_id;
  std::string step_id;
  std::string concept_id;
  Timestamp time{};

  bool operator==(const PlantedDeviation&) const = default;
};

struct SyntheticPatient {
  std::string patient_id;
  Timestamp earliest_start{};
  std::vector<DataItem> items;  // chronological
  std::vector<PlantedDeviation> planted;
};

struct SyntheticCohort {
  ScenarioSpec spec;
  std::uint64_t seed = 0;
  std::vector<SyntheticPatient> patients;
};

/// Values satisfying an expression with full membership, one per parameter, chosen away from
/// the ramp edges. Throws SynthesisError when the constraints conflict.
std::map<std::string, Value> solve_expression(const ConstraintNode& expression, const KnowledgeLibrary& lib);

/// Deterministic for a fixed seed. Throws SynthesisError for specs the guideline cannot realize.
SyntheticCohort generate_synthetic_cohort(const KnowledgeLibrary& lib, const ScenarioSpec& spec, std::uint64_t seed);

std::vector<PatientRecord> cohort_records(const SyntheticCohort& cohort);

/// Writes data.csv, mapping.csv and manifest.json into `dir`.
void write_cohort(const SyntheticCohort& cohort, const KnowledgeLibrary& lib, const std::filesystem::path& dir);

/// Reads the planted deviations of a manifest.json, keyed by patient id.
std::map<std::string, std::vector<PlantedDeviation>> read_manifest(const std::filesystem::path& path);

}  // namespace critique
