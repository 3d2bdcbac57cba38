#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "critique/engine.hpp"
#include "critique/report.hpp"

namespace critique {

enum ExitCode : int { kExitOk = 0, kExitIo = 1, kExitValidation = 2 };

struct RunConfig {
  double acceptance_threshold = 0.5;
  double compliance_threshold = 0.8;
  double wrong_path_margin = 0.1;
  ReportFormat format = ReportFormat::Json;
  std::vector<std::string> patients;  // empty means all
  bool debug = false;
  std::size_t jobs = 1;

  EngineConfig engine_config() const;
};

struct RunPaths {
  std::filesystem::path knowledge;
  std::filesystem::path data;
  std::filesystem::path mapping;
  std::filesystem::path out;
  std::optional<std::filesystem::path> demographics;
};

/// Writes `<patient_id>.report.<ext>` per patient into paths.out. Findings and errors go to `diag`.
int run_analysis(const RunPaths& paths, const RunConfig& config, std::ostream& diag);

int run_validate(const std::filesystem::path& knowledge, std::ostream& out, std::ostream& diag);

/// CSV rows patient_id,concept_id,start,end,membership for one abstract concept.
int run_abstract(const std::filesystem::path& knowledge, const std::filesystem::path& data,
                 const std::optional<std::filesystem::path>& mapping, const std::string& concept_id, std::ostream& out,
                 std::ostream& diag);

int run_synth(const std::filesystem::path& guideline, const std::filesystem::path& scenario, std::uint64_t seed,
              const std::filesystem::path& out, std::ostream& diag);

/// Writes through a temporary file and renames it into place.
void write_atomically(const std::filesystem::path& path, const std::string& content);

}  // namespace critique
