#include "critique_tools/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <system_error>
#include <thread>

#include "critique/ingestion.hpp"
#include "critique/knowledge_io.hpp"
#include "critique_tools/synth.hpp"

namespace critique {

EngineConfig RunConfig::engine_config() const {
  EngineConfig c;
  c.acceptance_threshold = acceptance_threshold;
  c.compliance_threshold = compliance_threshold;
  c.wrong_path_margin = wrong_path_margin;
  c.debug = debug;
  return c;
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
    out << content;
    out.close();
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

void print_findings(const ValidationReport& report, std::ostream& diag) {
  for (const auto& f : report.findings)
    diag << (f.severity == Severity::Error ? "error" : "warning") << " " << f.location << ": " << f.message << "\n";
}

/// Loads and validates; returns nullopt after reporting when the caller should exit with `code`.
std::optional<KnowledgeLibrary> load_library(const std::filesystem::path& path, std::ostream& diag, int& code) {
  try {
    auto lib = load_knowledge_library(path);
    const auto report = validate_library(lib);
    print_findings(report, diag);
    if (!report.ok()) {
      code = kExitValidation;
      return std::nullopt;
    }
    return lib;
  } catch (const KnowledgeError& e) {
    diag << "error " << e.location() << ": " << e.what() << "\n";
    code = kExitValidation;
  } catch (const std::system_error& e) {
    diag << "error: " << e.what() << "\n";
    code = kExitIo;
  }
  return std::nullopt;
}

void print_ingest_report(const IngestReport& r, std::ostream& diag) {
  for (const auto& s : r.skipped) diag << "warning data row " << s.row << ": skipped, " << s.detail << "\n";
  for (const auto& s : r.unmapped) diag << "warning data row " << s.row << ": unmapped, " << s.detail << "\n";
}

}  // namespace

int run_analysis(const RunPaths& paths, const RunConfig& config, std::ostream& diag) {
  if (config.acceptance_threshold < 0 || config.acceptance_threshold > 1 || config.compliance_threshold < 0 ||
      config.compliance_threshold > 1) {
    diag << "error: thresholds must lie in [0, 1]\n";
    return kExitValidation;
  }
  int code = kExitOk;
  auto lib = load_library(paths.knowledge, diag, code);
  if (!lib) return code;

  IngestResult ingest;
  try {
    const MappingTable mapping = load_mapping_table(paths.mapping);
    ingest = ingest_patient_records(paths.data, mapping, *lib);
    if (paths.demographics) {
      std::ifstream in(*paths.demographics, std::ios::binary);
      if (!in) throw IngestIoError("cannot open " + paths.demographics->string());
      attach_demographics(in, ingest.records);
    }
  } catch (const IngestIoError& e) {
    diag << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IngestError& e) {
    diag << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  print_ingest_report(ingest.report, diag);

  std::vector<PatientRecord> records;
  for (auto& r : ingest.records) {
    if (config.patients.empty() ||
        std::find(config.patients.begin(), config.patients.end(), r.patient_id) != config.patients.end())
      records.push_back(std::move(r));
  }

  std::error_code ec;
  std::filesystem::create_directories(paths.out, ec);
  if (ec) {
    diag << "error: cannot create " << paths.out.string() << ": " << ec.message() << "\n";
    return kExitIo;
  }

  const EngineConfig engine = config.engine_config();
  const std::string hash = library_hash(*lib);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex diag_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      const std::string id = records[i].patient_id;
      try {
        const auto report = analyze_patient(std::move(records[i]), *lib, engine, hash);
        const auto file = paths.out / (id + ".report." + std::string(extension(config.format)));
        write_atomically(file, emit_report(report, config.format));
      } catch (const std::exception& e) {
        std::lock_guard lock(diag_mutex);
        diag << "error patient " << id << ": " << e.what() << "\n";
        failed = true;
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(config.jobs, 1, std::max<std::size_t>(records.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return failed ? kExitIo : kExitOk;
}

int run_validate(const std::filesystem::path& knowledge, std::ostream& out, std::ostream& diag) {
  int code = kExitOk;
  auto lib = load_library(knowledge, diag, code);
  if (!lib) return code;
  out << "ok: " << lib->concepts().size() << " concepts, " << lib->path_plans().size() << " path plans, hash "
      << library_hash(*lib) << "\n";
  return kExitOk;
}

int run_abstract(const std::filesystem::path& knowledge, const std::filesystem::path& data,
                 const std::optional<std::filesystem::path>& mapping_path, const std::string& concept_id,
                 std::ostream& out, std::ostream& diag) {
  int code = kExitOk;
  auto lib = load_library(knowledge, diag, code);
  if (!lib) return code;
  const Concept* c = lib->find_concept(concept_id);
  if (!c || !c->definition) {
    diag << "error: '" << concept_id << "' is not an abstract concept\n";
    return kExitValidation;
  }
  IngestResult ingest;
  try {
    const MappingTable mapping = mapping_path ? load_mapping_table(*mapping_path) : MappingTable::identity(*lib);
    ingest = ingest_patient_records(data, mapping, *lib);
  } catch (const IngestIoError& e) {
    diag << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IngestError& e) {
    diag << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  print_ingest_report(ingest.report, diag);
  out << "patient_id,concept_id,start,end,membership\n";
  for (const auto& rec : ingest.records) {
    for (const auto& iv : evaluate_concept(*c, *lib, rec)) {
      char m[32];
      std::snprintf(m, sizeof m, "%.6f", iv.membership);
      out << rec.patient_id << "," << iv.concept_id << "," << format_timestamp(iv.start) << ","
          << format_timestamp(iv.end) << "," << m << "\n";
    }
  }
  return kExitOk;
}

int run_synth(const std::filesystem::path& guideline, const std::filesystem::path& scenario, std::uint64_t seed,
              const std::filesystem::path& out, std::ostream& diag) {
  int code = kExitOk;
  auto lib = load_library(guideline, diag, code);
  if (!lib) return code;
  try {
    const auto spec = load_scenario(scenario);
    const auto cohort = generate_synthetic_cohort(*lib, spec, seed);
    write_cohort(cohort, *lib, out);
  } catch (const SynthesisError& e) {
    diag << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    diag << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace critique
