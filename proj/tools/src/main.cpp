#include <iostream>

#include "CLI11.hpp"
#include "critique_tools/cli.hpp"

int main(int argc, char** argv) {
  using namespace critique;
  CLI::App app{"Guideline-based critiquing of time-stamped patient records"};
  app.require_subcommand(1);

  RunPaths paths;
  RunConfig config;
  std::string format = "json";
  std::string demographics;
  auto* analyze = app.add_subcommand("analyze", "Critique every patient in a data file");
  analyze->add_option("--knowledge", paths.knowledge, "Knowledge library (JSON)")->required();
  analyze->add_option("--data", paths.data, "Patient data (CSV)")->required();
  analyze->add_option("--mapping", paths.mapping, "Concept mapping (CSV)")->required();
  analyze->add_option("--out", paths.out, "Output directory")->required();
  analyze->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "text"}));
  analyze->add_option("--threshold", config.acceptance_threshold, "Condition acceptance threshold")
      ->check(CLI::Range(0.0, 1.0));
  analyze->add_option("--compliance-threshold", config.compliance_threshold, "Medication compliance threshold")
      ->check(CLI::Range(0.0, 1.0));
  analyze->add_option("--wrong-path-margin", config.wrong_path_margin, "Sibling path membership margin");
  analyze->add_option("--patient", config.patients, "Restrict to these patient ids");
  analyze->add_option("--jobs", config.jobs, "Patients analyzed in parallel")->check(CLI::PositiveNumber);
  analyze->add_option("--demographics", demographics, "Demographics (CSV)");
  analyze->add_flag("--debug", config.debug, "Include lifecycle events and all explanations");

  std::filesystem::path knowledge;
  auto* validate = app.add_subcommand("validate", "Check a knowledge library");
  validate->add_option("--knowledge", knowledge, "Knowledge library (JSON)")->required();

  std::filesystem::path data;
  std::string mapping;
  std::string concept_id;
  auto* abstract = app.add_subcommand("abstract", "Dump the scored intervals of an abstract concept");
  abstract->add_option("--knowledge", knowledge, "Knowledge library (JSON)")->required();
  abstract->add_option("--data", data, "Patient data (CSV)")->required();
  abstract->add_option("--mapping", mapping, "Concept mapping (CSV); identity when omitted");
  abstract->add_option("--concept", concept_id, "Abstract concept id")->required();

  std::filesystem::path scenario;
  std::filesystem::path out;
  std::uint64_t seed = 1;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort with planted deviations");
  synth->add_option("--guideline", knowledge, "Knowledge library (JSON)")->required();
  synth->add_option("--scenario", scenario, "Scenario (JSON)")->required();
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  if (*analyze) {
    config.format = format == "text" ? ReportFormat::Text : ReportFormat::Json;
    if (!demographics.empty()) paths.demographics = demographics;
    return run_analysis(paths, config, std::cerr);
  }
  if (*validate) return run_validate(knowledge, std::cout, std::cerr);
  if (*abstract) {
    std::optional<std::filesystem::path> m;
    if (!mapping.empty()) m = mapping;
    return run_abstract(knowledge, data, m, concept_id, std::cout, std::cerr);
  }
  return run_synth(knowledge, scenario, seed, out, std::cerr);
}
