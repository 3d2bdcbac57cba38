#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "critique/knowledge.hpp"
#include "critique/record.hpp"

namespace critique {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The input could not be read at all, as opposed to being malformed.
class IngestIoError : public IngestError {
 public:
  using IngestError::IngestError;
};

struct MappingEntry {
  std::string external_id;
  std::string internal_id;
  double unit_factor = 1.0;
  double unit_offset = 0.0;

  bool is_identity() const { return unit_factor == 1.0 && unit_offset == 0.0; }
};

/// External concept identifiers to library concepts, with affine unit conversion.
class MappingTable {
 public:
  MappingTable() = default;
  /// Throws IngestError when a factor is zero or an external id repeats.
  explicit MappingTable(std::vector<MappingEntry> entries);

  const MappingEntry* find(std::string_view external_id) const;
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, MappingEntry, std::less<>>& entries() const { return entries_; }

  /// Identity mapping for every primitive and event concept in the library.
  static MappingTable identity(const KnowledgeLibrary& lib);

 private:
  std::map<std::string, MappingEntry, std::less<>> entries_;
};

/// CSV columns: external_id, internal_concept_id, unit_factor, unit_offset.
MappingTable read_mapping_table(std::istream& in);
MappingTable load_mapping_table(const std::filesystem::path& path);

/// Internal concept id, or nullopt when the external id is unmapped.
std::optional<std::string> map_concept(std::string_view external_id, const MappingTable& table);

/// value * factor + offset. Categorical values pass through an identity entry unchanged;
/// any other conversion of a categorical value throws IngestError.
Value convert_units(const Value& raw, const MappingEntry& entry);
/// Inverse of convert_units for numeric values.
double invert_units(double normalized, const MappingEntry& entry);

struct RowIssue {
  std::size_t row = 0;
  std::string detail;

  bool operator==(const RowIssue&) const = default;
};

struct IngestReport {
  std::size_t rows_in = 0;
  std::size_t items_out = 0;
  std::vector<RowIssue> skipped;   // malformed rows
  std::vector<RowIssue> unmapped;  // rows whose external id has no library concept

  bool lossless() const { return rows_in == items_out + skipped.size() + unmapped.size(); }
};

struct IngestResult {
  std::vector<PatientRecord> records;  // sorted by patient id
  IngestReport report;
};

/// Data CSV columns: patient_id, external_concept_id, value, unit, dose (optional),
/// valid_start, valid_stop (optional). Malformed rows are skipped and reported.
IngestResult ingest_patient_records(std::istream& data, const MappingTable& mapping, const KnowledgeLibrary& lib);
IngestResult ingest_patient_records(const std::filesystem::path& data, const MappingTable& mapping,
                                    const KnowledgeLibrary& lib);

/// Demographics CSV columns: patient_id, key, value. Attaches to matching records;
/// returns the number of rows applied.
std::size_t attach_demographics(std::istream& in, std::vector<PatientRecord>& records);

}  // namespace critique
