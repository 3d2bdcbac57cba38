#include "critique/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "critique/csv.hpp"

namespace critique {

bool chronological_less(const DataItem& a, const DataItem& b) {
  if (a.valid_start != b.valid_start) return a.valid_start < b.valid_start;
  if (a.concept_id != b.concept_id) return a.concept_id < b.concept_id;
  return a.source_row < b.source_row;
}

void PatientRecord::sort_items() { std::stable_sort(items.begin(), items.end(), chronological_less); }

std::vector<const DataItem*> PatientRecord::items_of(std::string_view concept_id) const {
  std::vector<const DataItem*> out;
  for (const auto& item : items)
    if (item.concept_id == concept_id) out.push_back(&item);
  return out;
}

std::optional<Timestamp> PatientRecord::last_time() const {
  std::optional<Timestamp> last;
  for (const auto& item : items)
    if (!last || item.end_time() > *last) last = item.end_time();
  return last;
}

std::optional<Timestamp> PatientRecord::first_time() const {
  if (items.empty()) return std::nullopt;
  return items.front().valid_start;
}

namespace {

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestIoError("cannot open " + path.string());
  return in;
}

std::size_t require_column(const csv::Table& table, std::string_view name, std::string_view what) {
  auto col = table.column(name);
  if (!col) throw IngestError(std::string(what) + ": missing required column '" + std::string(name) + "'");
  return *col;
}

}  // namespace

MappingTable::MappingTable(std::vector<MappingEntry> entries) {
  for (auto& e : entries) {
    if (e.unit_factor == 0.0) throw IngestError("mapping for '" + e.external_id + "' has unit_factor 0");
    const auto key = e.external_id;
    if (entries_.count(key)) throw IngestError("duplicate mapping for external id '" + key + "'");
    entries_.emplace(key, std::move(e));
  }
}

const MappingEntry* MappingTable::find(std::string_view external_id) const {
  auto it = entries_.find(external_id);
  return it == entries_.end() ? nullptr : &it->second;
}

MappingTable MappingTable::identity(const KnowledgeLibrary& lib) {
  std::vector<MappingEntry> entries;
  for (const auto& [id, c] : lib.concepts())
    if (c.kind != ConceptKind::Abstract) entries.push_back({id, id, 1.0, 0.0});
  return MappingTable(std::move(entries));
}

MappingTable read_mapping_table(std::istream& in) {
  csv::Table table(in);
  const auto c_ext = require_column(table, "external_id", "mapping CSV");
  const auto c_int = require_column(table, "internal_concept_id", "mapping CSV");
  const auto c_factor = table.column("unit_factor");
  const auto c_offset = table.column("unit_offset");

  std::vector<MappingEntry> entries;
  std::vector<std::string> f;
  while (table.next(f)) {
    const auto row = std::to_string(table.row_number());
    if (f.size() != table.header().size()) throw IngestError("mapping CSV row " + row + ": wrong number of columns");
    MappingEntry e{f[c_ext], f[c_int], 1.0, 0.0};
    if (c_factor && !f[*c_factor].empty()) {
      auto v = parse_number(f[*c_factor]);
      if (!v) throw IngestError("mapping CSV row " + row + ": invalid unit_factor '" + f[*c_factor] + "'");
      e.unit_factor = *v;
    }
    if (c_offset && !f[*c_offset].empty()) {
      auto v = parse_number(f[*c_offset]);
      if (!v) throw IngestError("mapping CSV row " + row + ": invalid unit_offset '" + f[*c_offset] + "'");
      e.unit_offset = *v;
    }
    if (e.unit_factor == 0.0) throw IngestError("mapping CSV row " + row + ": unit_factor must not be 0");
    entries.push_back(std::move(e));
  }
  return MappingTable(std::move(entries));
}

MappingTable load_mapping_table(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return read_mapping_table(in);
}

std::optional<std::string> map_concept(std::string_view external_id, const MappingTable& table) {
  if (const auto* e = table.find(external_id)) return e->internal_id;
  return std::nullopt;
}

Value convert_units(const Value& raw, const MappingEntry& entry) {
  if (const auto* d = std::get_if<double>(&raw)) return *d * entry.unit_factor + entry.unit_offset;
  if (!entry.is_identity())
    throw IngestError("cannot apply unit conversion to non-numeric value for '" + entry.external_id + "'");
  return raw;
}

double invert_units(double normalized, const MappingEntry& entry) {
  return (normalized - entry.unit_offset) / entry.unit_factor;
}

IngestResult ingest_patient_records(std::istream& data, const MappingTable& mapping, const KnowledgeLibrary& lib) {
  csv::Table table(data);
  const auto c_patient = require_column(table, "patient_id", "data CSV");
  const auto c_concept = require_column(table, "external_concept_id", "data CSV");
  const auto c_value = require_column(table, "value", "data CSV");
  const auto c_start = require_column(table, "valid_start", "data CSV");
  const auto c_dose = table.column("dose");
  const auto c_stop = table.column("valid_stop");

  IngestResult result;
  auto& report = result.report;
  std::map<std::string, PatientRecord> by_patient;

  std::vector<std::string> f;
  while (table.next(f)) {
    const std::size_t row = table.row_number();
    ++report.rows_in;
    auto skip = [&](std::string detail) { report.skipped.push_back({row, std::move(detail)}); };

    if (f.size() != table.header().size()) {
      skip("expected " + std::to_string(table.header().size()) + " columns, found " + std::to_string(f.size()));
      continue;
    }
    if (f[c_patient].empty()) {
      skip("empty patient_id");
      continue;
    }

    const MappingEntry* entry = mapping.find(f[c_concept]);
    if (!entry) {
      report.unmapped.push_back({row, "external id '" + f[c_concept] + "' has no mapping"});
      continue;
    }
    const Concept* target = lib.find_concept(entry->internal_id);
    if (!target) {
      report.unmapped.push_back({row, "'" + f[c_concept] + "' maps to unknown concept '" + entry->internal_id + "'"});
      continue;
    }
    if (target->kind == ConceptKind::Abstract) {
      skip("concept '" + target->id + "' is abstract and cannot carry raw data");
      continue;
    }

    DataItem item;
    item.patient_id = f[c_patient];
    item.concept_id = target->id;
    item.kind = target->kind;
    item.unit = target->unit;
    item.source_row = row;

    try {
      if (target->domain == ValueDomain::Numeric) {
        auto v = parse_number(f[c_value]);
        if (!v) {
          skip("non-numeric value '" + f[c_value] + "' for numeric concept '" + target->id + "'");
          continue;
        }
        item.value = convert_units(*v, *entry);
      } else {
        item.value = convert_units(f[c_value], *entry);
      }
    } catch (const IngestError& e) {
      skip(e.what());
      continue;
    }

    try {
      item.valid_start = parse_timestamp(f[c_start]);
      if (c_stop && !f[*c_stop].empty()) item.valid_stop = parse_timestamp(f[*c_stop]);
    } catch (const TimeFormatError& e) {
      skip(std::string("unparseable timestamp: ") + e.what());
      continue;
    }
    if (item.valid_stop && *item.valid_stop < item.valid_start) {
      skip("valid_stop precedes valid_start");
      continue;
    }
    if (c_dose && !f[*c_dose].empty()) {
      auto d = parse_number(f[*c_dose]);
      if (!d) {
        skip("invalid dose '" + f[*c_dose] + "'");
        continue;
      }
      item.dose = d;
    }

    auto& rec = by_patient[item.patient_id];
    rec.patient_id = item.patient_id;
    rec.items.push_back(std::move(item));
    ++report.items_out;
  }

  for (auto& [id, rec] : by_patient) {
    rec.sort_items();
    result.records.push_back(std::move(rec));
  }
  return result;
}

IngestResult ingest_patient_records(const std::filesystem::path& data, const MappingTable& mapping,
                                    const KnowledgeLibrary& lib) {
  auto in = open_or_throw(data);
  return ingest_patient_records(in, mapping, lib);
}

std::size_t attach_demographics(std::istream& in, std::vector<PatientRecord>& records) {
  csv::Table table(in);
  const auto c_patient = require_column(table, "patient_id", "demographics CSV");
  const auto c_key = require_column(table, "key", "demographics CSV");
  const auto c_value = require_column(table, "value", "demographics CSV");
  std::size_t applied = 0;
  std::vector<std::string> f;
  while (table.next(f)) {
    if (f.size() != table.header().size()) continue;
    auto it = std::find_if(records.begin(), records.end(),
                           [&](const PatientRecord& r) { return r.patient_id == f[c_patient]; });
    if (it == records.end()) continue;
    it->demographics[f[c_key]] = f[c_value];
    ++applied;
  }
  return applied;
}

}  // namespace critique
