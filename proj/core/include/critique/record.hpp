#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "critique/knowledge.hpp"
#include "critique/time.hpp"

namespace critique {

/// A mapped, unit-normalized, time-stamped parameter value.
struct DataItem {
  std::string patient_id;
  std::string concept_id;
  Value value = 0.0;
  std::string unit;
  Timestamp valid_start{};
  std::optional<Timestamp> valid_stop;  // absent for point events
  ConceptKind kind = ConceptKind::Primitive;
  std::optional<double> dose;
  std::size_t source_row = 0;

  /// valid_stop for interval items, valid_start otherwise.
  Timestamp end_time() const { return valid_stop.value_or(valid_start); }

  bool operator==(const DataItem&) const = default;
};

/// Chronological order with stable secondary order by (concept id, source row).
bool chronological_less(const DataItem& a, const DataItem& b);

struct PatientRecord {
  std::string patient_id;
  std::map<std::string, std::string> demographics;
  std::vector<DataItem> items;  // sorted by chronological_less

  void sort_items();
  /// Items of one concept, in record order.
  std::vector<const DataItem*> items_of(std::string_view concept_id) const;
  /// Latest end_time over all items; nullopt for an empty record.
  std::optional<Timestamp> last_time() const;
  std::optional<Timestamp> first_time() const;
};

}  // namespace critique
