#pragma once

#include <string>
#include <string_view>

#include "critique/engine.hpp"

namespace critique {

enum class ReportFormat { Json, Text };

std::string_view extension(ReportFormat f);

/// Report document. JSON keys are emitted in a fixed order so identical reports are
/// byte-identical.
std::string emit_report(const CritiqueReport& report, ReportFormat format);

}  // namespace critique
