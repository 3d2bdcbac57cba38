#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "critique/knowledge.hpp"

namespace critique {

/// Raised for schema violations, dangling references, duplicate ids and unit mismatches.
/// `location()` is a JSON pointer into the document (or `byte N` for syntax errors).
class KnowledgeError : public std::runtime_error {
 public:
  KnowledgeError(std::string location, const std::string& message)
      : std::runtime_error(location + ": " + message), location_(std::move(location)) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

/// Parses a JSON knowledge-library document.
///
/// Top-level sections are `concepts` and `plans`. Durations are integer seconds.
/// Condition expressions and intention targets are either a constraint node object
/// or a string naming an abstract concept. Structural invariants that are not needed to
/// build the library (arity of AND/OR, periodic steps without period, ...) are left to
/// validate_library().
KnowledgeLibrary parse_knowledge_library(std::string_view document);
KnowledgeLibrary load_knowledge_library(const std::filesystem::path& path);

/// Canonical JSON text: fixed key order, two-space indent. Parsing the output yields an
/// equal library.
std::string serialize_knowledge_library(const KnowledgeLibrary& lib);

/// 64-bit FNV-1a of the canonical serialization, as 16 hex digits.
std::string library_hash(const KnowledgeLibrary& lib);

enum class Severity { Error, Warning };

struct Finding {
  Severity severity = Severity::Error;
  std::string location;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const;  // no error-severity findings
  std::size_t error_count() const;
};

ValidationReport validate_library(const KnowledgeLibrary& lib);

}  // namespace critique
