#include "critique/report.hpp"

#include <cstdio>

#include "json.hpp"

namespace critique {

using nlohmann::ordered_json;

std::string_view extension(ReportFormat f) { return f == ReportFormat::Json ? "json" : "txt"; }

namespace {

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

ordered_json scores_json(const CommentScores& s) {
  ordered_json j;
  j["reasonableness"] = s.reasonableness;
  j["applicability"] = s.applicability;
  if (s.specificity) j["specificity"] = *s.specificity;
  if (s.timing) j["timing"] = *s.timing;
  if (s.membership) j["membership"] = *s.membership;
  return j;
}

ordered_json comment_json(const Comment& c) {
  ordered_json j;
  j["type"] = c.type;
  if (c.end) {
    j["interval"] = {{"start", format_timestamp(c.time)}, {"end", format_timestamp(*c.end)}};
  } else {
    j["time"] = format_timestamp(c.time);
  }
  j["plan_id"] = c.plan_id;
  if (!c.step_id.empty()) j["step_id"] = c.step_id;
  j["concept_id"] = c.concept_id;
  j["scores"] = scores_json(c.scores);
  j["text"] = c.text;
  return j;
}

ordered_json explanation_json(const ComputedExplanation& e) {
  ordered_json j;
  j["type"] = std::string(to_string(e.type));
  j["time"] = format_timestamp(e.time);
  if (e.item) j["item"] = *e.item;
  j["plan_id"] = e.plan_id;
  j["role"] = std::string(to_string(e.role.kind));
  if (!e.role.step_id.empty()) j["step_id"] = e.role.step_id;
  j["concept_id"] = e.concept_id;
  CommentScores s{e.reasonableness, e.applicability, e.specificity, e.timing, std::nullopt};
  j["scores"] = scores_json(s);
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

std::string to_json(const CritiqueReport& r) {
  ordered_json j;
  j["patient_id"] = r.patient_id;
  ordered_json thresholds = ordered_json::object();
  for (const auto& [k, v] : r.config.thresholds) thresholds[k] = v;
  j["config_echo"] = {{"thresholds", thresholds}, {"library_hash", r.config.library_hash}};
  ordered_json comments = ordered_json::array();
  for (const auto& c : r.comments) comments.push_back(comment_json(c));
  j["comments"] = std::move(comments);
  ordered_json stats = ordered_json::object();
  for (const auto& [k, v] : r.statistics) stats[k] = v;
  j["statistics"] = std::move(stats);
  if (r.debug) {
    ordered_json events = ordered_json::array();
    for (const auto& e : r.debug->lifecycle_events)
      events.push_back({{"plan_id", e.plan_id},
                        {"event", std::string(to_string(e.type))},
                        {"time", format_timestamp(e.time)},
                        {"membership", e.membership},
                        {"activation", e.activation}});
    ordered_json expl = ordered_json::array();
    for (const auto& e : r.debug->explanations) expl.push_back(explanation_json(e));
    j["debug"] = {{"lifecycle_events", std::move(events)}, {"all_explanations", std::move(expl)}};
  }
  return j.dump(2) + "\n";
}

std::string to_text(const CritiqueReport& r) {
  std::string out = "patient " + r.patient_id + "\n";
  out += "library " + r.config.library_hash + "\n";
  for (const auto& c : r.comments) {
    out += format_timestamp(c.time);
    if (c.end) out += " .. " + format_timestamp(*c.end);
    out += "  " + c.type;
    if (!c.plan_id.empty()) out += "  [" + c.plan_id + (c.step_id.empty() ? "" : "#" + c.step_id) + "]";
    out += "  r=" + fmt3(c.scores.reasonableness) + " a=" + fmt3(c.scores.applicability);
    if (c.scores.specificity) out += " s=" + fmt3(*c.scores.specificity);
    if (c.scores.timing) out += " t=" + fmt3(*c.scores.timing);
    if (c.scores.membership) out += " m=" + fmt3(*c.scores.membership);
    out += "  " + c.text + "\n";
  }
  out += "statistics\n";
  for (const auto& [k, v] : r.statistics) out += "  " + k + " " + std::to_string(v) + "\n";
  return out;
}

}  // namespace

std::string emit_report(const CritiqueReport& report, ReportFormat format) {
  return format == ReportFormat::Json ? to_json(report) : to_text(report);
}

}  // namespace critique
