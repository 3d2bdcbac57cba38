#pragma once

#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "critique/engine.hpp"
#include "critique_tools/synth.hpp"

namespace roundtrip {

using namespace critique;

inline const std::set<std::string>& deviation_types() {
  static const std::set<std::string> types = {"missing-action", "step-too-late",          "step-too-early",
                                              "duplicate-step", "redundant-step-repeated", "stopped-plan-step",
                                              "step-not-supported", "wrong-path-selection"};
  return types;
}

struct MatchResult {
  std::size_t planted = 0;
  std::size_t detected = 0;
  std::vector<PlantedDeviation> missed;
  std::vector<Comment> spurious;
};

/// One-to-one: same type, plan, step and concept, and times no more than a day apart.
inline MatchResult match(const std::vector<PlantedDeviation>& planted, const std::vector<Comment>& comments) {
  MatchResult r;
  r.planted = planted.size();
  std::vector<const Comment*> pool;
  for (const auto& c : comments)
    if (deviation_types().count(c.type)) pool.push_back(&c);
  std::vector<bool> used(pool.size(), false);
  for (const auto& p : planted) {
    bool hit = false;
    for (std::size_t i = 0; i < pool.size() && !hit; ++i) {
      const Comment& c = *pool[i];
      if (used[i] || c.type != p.type || c.plan_id != p.plan_id || c.step_id != p.step_id ||
          c.concept_id != p.concept_id)
        continue;
      const auto gap = c.time > p.time ? c.time - p.time : p.time - c.time;
      if (gap > kOneDay) continue;
      used[i] = hit = true;
    }
    if (hit) ++r.detected;
    else r.missed.push_back(p);
  }
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!used[i]) r.spurious.push_back(*pool[i]);
  return r;
}

inline ConstraintNode zero_deviations(ConstraintNode n) {
  n.cmp.deviation = 0.0;
  for (auto& c : n.children) c = zero_deviations(std::move(c));
  return n;
}

inline GuidelinePlan zero_deviations(GuidelinePlan p) {
  for (auto& c : p.conditions) c.expression = zero_deviations(std::move(c.expression));
  for (auto& i : p.intentions) i.target = zero_deviations(std::move(i.target));
  for (auto& s : p.body) s.timing_deviation = Duration{0};
  for (auto& sub : p.sub_plans) sub = zero_deviations(std::move(sub));
  return p;
}

/// The same library with every fuzzy ramp and timing tolerance collapsed to zero.
inline KnowledgeLibrary crisp_library(const KnowledgeLibrary& lib) {
  std::vector<Concept> concepts;
  for (const auto& [_, c] : lib.concepts()) {
    Concept copy = c;
    if (copy.definition) copy.definition = zero_deviations(*copy.definition);
    concepts.push_back(std::move(copy));
  }
  std::vector<GuidelinePlan> plans;
  for (const auto& p : lib.plans()) plans.push_back(zero_deviations(p));
  return KnowledgeLibrary(std::move(concepts), std::move(plans));
}

}  // namespace roundtrip
