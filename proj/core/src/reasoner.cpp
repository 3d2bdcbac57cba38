#include "critique/reasoner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace critique {

bool values_equal(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<double>(&a)) return std::abs(*x - std::get<double>(b)) <= kScoreTolerance;
  return std::get<std::string>(a) == std::get<std::string>(b);
}

std::vector<ValuedInterval> extrapolate_intervals(std::span<const DataItem> points, const PersistenceSpec& persistence) {
  std::vector<ValuedInterval> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    ValuedInterval v{p.concept_id, p.value, p.valid_start, p.valid_start, i};
    if (p.valid_stop && *p.valid_stop > p.valid_start) {
      v.end = *p.valid_stop;
    } else {
      v.start = p.valid_start - persistence.good_before;
      v.end = p.valid_start + persistence.good_after;
    }
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

bool by_start(const ValuedInterval& a, const ValuedInterval& b) {
  if (a.start != b.start) return a.start < b.start;
  return a.order < b.order;
}

}  // namespace

std::vector<ValuedInterval> resolve_precedence(std::vector<ValuedInterval> intervals) {
  std::sort(intervals.begin(), intervals.end(), by_start);
  std::vector<ValuedInterval> out;
  out.reserve(intervals.size());
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    ValuedInterval cur = intervals[i];
    // Later entries in sorted order are newer; the first different-valued one that starts
    // before our end truncates us.
    for (std::size_t j = i + 1; j < intervals.size() && intervals[j].start < cur.end; ++j) {
      if (!values_equal(intervals[j].value, cur.value)) {
        cur.end = intervals[j].start;
        break;
      }
    }
    if (cur.start < cur.end) out.push_back(std::move(cur));
  }
  return out;
}

std::vector<ValuedInterval> merge_same_value(std::vector<ValuedInterval> intervals) {
  std::sort(intervals.begin(), intervals.end(), by_start);
  std::vector<ValuedInterval> out;
  for (auto& iv : intervals) {
    // Look back across the run of intervals that still reach this start.
    bool merged = false;
    for (auto it = out.rbegin(); it != out.rend() && it->end >= iv.start; ++it) {
      if (values_equal(it->value, iv.value)) {
        it->end = std::max(it->end, iv.end);
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(std::move(iv));
  }
  std::sort(out.begin(), out.end(), by_start);
  return out;
}

std::vector<ValuedInterval> parameter_intervals(std::span<const DataItem> points, const PersistenceSpec& persistence) {
  return merge_same_value(resolve_precedence(extrapolate_intervals(points, persistence)));
}

std::optional<TimeWindow> covering_window(const IntervalsByParameter& intervals) {
  std::optional<TimeWindow> w;
  for (const auto& [_, list] : intervals) {
    for (const auto& iv : list) {
      if (!w) {
        w = TimeWindow{iv.start, iv.end};
      } else {
        w->start = std::min(w->start, iv.start);
        w->end = std::max(w->end, iv.end);
      }
    }
  }
  return w;
}

std::vector<Partition> partition_timeline(const IntervalsByParameter& intervals, TimeWindow window) {
  std::vector<Partition> out;
  if (window.empty()) return out;

  std::vector<Timestamp> bounds{window.start, window.end};
  for (const auto& [_, list] : intervals) {
    for (const auto& iv : list) {
      if (iv.start > window.start && iv.start < window.end) bounds.push_back(iv.start);
      if (iv.end > window.start && iv.end < window.end) bounds.push_back(iv.end);
    }
  }
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

  struct Track {
    const std::string* name;
    std::vector<const ValuedInterval*> sorted;
    std::size_t next = 0;
  };
  std::vector<Track> tracks;
  for (const auto& [name, list] : intervals) {
    Track t{&name, {}, 0};
    for (const auto& iv : list) t.sorted.push_back(&iv);
    std::sort(t.sorted.begin(), t.sorted.end(), [](auto* a, auto* b) { return a->start < b->start; });
    tracks.push_back(std::move(t));
  }

  out.reserve(bounds.size() - 1);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    Partition p{bounds[i], bounds[i + 1], {}};
    for (auto& t : tracks) {
      while (t.next < t.sorted.size() && t.sorted[t.next]->end <= p.start) ++t.next;
      if (t.next < t.sorted.size() && t.sorted[t.next]->start <= p.start) p.values.emplace(*t.name, t.sorted[t.next]->value);
    }
    out.push_back(std::move(p));
  }
  return out;
}

double fuzzify_comparison(double value, const FuzzyComparison& cmp) {
  const double t = std::get<double>(cmp.threshold);
  const double d = cmp.deviation;
  auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };

  if (d <= 0.0) {
    switch (cmp.op) {
      case CompareOp::Greater: return value > t ? 1.0 : 0.0;
      case CompareOp::GreaterEqual: return value >= t ? 1.0 : 0.0;
      case CompareOp::Less: return value < t ? 1.0 : 0.0;
      case CompareOp::LessEqual: return value <= t ? 1.0 : 0.0;
      case CompareOp::Equal: return value == t ? 1.0 : 0.0;
      case CompareOp::NotEqual: return value != t ? 1.0 : 0.0;
    }
  }
  switch (cmp.op) {
    case CompareOp::Greater:
    case CompareOp::GreaterEqual: return clamp01((value - (t - d)) / d);
    case CompareOp::Less:
    case CompareOp::LessEqual: return clamp01(((t + d) - value) / d);
    case CompareOp::Equal: return clamp01(1.0 - std::abs(value - t) / d);
    case CompareOp::NotEqual: return clamp01(std::abs(value - t) / d);
  }
  return 0.0;
}

std::optional<double> fuzzify_value(const Value& value, const FuzzyComparison& cmp) {
  if (value.index() != cmp.threshold.index()) return std::nullopt;
  if (const auto* d = std::get_if<double>(&value)) return fuzzify_comparison(*d, cmp);
  const bool same = std::get<std::string>(value) == std::get<std::string>(cmp.threshold);
  switch (cmp.op) {
    case CompareOp::Equal: return same ? 1.0 : 0.0;
    case CompareOp::NotEqual: return same ? 0.0 : 1.0;
    default: return std::nullopt;
  }
}

ConstraintNode negate_node(const ConstraintNode& node) {
  using K = ConstraintNode::Kind;
  switch (node.kind) {
    case K::Leaf: {
      ConstraintNode out = node;
      out.cmp.op = invert(node.cmp.op);
      return out;
    }
    case K::Not: return eliminate_negations(node.children.at(0));
    case K::And:
    case K::Or: {
      ConstraintNode out;
      out.kind = node.kind == K::And ? K::Or : K::And;
      for (const auto& c : node.children) out.children.push_back(negate_node(c));
      return out;
    }
    case K::Ref: break;
  }
  throw std::invalid_argument("cannot negate unresolved reference '" + node.ref + "'");
}

ConstraintNode eliminate_negations(const ConstraintNode& node) {
  using K = ConstraintNode::Kind;
  switch (node.kind) {
    case K::Leaf: return node;
    case K::Not: return negate_node(node.children.at(0));
    case K::And:
    case K::Or: {
      ConstraintNode out;
      out.kind = node.kind;
      for (const auto& c : node.children) out.children.push_back(eliminate_negations(c));
      return out;
    }
    case K::Ref: break;
  }
  throw std::invalid_argument("unresolved reference '" + node.ref + "'");
}

namespace {

// Evaluates with a polarity flag instead of rewriting the tree: under negation a leaf uses
// its inverted relation and AND/OR exchange roles.
std::optional<double> evaluate_polar(const ConstraintNode& node, const Partition& partition, bool negated) {
  using K = ConstraintNode::Kind;
  switch (node.kind) {
    case K::Leaf: {
      auto it = partition.values.find(node.cmp.parameter);
      if (it == partition.values.end()) return std::nullopt;
      if (!negated) return fuzzify_value(it->second, node.cmp);
      FuzzyComparison inverted = node.cmp;
      inverted.op = invert(node.cmp.op);
      return fuzzify_value(it->second, inverted);
    }
    case K::Not: return evaluate_polar(node.children.at(0), partition, !negated);
    case K::And:
    case K::Or: {
      const bool conjunctive = (node.kind == K::And) != negated;
      std::optional<double> acc;
      for (const auto& c : node.children) {
        auto v = evaluate_polar(c, partition, negated);
        if (conjunctive) {
          if (!v) return std::nullopt;
          acc = acc ? std::min(*acc, *v) : *v;
        } else if (v) {
          acc = acc ? std::max(*acc, *v) : *v;
        }
      }
      return acc;
    }
    case K::Ref: break;
  }
  throw std::invalid_argument("unresolved reference '" + node.ref + "'");
}

}  // namespace

std::optional<double> evaluate_node(const ConstraintNode& node, const Partition& partition) {
  return evaluate_polar(node, partition, false);
}

std::vector<ScoredInterval> coalesce(std::vector<ScoredInterval> intervals) {
  std::vector<ScoredInterval> out;
  for (auto& iv : intervals) {
    if (!out.empty() && out.back().end == iv.start && out.back().concept_id == iv.concept_id &&
        std::abs(out.back().membership - iv.membership) <= kScoreTolerance) {
      out.back().end = iv.end;
    } else {
      out.push_back(std::move(iv));
    }
  }
  return out;
}

std::vector<ScoredInterval> evaluate_expression(const ConstraintNode& expression, const KnowledgeLibrary& lib,
                                                const PatientRecord& record, std::string label,
                                                std::optional<TimeWindow> window) {
  const ConstraintNode resolved = eliminate_negations(resolve_references(expression, lib));

  std::vector<std::string> params;
  collect_concept_ids(resolved, params);
  std::sort(params.begin(), params.end());
  params.erase(std::unique(params.begin(), params.end()), params.end());

  IntervalsByParameter by_param;
  for (const auto& id : params) {
    const Concept& c = lib.concept_at(id);
    std::vector<DataItem> points;
    for (const auto& item : record.items)
      if (item.concept_id == id) points.push_back(item);
    auto list = parameter_intervals(points, c.persistence.value_or(PersistenceSpec{}));
    if (!list.empty()) by_param.emplace(id, std::move(list));
  }

  if (!window) window = covering_window(by_param);
  if (!window) return {};

  std::vector<ScoredInterval> scored;
  for (const auto& p : partition_timeline(by_param, *window)) {
    if (auto m = evaluate_node(resolved, p)) scored.push_back(ScoredInterval{p.start, p.end, *m, label});
  }
  return coalesce(std::move(scored));
}

std::vector<ScoredInterval> evaluate_concept(const Concept& abstract_concept, const KnowledgeLibrary& lib,
                                             const PatientRecord& record, std::optional<TimeWindow> window) {
  if (!abstract_concept.definition) throw UnknownConceptError(abstract_concept.id);
  return evaluate_expression(*abstract_concept.definition, lib, record, abstract_concept.id, window);
}

std::optional<double> membership_at(std::span<const ScoredInterval> intervals, Timestamp t) {
  auto it = std::upper_bound(intervals.begin(), intervals.end(), t,
                             [](Timestamp x, const ScoredInterval& iv) { return x < iv.start; });
  if (it == intervals.begin()) return std::nullopt;
  --it;
  if (t < it->end) return it->membership;
  return std::nullopt;
}

}  // namespace critique
