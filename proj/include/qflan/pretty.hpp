#pragma once

#include <string>

#include "qflan/ast.hpp"

namespace qflan {

// Prints a specification back to DSL syntax. parse_specification of the
// result yields a structurally equal specification.
inline std::string pretty_specification(const Specification& spec) {
  std::string out;
  auto names = [&](const std::vector<Named>& list) {
    for (size_t i = 0; i < list.size(); ++i) {
      out += i % 8 == 0 ? "\n  " : " ";
      out += list[i].name;
    }
    out += '\n';
  };

  if (!spec.abstract_features.empty()) {
    out += "begin abstract features";
    names(spec.abstract_features);
    out += "end abstract features\n\n";
  }
  if (!spec.concrete_features.empty()) {
    out += "begin concrete features";
    names(spec.concrete_features);
    out += "end concrete features\n\n";
  }
  if (!spec.predicates.empty()) {
    out += "begin feature predicates\n";
    for (const auto& p : spec.predicates) {
      out += "  " + p.name + " = {";
      for (size_t i = 0; i < p.values.size(); ++i) {
        if (i) out += " ,";
        out += " " + p.values[i].first + " = " + format_number(p.values[i].second);
      }
      out += " }\n";
    }
    out += "end feature predicates\n\n";
  }
  if (!spec.variables.empty()) {
    out += "begin variables\n";
    for (const auto& v : spec.variables)
      out += "  " + v.name + " = " + format_number(v.init) + "\n";
    out += "end variables\n\n";
  }
  if (!spec.actions.empty()) {
    out += "begin actions";
    names(spec.actions);
    out += "end actions\n\n";
  }
  if (!spec.diagram.empty()) {
    out += "begin feature diagram\n";
    for (const auto& rel : spec.diagram) {
      out += "  " + rel.parent;
      switch (rel.kind) {
        case HierarchicalRelation::Kind::And: out += " -> {"; break;
        case HierarchicalRelation::Kind::Or: out += " -OR-> {"; break;
        case HierarchicalRelation::Kind::Xor: out += " -XOR-> {"; break;
      }
      for (size_t i = 0; i < rel.children.size(); ++i) {
        if (i) out += " ,";
        out += " ";
        if (rel.children[i].optional) out += "?";
        out += rel.children[i].name;
      }
      out += " }\n";
    }
    out += "end feature diagram\n\n";
  }
  if (!spec.cross_tree.empty()) {
    out += "begin cross-tree constraints\n";
    for (const auto& c : spec.cross_tree) {
      out += "  " + c.lhs +
             (c.kind == CrossTreeConstraint::Kind::Requires ? " requires " : " excludes ") +
             c.rhs + "\n";
    }
    out += "end cross-tree constraints\n\n";
  }
  if (!spec.quantitative.empty()) {
    out += "begin quantitative constraints\n";
    for (const auto& q : spec.quantitative) out += "  { " + to_string(q.formula) + " }\n";
    out += "end quantitative constraints\n\n";
  }
  if (!spec.action_constraints.empty()) {
    out += "begin action constraints\n";
    for (const auto& c : spec.action_constraints)
      out += "  do(" + target_label(c) + ") -> { " + to_string(c.formula) + " }\n";
    out += "end action constraints\n\n";
  }
  if (!spec.process_defs.empty()) {
    out += "begin processes\n";
    for (const auto& def : spec.process_defs)
      out += "  process " + def.name + " = " + to_string(def.term) + "\n";
    out += "end processes\n\n";
  }
  if (!spec.process_diagrams.empty()) {
    out += "begin processes diagram\n";
    for (const auto& d : spec.process_diagrams) {
      out += "  begin process " + d.name + "\n    states =";
      for (size_t i = 0; i < d.states.size(); ++i) {
        if (i) out += " ,";
        out += " " + d.states[i].name;
      }
      out += "\n    transitions =\n";
      for (size_t i = 0; i < d.transitions.size(); ++i) {
        const auto& t = d.transitions[i];
        out += "      " + t.src + " -(" + label(t.action) + " , " + format_number(t.rate);
        if (!t.updates.empty()) out += " , " + to_string(t.updates);
        out += ")-> " + t.dst;
        out += i + 1 < d.transitions.size() ? " ,\n" : "\n";
      }
      out += "  end process\n";
    }
    out += "end processes diagram\n\n";
  }
  if (!spec.init_processes.empty()) {
    out += "begin init\n  installedFeatures = {";
    for (size_t i = 0; i < spec.init_features.size(); ++i) {
      if (i) out += " ,";
      out += " " + spec.init_features[i].name;
    }
    out += " }\n  initialProcesses = ";
    for (size_t i = 0; i < spec.init_processes.size(); ++i) {
      if (i) out += " | ";
      out += spec.init_processes[i].name;
    }
    out += "\nend init\n";
  }
  return out;
}

inline std::string pretty_analysis(const AnalysisRequest& req) {
  std::string out = "begin analysis\n  query = eval ";
  switch (req.kind) {
    case AnalysisRequest::Kind::When:
      out += "when { " + to_string(req.condition) + " }";
      break;
    case AnalysisRequest::Kind::Until:
      out += "until { " + to_string(req.condition) + " }";
      break;
    case AnalysisRequest::Kind::For:
      out += "for step from " + format_number(req.from) + " to " + format_number(req.to) +
             " by " + format_number(req.by);
      break;
  }
  out += " :\n    {";
  for (size_t i = 0; i < req.observations.size(); ++i) {
    if (i) out += " ,";
    out += " " + req.observations[i].label();
    if (req.observations[i].delta)
      out += " [delta = " + format_number(*req.observations[i].delta) + "]";
  }
  out += " }\n";
  out += "  default delta = " + format_number(req.default_delta) + "\n";
  out += "  alpha = " + format_number(req.alpha) + "\n";
  out += "  parallelism = " + std::to_string(req.parallelism) + "\n";
  out += "end analysis\n";
  return out;
}

// Structural equality used by the round-trip tests; source locations are
// ignored.
inline bool spec_equal(const Specification& a, const Specification& b) {
  auto names_equal = [](const std::vector<Named>& x, const std::vector<Named>& y) {
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i)
      if (x[i].name != y[i].name) return false;
    return true;
  };
  if (!names_equal(a.abstract_features, b.abstract_features)) return false;
  if (!names_equal(a.concrete_features, b.concrete_features)) return false;
  if (!names_equal(a.actions, b.actions)) return false;
  if (!names_equal(a.init_features, b.init_features)) return false;
  if (!names_equal(a.init_processes, b.init_processes)) return false;

  if (a.predicates.size() != b.predicates.size()) return false;
  for (size_t i = 0; i < a.predicates.size(); ++i)
    if (a.predicates[i].name != b.predicates[i].name ||
        a.predicates[i].values != b.predicates[i].values)
      return false;

  if (a.variables.size() != b.variables.size()) return false;
  for (size_t i = 0; i < a.variables.size(); ++i)
    if (a.variables[i].name != b.variables[i].name || a.variables[i].init != b.variables[i].init)
      return false;

  if (a.diagram.size() != b.diagram.size()) return false;
  for (size_t i = 0; i < a.diagram.size(); ++i) {
    const auto& x = a.diagram[i];
    const auto& y = b.diagram[i];
    if (x.parent != y.parent || x.kind != y.kind || x.children.size() != y.children.size())
      return false;
    for (size_t j = 0; j < x.children.size(); ++j)
      if (x.children[j].name != y.children[j].name ||
          x.children[j].optional != y.children[j].optional)
        return false;
  }

  if (a.cross_tree.size() != b.cross_tree.size()) return false;
  for (size_t i = 0; i < a.cross_tree.size(); ++i)
    if (a.cross_tree[i].kind != b.cross_tree[i].kind || a.cross_tree[i].lhs != b.cross_tree[i].lhs ||
        a.cross_tree[i].rhs != b.cross_tree[i].rhs)
      return false;

  if (a.quantitative.size() != b.quantitative.size()) return false;
  for (size_t i = 0; i < a.quantitative.size(); ++i)
    if (!bool_equal(a.quantitative[i].formula, b.quantitative[i].formula)) return false;

  if (a.action_constraints.size() != b.action_constraints.size()) return false;
  for (size_t i = 0; i < a.action_constraints.size(); ++i) {
    const auto& x = a.action_constraints[i];
    const auto& y = b.action_constraints[i];
    if (x.target != y.target || x.name != y.name || !bool_equal(x.formula, y.formula))
      return false;
  }

  if (a.process_defs.size() != b.process_defs.size()) return false;
  for (size_t i = 0; i < a.process_defs.size(); ++i)
    if (a.process_defs[i].name != b.process_defs[i].name ||
        !term_equal(a.process_defs[i].term, b.process_defs[i].term))
      return false;

  if (a.process_diagrams.size() != b.process_diagrams.size()) return false;
  for (size_t i = 0; i < a.process_diagrams.size(); ++i) {
    const auto& x = a.process_diagrams[i];
    const auto& y = b.process_diagrams[i];
    if (x.name != y.name || !names_equal(x.states, y.states) ||
        x.transitions.size() != y.transitions.size())
      return false;
    for (size_t j = 0; j < x.transitions.size(); ++j) {
      const auto& s = x.transitions[j];
      const auto& t = y.transitions[j];
      if (s.src != t.src || s.dst != t.dst || s.rate != t.rate ||
          !action_equal(s.action, t.action) || s.updates.size() != t.updates.size())
        return false;
      for (size_t k = 0; k < s.updates.size(); ++k)
        if (s.updates[k].var != t.updates[k].var ||
            !arith_equal(s.updates[k].value, t.updates[k].value))
          return false;
    }
  }
  return true;
}

inline bool analysis_equal(const AnalysisRequest& a, const AnalysisRequest& b) {
  if (a.kind != b.kind || a.from != b.from || a.to != b.to || a.by != b.by) return false;
  if (a.default_delta != b.default_delta || a.alpha != b.alpha ||
      a.parallelism != b.parallelism)
    return false;
  if (!!a.condition != !!b.condition) return false;
  if (a.condition && !bool_equal(a.condition, b.condition)) return false;
  if (a.observations.size() != b.observations.size()) return false;
  for (size_t i = 0; i < a.observations.size(); ++i) {
    const auto& x = a.observations[i];
    const auto& y = b.observations[i];
    if (x.delta != y.delta || !!x.expr != !!y.expr || !!x.formula != !!y.formula) return false;
    if (x.expr && !arith_equal(x.expr, y.expr)) return false;
    if (x.formula && !bool_equal(x.formula, y.formula)) return false;
  }
  return true;
}

}  // namespace qflan
