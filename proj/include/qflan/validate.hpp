#pragma once

#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "qflan/ast.hpp"

namespace qflan {

inline const std::unordered_set<std::string>& reserved_words() {
  static const std::unordered_set<std::string> words = {
      "begin", "end", "nil", "true", "false", "has", "do", "install", "uninstall",
      "replace", "ask", "steps", "step", "requires", "excludes", "process", "processes",
      "states", "transitions", "init", "installedFeatures", "initialProcesses", "eval",
      "when", "for", "until", "from", "to", "by", "delta", "default", "alpha",
      "parallelism", "query", "abstract", "concrete", "features", "feature", "predicates",
      "variables", "actions", "diagram", "cross", "tree", "constraints", "quantitative",
      "action", "analysis", "and", "or"};
  return words;
}

namespace detail {

struct NameTables {
  std::unordered_set<std::string> features;
  std::unordered_set<std::string> abstract_set;
  std::unordered_set<std::string> concrete_set;
  std::unordered_set<std::string> variables;
  std::unordered_set<std::string> actions;
  std::unordered_set<std::string> predicates;
  std::unordered_set<std::string> processes;
};

inline NameTables name_tables(const Specification& spec) {
  NameTables t;
  for (const auto& f : spec.abstract_features) {
    t.features.insert(f.name);
    t.abstract_set.insert(f.name);
  }
  for (const auto& f : spec.concrete_features) {
    t.features.insert(f.name);
    t.concrete_set.insert(f.name);
  }
  for (const auto& v : spec.variables) t.variables.insert(v.name);
  for (const auto& a : spec.actions) t.actions.insert(a.name);
  for (const auto& p : spec.predicates) t.predicates.insert(p.name);
  for (const auto& d : spec.process_defs) t.processes.insert(d.name);
  for (const auto& d : spec.process_diagrams) t.processes.insert(d.name);
  return t;
}

inline void check_arith(const ArithPtr& e, const NameTables& t, ValidationReport& report) {
  if (!e) return;
  switch (e->kind) {
    case ArithExpr::Kind::Number:
    case ArithExpr::Kind::Steps:
    case ArithExpr::Kind::Feature: return;
    case ArithExpr::Kind::Variable:
      if (!t.variables.count(e->name) && !t.features.count(e->name))
        report.error("undeclared name '" + e->name + "'", e->loc);
      return;
    case ArithExpr::Kind::Predicate:
      if (!t.predicates.count(e->name))
        report.error("undeclared predicate '" + e->name + "'", e->loc);
      if (!t.features.count(e->feature))
        report.error("undeclared feature '" + e->feature + "'", e->loc);
      return;
    case ArithExpr::Kind::Neg: check_arith(e->lhs, t, report); return;
    case ArithExpr::Kind::Bin:
      check_arith(e->lhs, t, report);
      check_arith(e->rhs, t, report);
      return;
  }
}

inline void check_formula(const BoolPtr& f, const NameTables& t, ValidationReport& report) {
  if (!f) return;
  switch (f->kind) {
    case BoolFormula::Kind::Lit: return;
    case BoolFormula::Kind::Has:
      if (!t.features.count(f->feature))
        report.error("undeclared feature '" + f->feature + "' in has()", f->loc);
      return;
    case BoolFormula::Kind::Cmp:
      check_arith(f->e1, t, report);
      check_arith(f->e2, t, report);
      return;
    case BoolFormula::Kind::Not: check_formula(f->f1, t, report); return;
    case BoolFormula::Kind::And:
    case BoolFormula::Kind::Or:
    case BoolFormula::Kind::Implies:
      check_formula(f->f1, t, report);
      check_formula(f->f2, t, report);
      return;
  }
}

inline void check_action(const Action& a, const NameTables& t, ValidationReport& report) {
  switch (a.kind) {
    case Action::Kind::User:
    case Action::Kind::Feature:
      if (t.abstract_set.count(a.name))
        report.error("abstract feature '" + a.name + "' cannot be used as an action", a.loc);
      else if (!t.actions.count(a.name) && !t.concrete_set.count(a.name))
        report.error("'" + a.name + "' is neither a declared action nor a concrete feature",
                     a.loc);
      return;
    case Action::Kind::Install:
    case Action::Kind::Uninstall:
      if (!t.concrete_set.count(a.name))
        report.error("store action needs a declared concrete feature, got '" + a.name + "'",
                     a.loc);
      return;
    case Action::Kind::Replace:
      if (!t.concrete_set.count(a.from))
        report.error("store action needs a declared concrete feature, got '" + a.from + "'",
                     a.loc);
      if (!t.concrete_set.count(a.to))
        report.error("store action needs a declared concrete feature, got '" + a.to + "'", a.loc);
      if (a.from == a.to) report.error("replace needs two distinct features", a.loc);
      return;
    case Action::Kind::Ask: check_formula(a.guard, t, report); return;
  }
}

inline void check_updates(const std::vector<Update>& updates, const NameTables& t,
                          ValidationReport& report) {
  std::unordered_set<std::string> written;
  for (const auto& u : updates) {
    if (!t.variables.count(u.var))
      report.error("update assigns undeclared variable '" + u.var + "'", u.loc);
    if (!written.insert(u.var).second)
      report.error("update assigns variable '" + u.var + "' twice", u.loc);
    check_arith(u.value, t, report);
  }
}

inline bool arith_mentions_var(const ArithPtr& e, const std::string& var) {
  if (!e) return false;
  switch (e->kind) {
    case ArithExpr::Kind::Variable: return e->name == var;
    case ArithExpr::Kind::Neg: return arith_mentions_var(e->lhs, var);
    case ArithExpr::Kind::Bin:
      return arith_mentions_var(e->lhs, var) || arith_mentions_var(e->rhs, var);
    default: return false;
  }
}

inline void warn_unbounded(const std::vector<Update>& updates, ValidationReport& report) {
  for (const auto& u : updates) {
    bool identity = u.value->kind == ArithExpr::Kind::Variable && u.value->name == u.var;
    if (!identity && arith_mentions_var(u.value, u.var))
      report.warn("update of '" + u.var + "' depends on itself; the variable may grow "
                  "without bound and make the state space infinite",
                  u.loc);
  }
}

inline void check_process_term(const TermPtr& term, const NameTables& t,
                               ValidationReport& report) {
  switch (term->kind) {
    case ProcessTerm::Kind::Nil: return;
    case ProcessTerm::Kind::Invoke:
      if (!t.processes.count(term->name))
        report.error("invocation of undefined process '" + term->name + "'", term->loc);
      return;
    case ProcessTerm::Kind::Prefix:
      check_action(term->action, t, report);
      if (!(term->rate > 0)) report.error("rate must be positive", term->loc);
      check_updates(term->updates, t, report);
      warn_unbounded(term->updates, report);
      check_process_term(term->cont, t, report);
      return;
    case ProcessTerm::Kind::Choice:
    case ProcessTerm::Kind::Par:
      for (const auto& c : term->children) check_process_term(c, t, report);
      return;
  }
}

}  // namespace detail

// Structural validation: declarations, namespaces, diagram shape, reference
// resolution, rates. Store-level consistency of the initial state is a
// separate concern (see store.hpp and the CLI validate command).
inline ValidationReport validate_specification(const Specification& spec) {
  ValidationReport report;
  const auto t = detail::name_tables(spec);

  auto check_name = [&](const Named& n, const char* what) {
    if (reserved_words().count(n.name))
      report.error(std::string(what) + " name '" + n.name + "' is a reserved word", n.loc);
  };

  // Declarations and namespace disjointness.
  std::unordered_map<std::string, const char*> owner;
  auto declare = [&](const Named& n, const char* space, bool shared_namespace) {
    check_name(n, space);
    if (!shared_namespace) return;
    auto [it, fresh] = owner.emplace(n.name, space);
    if (!fresh)
      report.error(std::string(space) + " '" + n.name + "' collides with " + it->second +
                       " of the same name",
                   n.loc);
  };
  for (const auto& f : spec.abstract_features) declare(f, "feature", true);
  for (const auto& f : spec.concrete_features) declare(f, "feature", true);
  for (const auto& v : spec.variables) declare({v.name, v.loc}, "variable", true);
  for (const auto& a : spec.actions) declare(a, "action", true);
  for (const auto& p : spec.predicates) {
    check_name({p.name, p.loc}, "predicate");
    for (const auto& [f, v] : p.values) {
      if (!t.features.count(f))
        report.error("predicate '" + p.name + "' lists undeclared feature '" + f + "'", p.loc);
      else if (t.abstract_set.count(f))
        report.error("predicate '" + p.name + "' assigns a value to abstract feature '" + f +
                         "'; abstract values are derived",
                     p.loc);
    }
    std::unordered_set<std::string> seen;
    for (const auto& [f, v] : p.values)
      if (!seen.insert(f).second)
        report.error("predicate '" + p.name + "' lists feature '" + f + "' twice", p.loc);
  }
  {
    std::unordered_set<std::string> seen;
    for (const auto& p : spec.predicates)
      if (!seen.insert(p.name).second)
        report.error("duplicate predicate '" + p.name + "'", p.loc);
  }

  // Feature diagram: forest with unique parent relations and no cycles.
  std::unordered_map<std::string, std::string> parent_of;
  std::unordered_set<std::string> relation_parents;
  for (const auto& rel : spec.diagram) {
    if (!t.features.count(rel.parent))
      report.error("relation parent '" + rel.parent + "' is not a declared feature", rel.loc);
    if (!relation_parents.insert(rel.parent).second)
      report.error("feature '" + rel.parent + "' has more than one relation", rel.loc);
    std::unordered_set<std::string> child_seen;
    for (const auto& c : rel.children) {
      if (!t.features.count(c.name)) {
        report.error("relation child '" + c.name + "' is not a declared feature", rel.loc);
        continue;
      }
      if (!child_seen.insert(c.name).second)
        report.error("feature '" + c.name + "' appears twice in one relation", rel.loc);
      auto [it, fresh] = parent_of.emplace(c.name, rel.parent);
      if (!fresh)
        report.error("feature '" + c.name + "' has two parents ('" + it->second + "' and '" +
                         rel.parent + "')",
                     rel.loc);
    }
  }
  for (const auto& rel : spec.diagram) {
    // Walk up from the parent; revisiting the parent means a cycle.
    std::string cur = rel.parent;
    size_t hops = 0;
    while (parent_of.count(cur) && hops++ <= parent_of.size()) {
      cur = parent_of[cur];
      if (cur == rel.parent) {
        report.error("feature diagram contains a cycle through '" + rel.parent + "'", rel.loc);
        break;
      }
    }
  }

  for (const auto& c : spec.cross_tree) {
    if (!t.features.count(c.lhs))
      report.error("cross-tree constraint names undeclared feature '" + c.lhs + "'", c.loc);
    if (!t.features.count(c.rhs))
      report.error("cross-tree constraint names undeclared feature '" + c.rhs + "'", c.loc);
    if (c.lhs == c.rhs) report.error("cross-tree constraint relates a feature to itself", c.loc);
  }

  for (const auto& q : spec.quantitative) detail::check_formula(q.formula, t, report);

  for (const auto& c : spec.action_constraints) {
    if (c.target == ActionConstraint::Target::Name && !t.actions.count(c.name) &&
        !t.concrete_set.count(c.name))
      report.error("action constraint targets '" + c.name +
                       "', which is neither a declared action nor a concrete feature",
                   c.loc);
    detail::check_formula(c.formula, t, report);
  }

  // Behavior.
  {
    std::unordered_set<std::string> seen;
    for (const auto& d : spec.process_defs) {
      check_name({d.name, d.loc}, "process");
      if (!seen.insert(d.name).second) report.error("duplicate process '" + d.name + "'", d.loc);
      detail::check_process_term(d.term, t, report);
    }
    for (const auto& d : spec.process_diagrams) {
      check_name({d.name, d.loc}, "process");
      if (!seen.insert(d.name).second) report.error("duplicate process '" + d.name + "'", d.loc);
      if (d.states.empty()) report.error("process '" + d.name + "' has no states", d.loc);
      std::unordered_set<std::string> states;
      for (const auto& s : d.states) {
        check_name(s, "state");
        if (!states.insert(s.name).second)
          report.error("duplicate state '" + s.name + "' in process '" + d.name + "'", s.loc);
      }
      for (const auto& tr : d.transitions) {
        if (!states.count(tr.src))
          report.error("transition source '" + tr.src + "' is not a state of '" + d.name + "'",
                       tr.loc);
        if (!states.count(tr.dst))
          report.error("transition target '" + tr.dst + "' is not a state of '" + d.name + "'",
                       tr.loc);
        detail::check_action(tr.action, t, report);
        if (!(tr.rate > 0)) report.error("rate must be positive", tr.loc);
        detail::check_updates(tr.updates, t, report);
        detail::warn_unbounded(tr.updates, report);
      }
    }
  }

  // Init.
  if (spec.init_processes.empty()) {
    report.error("missing init block (installedFeatures and initialProcesses)", spec.init_loc);
  } else {
    std::unordered_set<std::string> seen;
    for (const auto& f : spec.init_features) {
      if (!t.features.count(f.name))
        report.error("initial feature '" + f.name + "' is not declared", f.loc);
      else if (t.abstract_set.count(f.name))
        report.error("initial feature '" + f.name +
                         "' is abstract; abstract features are installed by closure",
                     f.loc);
      if (!seen.insert(f.name).second)
        report.error("initial feature '" + f.name + "' listed twice", f.loc);
    }
    for (const auto& p : spec.init_processes)
      if (!t.processes.count(p.name))
        report.error("initial process '" + p.name + "' is not defined", p.loc);
  }

  return report;
}

// Resolves an analysis request against a specification.
inline ValidationReport validate_analysis(const AnalysisRequest& req, const Specification& spec) {
  ValidationReport report;
  const auto t = detail::name_tables(spec);
  if (req.condition) detail::check_formula(req.condition, t, report);
  for (const auto& obs : req.observations) {
    if (obs.expr) detail::check_arith(obs.expr, t, report);
    if (obs.formula) detail::check_formula(obs.formula, t, report);
  }
  if (req.kind == AnalysisRequest::Kind::For) {
    auto integral = [](double v) { return v == static_cast<long long>(v); };
    if (!integral(req.from) || !integral(req.to) || !integral(req.by))
      report.error("for-query bounds must be integers (step counter grid)", req.loc);
  }
  return report;
}

}  // namespace qflan
