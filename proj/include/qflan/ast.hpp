#pragma once

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qflan/diagnostics.hpp"

namespace qflan {

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class ArithOp { Add, Sub, Mul, Div };
enum class CmpOp { Lt, Le, Eq, Ge, Gt, Ne };

struct ArithExpr;
using ArithPtr = std::shared_ptr<const ArithExpr>;

// Arithmetic terms: literals, variables, feature indicators (1 if installed),
// the step counter, predicate applications pred(Feature), unary minus and the
// four binary operators.
struct ArithExpr {
  enum class Kind { Number, Variable, Feature, Steps, Predicate, Neg, Bin };
  Kind kind = Kind::Number;
  double number = 0;
  std::string name;     // Variable / Feature / Predicate name
  std::string feature;  // Predicate argument
  ArithOp op = ArithOp::Add;
  ArithPtr lhs, rhs;  // Bin; Neg uses lhs only
  SourceLoc loc;
};

inline ArithPtr num(double v, SourceLoc loc = {}) {
  auto e = std::make_shared<ArithExpr>();
  e->kind = ArithExpr::Kind::Number;
  e->number = v;
  e->loc = loc;
  return e;
}
inline ArithPtr var_ref(std::string name, SourceLoc loc = {}) {
  auto e = std::make_shared<ArithExpr>();
  e->kind = ArithExpr::Kind::Variable;
  e->name = std::move(name);
  e->loc = loc;
  return e;
}
inline ArithPtr feature_ref(std::string name, SourceLoc loc = {}) {
  auto e = std::make_shared<ArithExpr>();
  e->kind = ArithExpr::Kind::Feature;
  e->name = std::move(name);
  e->loc = loc;
  return e;
}
inline ArithPtr steps_ref(SourceLoc loc = {}) {
  auto e = std::make_shared<ArithExpr>();
  e->kind = ArithExpr::Kind::Steps;
  e->loc = loc;
  return e;
}
inline ArithPtr pred_ref(std::string pred, std::string feature, SourceLoc loc = {}) {
  auto e = std::make_shared<ArithExpr>();
  e->kind = ArithExpr::Kind::Predicate;
  e->name = std::move(pred);
  e->feature = std::move(feature);
  e->loc = loc;
  return e;
}
inline ArithPtr neg(ArithPtr x, SourceLoc loc = {}) {
  auto e = std::make_shared<ArithExpr>();
  e->kind = ArithExpr::Kind::Neg;
  e->lhs = std::move(x);
  e->loc = loc;
  return e;
}
inline ArithPtr bin(ArithOp op, ArithPtr a, ArithPtr b, SourceLoc loc = {}) {
  auto e = std::make_shared<ArithExpr>();
  e->kind = ArithExpr::Kind::Bin;
  e->op = op;
  e->lhs = std::move(a);
  e->rhs = std::move(b);
  e->loc = loc;
  return e;
}

struct BoolFormula;
using BoolPtr = std::shared_ptr<const BoolFormula>;

// Boolean formulas: literals, has(F) atoms, arithmetic comparisons, and the
// connectives !, &, |, -> (implication, right associative, lowest precedence).
struct BoolFormula {
  enum class Kind { Lit, Has, Cmp, Not, And, Or, Implies };
  Kind kind = Kind::Lit;
  bool value = false;
  std::string feature;  // Has
  CmpOp cmp = CmpOp::Lt;
  ArithPtr e1, e2;  // Cmp
  BoolPtr f1, f2;   // Not uses f1 only
  SourceLoc loc;
};

inline BoolPtr bool_lit(bool v, SourceLoc loc = {}) {
  auto f = std::make_shared<BoolFormula>();
  f->kind = BoolFormula::Kind::Lit;
  f->value = v;
  f->loc = loc;
  return f;
}
inline BoolPtr has(std::string feature, SourceLoc loc = {}) {
  auto f = std::make_shared<BoolFormula>();
  f->kind = BoolFormula::Kind::Has;
  f->feature = std::move(feature);
  f->loc = loc;
  return f;
}
inline BoolPtr cmp(CmpOp op, ArithPtr a, ArithPtr b, SourceLoc loc = {}) {
  auto f = std::make_shared<BoolFormula>();
  f->kind = BoolFormula::Kind::Cmp;
  f->cmp = op;
  f->e1 = std::move(a);
  f->e2 = std::move(b);
  f->loc = loc;
  return f;
}
inline BoolPtr bnot(BoolPtr x, SourceLoc loc = {}) {
  auto f = std::make_shared<BoolFormula>();
  f->kind = BoolFormula::Kind::Not;
  f->f1 = std::move(x);
  f->loc = loc;
  return f;
}
inline BoolPtr make_bin(BoolFormula::Kind kind, BoolPtr a, BoolPtr b, SourceLoc loc = {}) {
  auto f = std::make_shared<BoolFormula>();
  f->kind = kind;
  f->f1 = std::move(a);
  f->f2 = std::move(b);
  f->loc = loc;
  return f;
}
inline BoolPtr band(BoolPtr a, BoolPtr b, SourceLoc loc = {}) {
  return make_bin(BoolFormula::Kind::And, std::move(a), std::move(b), loc);
}
inline BoolPtr bor(BoolPtr a, BoolPtr b, SourceLoc loc = {}) {
  return make_bin(BoolFormula::Kind::Or, std::move(a), std::move(b), loc);
}
inline BoolPtr implies(BoolPtr a, BoolPtr b, SourceLoc loc = {}) {
  return make_bin(BoolFormula::Kind::Implies, std::move(a), std::move(b), loc);
}

// Structural equality (ignores source locations).
inline bool arith_equal(const ArithPtr& a, const ArithPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ArithExpr::Kind::Number: return a->number == b->number;
    case ArithExpr::Kind::Variable:
    case ArithExpr::Kind::Feature: return a->name == b->name;
    case ArithExpr::Kind::Steps: return true;
    case ArithExpr::Kind::Predicate: return a->name == b->name && a->feature == b->feature;
    case ArithExpr::Kind::Neg: return arith_equal(a->lhs, b->lhs);
    case ArithExpr::Kind::Bin:
      return a->op == b->op && arith_equal(a->lhs, b->lhs) && arith_equal(a->rhs, b->rhs);
  }
  return false;
}

inline bool bool_equal(const BoolPtr& a, const BoolPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case BoolFormula::Kind::Lit: return a->value == b->value;
    case BoolFormula::Kind::Has: return a->feature == b->feature;
    case BoolFormula::Kind::Cmp:
      return a->cmp == b->cmp && arith_equal(a->e1, b->e1) && arith_equal(a->e2, b->e2);
    case BoolFormula::Kind::Not: return bool_equal(a->f1, b->f1);
    case BoolFormula::Kind::And:
    case BoolFormula::Kind::Or:
    case BoolFormula::Kind::Implies:
      return bool_equal(a->f1, b->f1) && bool_equal(a->f2, b->f2);
  }
  return false;
}

// Printing. Binary arithmetic is left associative; parentheses are emitted
// exactly where reparsing would otherwise change the tree shape.
inline int arith_prec(const ArithExpr& e) {
  if (e.kind == ArithExpr::Kind::Bin)
    return (e.op == ArithOp::Add || e.op == ArithOp::Sub) ? 1 : 2;
  if (e.kind == ArithExpr::Kind::Neg) return 3;
  return 4;
}

inline std::string to_string(const ArithPtr& e);

inline std::string arith_child(const ArithPtr& child, int parent_prec, bool right) {
  int p = arith_prec(*child);
  bool parens = right ? p <= parent_prec : p < parent_prec;
  std::string s = to_string(child);
  return parens ? "(" + s + ")" : s;
}

inline std::string to_string(const ArithPtr& e) {
  switch (e->kind) {
    case ArithExpr::Kind::Number: return format_number(e->number);
    case ArithExpr::Kind::Variable:
    case ArithExpr::Kind::Feature: return e->name;
    case ArithExpr::Kind::Steps: return "steps";
    case ArithExpr::Kind::Predicate: return e->name + "(" + e->feature + ")";
    case ArithExpr::Kind::Neg: {
      int p = arith_prec(*e->lhs);
      std::string s = to_string(e->lhs);
      return p < 3 ? "-(" + s + ")" : "-" + s;
    }
    case ArithExpr::Kind::Bin: {
      static const char* ops[] = {" + ", " - ", " * ", " / "};
      int p = arith_prec(*e);
      return arith_child(e->lhs, p, false) + ops[int(e->op)] + arith_child(e->rhs, p, true);
    }
  }
  return "";
}

inline const char* cmp_str(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return " < ";
    case CmpOp::Le: return " <= ";
    case CmpOp::Eq: return " == ";
    case CmpOp::Ge: return " >= ";
    case CmpOp::Gt: return " > ";
    case CmpOp::Ne: return " != ";
  }
  return "";
}

// Precedence: -> 0 (right assoc), | 1, & 2, ! 3, atoms 4.
inline int bool_prec(const BoolFormula& f) {
  switch (f.kind) {
    case BoolFormula::Kind::Implies: return 0;
    case BoolFormula::Kind::Or: return 1;
    case BoolFormula::Kind::And: return 2;
    case BoolFormula::Kind::Not: return 3;
    default: return 4;
  }
}

inline std::string to_string(const BoolPtr& f);

inline std::string bool_child(const BoolPtr& child, int parent_prec, bool strict) {
  int p = bool_prec(*child);
  bool parens = strict ? p <= parent_prec : p < parent_prec;
  std::string s = to_string(child);
  return parens ? "(" + s + ")" : s;
}

inline std::string to_string(const BoolPtr& f) {
  switch (f->kind) {
    case BoolFormula::Kind::Lit: return f->value ? "true" : "false";
    case BoolFormula::Kind::Has: return "has(" + f->feature + ")";
    case BoolFormula::Kind::Cmp: return to_string(f->e1) + cmp_str(f->cmp) + to_string(f->e2);
    case BoolFormula::Kind::Not: return "!" + bool_child(f->f1, 3, true);
    case BoolFormula::Kind::And: return bool_child(f->f1, 2, false) + " & " + bool_child(f->f2, 2, true);
    case BoolFormula::Kind::Or: return bool_child(f->f1, 1, false) + " | " + bool_child(f->f2, 1, true);
    case BoolFormula::Kind::Implies:
      return bool_child(f->f1, 0, true) + " -> " + bool_child(f->f2, 0, false);
  }
  return "";
}

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

struct Action {
  enum class Kind { Feature, User, Install, Uninstall, Replace, Ask };
  Kind kind = Kind::User;
  std::string name;      // Feature / User / Install / Uninstall target
  std::string from, to;  // Replace
  BoolPtr guard;         // Ask
  SourceLoc loc;
};

inline std::string label(const Action& a) {
  switch (a.kind) {
    case Action::Kind::Feature:
    case Action::Kind::User: return a.name;
    case Action::Kind::Install: return "install(" + a.name + ")";
    case Action::Kind::Uninstall: return "uninstall(" + a.name + ")";
    case Action::Kind::Replace: return "replace(" + a.from + ", " + a.to + ")";
    case Action::Kind::Ask: return "ask({" + to_string(a.guard) + "})";
  }
  return "";
}

inline bool action_equal(const Action& a, const Action& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Action::Kind::Feature:
    case Action::Kind::User:
    case Action::Kind::Install:
    case Action::Kind::Uninstall: return a.name == b.name;
    case Action::Kind::Replace: return a.from == b.from && a.to == b.to;
    case Action::Kind::Ask: return bool_equal(a.guard, b.guard);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Process terms (surface syntax)
// ---------------------------------------------------------------------------

struct Update {
  std::string var;
  ArithPtr value;
  SourceLoc loc;
};

inline std::string to_string(const std::vector<Update>& updates) {
  std::string s = "{";
  for (size_t i = 0; i < updates.size(); ++i) {
    if (i) s += " ,";
    s += " " + updates[i].var + " = " + to_string(updates[i].value);
  }
  s += " }";
  return s;
}

struct ProcessTerm;
using TermPtr = std::shared_ptr<const ProcessTerm>;

struct ProcessTerm {
  enum class Kind { Nil, Prefix, Choice, Par, Invoke };
  Kind kind = Kind::Nil;
  Action action;  // Prefix
  double rate = 0;
  std::vector<Update> updates;
  TermPtr cont;                    // Prefix continuation
  std::vector<TermPtr> children;   // Choice / Par, flattened
  std::string name;                // Invoke
  SourceLoc loc;
};

inline TermPtr nil_term(SourceLoc loc = {}) {
  auto t = std::make_shared<ProcessTerm>();
  t->kind = ProcessTerm::Kind::Nil;
  t->loc = loc;
  return t;
}
inline TermPtr invoke(std::string name, SourceLoc loc = {}) {
  auto t = std::make_shared<ProcessTerm>();
  t->kind = ProcessTerm::Kind::Invoke;
  t->name = std::move(name);
  t->loc = loc;
  return t;
}
inline TermPtr prefix(Action a, double rate, std::vector<Update> updates, TermPtr cont,
                      SourceLoc loc = {}) {
  auto t = std::make_shared<ProcessTerm>();
  t->kind = ProcessTerm::Kind::Prefix;
  t->action = std::move(a);
  t->rate = rate;
  t->updates = std::move(updates);
  t->cont = std::move(cont);
  t->loc = loc;
  return t;
}
inline TermPtr combine(ProcessTerm::Kind kind, std::vector<TermPtr> children, SourceLoc loc = {}) {
  auto t = std::make_shared<ProcessTerm>();
  t->kind = kind;
  t->children = std::move(children);
  t->loc = loc;
  return t;
}

inline bool term_equal(const TermPtr& a, const TermPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ProcessTerm::Kind::Nil: return true;
    case ProcessTerm::Kind::Invoke: return a->name == b->name;
    case ProcessTerm::Kind::Prefix: {
      if (!action_equal(a->action, b->action) || a->rate != b->rate) return false;
      if (a->updates.size() != b->updates.size()) return false;
      for (size_t i = 0; i < a->updates.size(); ++i)
        if (a->updates[i].var != b->updates[i].var ||
            !arith_equal(a->updates[i].value, b->updates[i].value))
          return false;
      return term_equal(a->cont, b->cont);
    }
    case ProcessTerm::Kind::Choice:
    case ProcessTerm::Kind::Par: {
      if (a->children.size() != b->children.size()) return false;
      for (size_t i = 0; i < a->children.size(); ++i)
        if (!term_equal(a->children[i], b->children[i])) return false;
      return true;
    }
  }
  return false;
}

inline std::string to_string(const TermPtr& t);

inline std::string term_child(const TermPtr& child, int parent_prec) {
  // Precedence: Par 1, Choice 2, Prefix/atoms 3.
  int p = child->kind == ProcessTerm::Kind::Par      ? 1
          : child->kind == ProcessTerm::Kind::Choice ? 2
                                                     : 3;
  std::string s = to_string(child);
  return p < parent_prec ? "(" + s + ")" : s;
}

inline std::string to_string(const TermPtr& t) {
  switch (t->kind) {
    case ProcessTerm::Kind::Nil: return "nil";
    case ProcessTerm::Kind::Invoke: return t->name;
    case ProcessTerm::Kind::Prefix: {
      std::string s = "(" + label(t->action) + " , " + format_number(t->rate);
      if (!t->updates.empty()) s += " , " + to_string(t->updates);
      s += ")";
      if (t->cont->kind == ProcessTerm::Kind::Invoke || t->cont->kind == ProcessTerm::Kind::Nil)
        s += "." + to_string(t->cont);
      else
        s += ".(" + to_string(t->cont) + ")";
      return s;
    }
    case ProcessTerm::Kind::Choice: {
      std::string s;
      for (size_t i = 0; i < t->children.size(); ++i) {
        if (i) s += " + ";
        s += term_child(t->children[i], 2);
      }
      return s;
    }
    case ProcessTerm::Kind::Par: {
      std::string s;
      for (size_t i = 0; i < t->children.size(); ++i) {
        if (i) s += " || ";
        s += term_child(t->children[i], 1);
      }
      return s;
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// Specification blocks
// ---------------------------------------------------------------------------

struct Named {
  std::string name;
  SourceLoc loc;
};

struct PredicateDecl {
  std::string name;
  std::vector<std::pair<std::string, double>> values;  // declaration order
  SourceLoc loc;
};

struct VarDecl {
  std::string name;
  double init = 0;
  SourceLoc loc;
};

struct HierarchicalRelation {
  enum class Kind { And, Or, Xor };
  struct Child {
    std::string name;
    bool optional = false;  // meaningful for And only
  };
  std::string parent;
  Kind kind = Kind::And;
  std::vector<Child> children;
  SourceLoc loc;
};

struct CrossTreeConstraint {
  enum class Kind { Requires, Excludes };
  Kind kind = Kind::Requires;
  std::string lhs, rhs;
  SourceLoc loc;
};

struct QuantConstraint {
  BoolPtr formula;
  SourceLoc loc;
};

struct ActionConstraint {
  enum class Target { Name, AnyInstall, AnyUninstall, AnyReplace };
  Target target = Target::Name;
  std::string name;  // for Target::Name
  BoolPtr formula;
  SourceLoc loc;
};

inline std::string target_label(const ActionConstraint& c) {
  switch (c.target) {
    case ActionConstraint::Target::Name: return c.name;
    case ActionConstraint::Target::AnyInstall: return "install(...)";
    case ActionConstraint::Target::AnyUninstall: return "uninstall(...)";
    case ActionConstraint::Target::AnyReplace: return "replace(...)";
  }
  return "";
}

struct DiagramTransition {
  std::string src;
  Action action;
  double rate = 0;
  std::vector<Update> updates;
  std::string dst;
  SourceLoc loc;
};

struct ProcessDiagram {
  std::string name;
  std::vector<Named> states;
  std::vector<DiagramTransition> transitions;
  SourceLoc loc;
};

struct ProcessDef {
  std::string name;
  TermPtr term;
  SourceLoc loc;
};

struct Specification {
  std::vector<Named> abstract_features;
  std::vector<Named> concrete_features;
  std::vector<PredicateDecl> predicates;
  std::vector<VarDecl> variables;
  std::vector<Named> actions;
  std::vector<HierarchicalRelation> diagram;
  std::vector<CrossTreeConstraint> cross_tree;
  std::vector<QuantConstraint> quantitative;
  std::vector<ActionConstraint> action_constraints;
  std::vector<ProcessDef> process_defs;
  std::vector<ProcessDiagram> process_diagrams;
  std::vector<Named> init_features;
  std::vector<Named> init_processes;
  SourceLoc init_loc;

  bool has_feature(const std::string& n) const {
    for (const auto& f : abstract_features)
      if (f.name == n) return true;
    for (const auto& f : concrete_features)
      if (f.name == n) return true;
    return false;
  }
  bool is_abstract(const std::string& n) const {
    for (const auto& f : abstract_features)
      if (f.name == n) return true;
    return false;
  }
  bool has_variable(const std::string& n) const {
    for (const auto& v : variables)
      if (v.name == n) return true;
    return false;
  }
  bool has_action(const std::string& n) const {
    for (const auto& a : actions)
      if (a.name == n) return true;
    return false;
  }
  // Predicate value of a concrete feature; defaults to 0 when unlisted.
  double predicate_value(const std::string& pred, const std::string& feature) const {
    for (const auto& p : predicates)
      if (p.name == pred) {
        for (const auto& [f, v] : p.values)
          if (f == feature) return v;
      }
    return 0;
  }
};

// ---------------------------------------------------------------------------
// Analysis requests
// ---------------------------------------------------------------------------

struct Observation {
  // Exactly one of expr / formula is set. Boolean observations evaluate to
  // 1.0 / 0.0.
  ArithPtr expr;
  BoolPtr formula;
  std::optional<double> delta;
  SourceLoc loc;

  std::string label() const { return expr ? to_string(expr) : to_string(formula); }
};

struct AnalysisRequest {
  enum class Kind { When, For, Until };
  Kind kind = Kind::When;
  BoolPtr condition;  // When / Until
  double from = 0, to = 0, by = 1;  // For
  std::vector<Observation> observations;
  double default_delta = 0;
  double alpha = 0;
  int parallelism = 1;
  SourceLoc loc;

  double delta_for(size_t obs_index) const {
    const auto& d = observations[obs_index].delta;
    return d ? *d : default_delta;
  }
};

}  // namespace qflan
