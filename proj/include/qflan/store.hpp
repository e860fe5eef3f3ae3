#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "qflan/ast.hpp"
#include "qflan/process.hpp"
#include "qflan/validate.hpp"

namespace qflan {

// Runtime evaluation failure (division by zero and friends).
struct EvalError : std::runtime_error {
  SourceLoc loc;
  explicit EvalError(const std::string& msg, SourceLoc l = {}) : std::runtime_error(msg), loc(l) {}
};

// Analysis-level failure (divergence, state-space overflow, bad bindings).
struct AnalysisError : std::runtime_error {
  explicit AnalysisError(const std::string& msg) : std::runtime_error(msg) {}
};

// Compiled arithmetic/boolean expression nodes. Expressions live in flat
// pools inside CompiledSpec and reference each other by index.
struct CArith {
  enum class Kind : uint8_t { Num, Var, Feat, Steps, Pred, Neg, Add, Sub, Mul, Div };
  Kind kind;
  int a = -1, b = -1;  // operand indices into the arith pool
  int sym = -1;        // var id (Var), feature id (Feat), predicate id (Pred)
  int feat = -1;       // predicate argument (Pred)
  double num = 0.0;
  SourceLoc loc;
};

struct CBool {
  enum class Kind : uint8_t { Lit, Has, Cmp, Not, And, Or, Implies };
  Kind kind;
  bool value = false;
  CmpOp cmp = CmpOp::Lt;
  int a = -1, b = -1;  // arith indices for Cmp, bool indices otherwise
  int feat = -1;
  SourceLoc loc;
};

// A compiled action occurrence.
struct CAction {
  Action::Kind kind = Action::Kind::User;
  int user = -1;           // user action id
  int feat = -1, feat2 = -1;
  int guard = -1;          // ask formula
  std::string text;        // display label, e.g. "install(GPS)"
};

struct CUpdate {
  int var = -1;
  int rhs = -1;
  std::string text;
};

struct CTerm;

// One syntactic action prefix in a compiled process body. Sites are the
// unit of admissibility caching: deps lists every symbol the executability
// and viability verdicts can depend on, writes every symbol firing the
// prefix can change.
struct PrefixSite {
  int id = -1;
  CAction action;
  double rate = 0.0;
  std::vector<CUpdate> updates;
  const CTerm* cont = nullptr;
  std::vector<int> exec_formulas;  // action constraints gating this action
  std::vector<int> deps;           // sorted symbol ids read by the verdict
  std::vector<int> writes;         // sorted symbol ids firing may change
  int label_id = -1;               // interned action label, used for ordering
};

struct CTerm {
  enum class Kind : uint8_t { Nil, Prefix, Choice, Par, Invoke };
  Kind kind = Kind::Nil;
  PrefixSite* site = nullptr;
  std::vector<const CTerm*> children;
  int process = -1;
  std::string key;  // canonical serialization, stable across runs
};

struct NamedConstraint {
  int formula = -1;
  std::string text;
  SourceLoc loc;
};

// Variable/feature/steps share one symbol id space:
//   feature f -> f,  variable v -> num_features + v,  steps -> last id.
// Move-only: compiled terms hold pointers into the arenas below, which stay
// valid across moves but not copies.
struct CompiledSpec {
  CompiledSpec() = default;
  CompiledSpec(const CompiledSpec&) = delete;
  CompiledSpec& operator=(const CompiledSpec&) = delete;
  CompiledSpec(CompiledSpec&&) = default;
  CompiledSpec& operator=(CompiledSpec&&) = default;

  // Features: abstract first, then concrete, both in declaration order.
  std::vector<std::string> feature_names;
  std::vector<uint8_t> feature_concrete;
  std::vector<int> feature_parent;                // -1 for roots
  std::vector<std::vector<int>> feature_children; // from hierarchical relations
  std::vector<std::vector<int>> feature_subtree;  // proper descendants

  std::vector<std::string> var_names;
  std::vector<double> var_init;

  std::vector<std::string> pred_names;
  std::vector<std::vector<double>> pred_values;  // [pred][feature], 0 default

  std::vector<std::string> user_actions;

  std::vector<CArith> arith_pool;
  std::vector<CBool> bool_pool;

  std::vector<NamedConstraint> constraints;       // hierarchical + cross-tree + quantitative
  std::vector<std::vector<int>> constraint_syms;  // read set per constraint

  // Action constraints, pre-resolved per target.
  std::vector<std::vector<int>> user_constraints;     // [user action id]
  std::vector<std::vector<int>> feature_constraints;  // [feature id], includes implicit has(f)
  std::vector<int> install_constraints, uninstall_constraints, replace_constraints;

  // Compiled processes.
  std::deque<CTerm> term_arena;
  std::deque<PrefixSite> site_arena;
  std::vector<std::string> process_names;
  std::vector<const CTerm*> process_bodies;
  std::map<std::string, int> process_index;  // includes diagram-name aliases

  std::vector<std::string> action_labels;  // by label_id, sorted

  std::vector<uint8_t> init_flags;
  std::vector<const CTerm*> init_components;

  std::map<std::string, int> feature_index, var_index, pred_index, user_index;

  int num_features() const { return static_cast<int>(feature_names.size()); }
  int num_vars() const { return static_cast<int>(var_names.size()); }
  int num_syms() const { return num_features() + num_vars() + 1; }
  int var_sym(int v) const { return num_features() + v; }
  int steps_sym() const { return num_features() + num_vars(); }

  int feature_id(const std::string& n) const {
    auto it = feature_index.find(n);
    return it == feature_index.end() ? -1 : it->second;
  }
  int var_id(const std::string& n) const {
    auto it = var_index.find(n);
    return it == var_index.end() ? -1 : it->second;
  }
};

// A constraint store: one installedness flag per feature (abstract flags are
// derived through closure) plus current variable values.
struct Store {
  std::vector<uint8_t> flags;
  std::vector<double> vars;

  bool operator==(const Store& o) const { return flags == o.flags && vars == o.vars; }
};

// Re-derives ancestor flags from the currently set concrete flags: abstract
// flags are cleared and every ancestor of a set concrete feature is set.
// Closure only adds ancestors; it never clears a concrete flag.
inline void apply_closure(const CompiledSpec& cs, Store& st) {
  const int nf = cs.num_features();
  for (int f = 0; f < nf; ++f)
    if (!cs.feature_concrete[f]) st.flags[f] = 0;
  for (int f = 0; f < nf; ++f) {
    if (!cs.feature_concrete[f] || !st.flags[f]) continue;
    for (int p = cs.feature_parent[f]; p >= 0 && !st.flags[p]; p = cs.feature_parent[p])
      st.flags[p] = 1;
  }
}

inline Store initial_store(const CompiledSpec& cs) {
  Store st;
  st.flags = cs.init_flags;
  st.vars = cs.var_init;
  apply_closure(cs, st);
  return st;
}

// Memo for abstract attribute sums, valid for one store epoch. Owned by the
// simulation loop, never by the store itself.
struct AttrMemo {
  uint64_t epoch = 1;
  std::vector<double> value;
  std::vector<uint64_t> stamp;

  void reset(const CompiledSpec& cs) {
    value.assign(static_cast<size_t>(cs.pred_names.size()) * cs.num_features(), 0.0);
    stamp.assign(value.size(), 0);
    epoch = 1;
  }
  void bump() { ++epoch; }
};

// Attribute of a feature: table value for concrete features, sum over
// installed children (recursively) for abstract ones.
inline double attribute_value(const CompiledSpec& cs, const Store& st, int pred, int feat,
                              AttrMemo* memo = nullptr) {
  if (cs.feature_concrete[feat]) return cs.pred_values[pred][feat];
  if (memo) {
    size_t slot = static_cast<size_t>(pred) * cs.num_features() + feat;
    if (memo->stamp[slot] == memo->epoch) return memo->value[slot];
    double sum = 0.0;
    for (int c : cs.feature_children[feat])
      if (st.flags[c]) sum += attribute_value(cs, st, pred, c, memo);
    memo->stamp[slot] = memo->epoch;
    memo->value[slot] = sum;
    return sum;
  }
  double sum = 0.0;
  for (int c : cs.feature_children[feat])
    if (st.flags[c]) sum += attribute_value(cs, st, pred, c, nullptr);
  return sum;
}

namespace detail {

// Reconstructs source text of a compiled arithmetic node for error messages.
inline std::string decompile(const CompiledSpec& cs, int idx) {
  const CArith& n = cs.arith_pool[idx];
  switch (n.kind) {
    case CArith::Kind::Num: return format_number(n.num);
    case CArith::Kind::Var: return cs.var_names[n.sym];
    case CArith::Kind::Feat: return cs.feature_names[n.sym];
    case CArith::Kind::Steps: return "steps";
    case CArith::Kind::Pred: return cs.pred_names[n.sym] + "(" + cs.feature_names[n.feat] + ")";
    case CArith::Kind::Neg: return "-" + decompile(cs, n.a);
    case CArith::Kind::Add: return "(" + decompile(cs, n.a) + " + " + decompile(cs, n.b) + ")";
    case CArith::Kind::Sub: return "(" + decompile(cs, n.a) + " - " + decompile(cs, n.b) + ")";
    case CArith::Kind::Mul: return "(" + decompile(cs, n.a) + " * " + decompile(cs, n.b) + ")";
    case CArith::Kind::Div: return "(" + decompile(cs, n.a) + " / " + decompile(cs, n.b) + ")";
  }
  return "?";
}

}  // namespace detail

inline double evaluate(const CompiledSpec& cs, const Store& st, int idx, uint64_t steps,
                       AttrMemo* memo = nullptr) {
  const CArith& n = cs.arith_pool[idx];
  switch (n.kind) {
    case CArith::Kind::Num: return n.num;
    case CArith::Kind::Var: return st.vars[n.sym];
    case CArith::Kind::Feat: return st.flags[n.sym] ? 1.0 : 0.0;
    case CArith::Kind::Steps: return static_cast<double>(steps);
    case CArith::Kind::Pred: return attribute_value(cs, st, n.sym, n.feat, memo);
    case CArith::Kind::Neg: return -evaluate(cs, st, n.a, steps, memo);
    case CArith::Kind::Add: return evaluate(cs, st, n.a, steps, memo) + evaluate(cs, st, n.b, steps, memo);
    case CArith::Kind::Sub: return evaluate(cs, st, n.a, steps, memo) - evaluate(cs, st, n.b, steps, memo);
    case CArith::Kind::Mul: return evaluate(cs, st, n.a, steps, memo) * evaluate(cs, st, n.b, steps, memo);
    case CArith::Kind::Div: {
      double d = evaluate(cs, st, n.b, steps, memo);
      if (d == 0.0)
        throw EvalError("division by zero in " + detail::decompile(cs, idx), n.loc);
      return evaluate(cs, st, n.a, steps, memo) / d;
    }
  }
  return 0.0;
}

inline bool compare(CmpOp op, double a, double b) {
  switch (op) {
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Eq: return a == b;
    case CmpOp::Ge: return a >= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ne: return a != b;
  }
  return false;
}

inline bool holds(const CompiledSpec& cs, const Store& st, int idx, uint64_t steps,
                  AttrMemo* memo = nullptr) {
  const CBool& n = cs.bool_pool[idx];
  switch (n.kind) {
    case CBool::Kind::Lit: return n.value;
    case CBool::Kind::Has: return st.flags[n.feat] != 0;
    case CBool::Kind::Cmp:
      return compare(n.cmp, evaluate(cs, st, n.a, steps, memo), evaluate(cs, st, n.b, steps, memo));
    case CBool::Kind::Not: return !holds(cs, st, n.a, steps, memo);
    case CBool::Kind::And: return holds(cs, st, n.a, steps, memo) && holds(cs, st, n.b, steps, memo);
    case CBool::Kind::Or: return holds(cs, st, n.a, steps, memo) || holds(cs, st, n.b, steps, memo);
    case CBool::Kind::Implies: return !holds(cs, st, n.a, steps, memo) || holds(cs, st, n.b, steps, memo);
  }
  return false;
}

inline bool is_consistent(const CompiledSpec& cs, const Store& st, uint64_t steps = 0,
                          AttrMemo* memo = nullptr) {
  for (const auto& c : cs.constraints)
    if (!holds(cs, st, c.formula, steps, memo)) return false;
  return true;
}

inline std::vector<int> failed_constraints(const CompiledSpec& cs, const Store& st,
                                           uint64_t steps = 0) {
  std::vector<int> out;
  for (size_t i = 0; i < cs.constraints.size(); ++i)
    if (!holds(cs, st, cs.constraints[i].formula, steps)) out.push_back(static_cast<int>(i));
  return out;
}

// Applies an action's feature flag changes (followed by closure) and then all
// variable updates. Update right-hand sides are evaluated simultaneously over
// the pre-update variable values (with the new flags already in place).
inline Store store_update(const CompiledSpec& cs, const Store& st, const CAction& a,
                          const std::vector<CUpdate>& updates, uint64_t steps) {
  Store out = st;
  bool flags_changed = false;
  switch (a.kind) {
    case Action::Kind::Install:
      out.flags[a.feat] = 1;
      flags_changed = true;
      break;
    case Action::Kind::Uninstall:
      out.flags[a.feat] = 0;
      flags_changed = true;
      break;
    case Action::Kind::Replace:
      out.flags[a.feat] = 0;
      out.flags[a.feat2] = 1;
      flags_changed = true;
      break;
    default:
      break;
  }
  if (flags_changed) apply_closure(cs, out);
  if (!updates.empty()) {
    std::vector<double> next;
    next.reserve(updates.size());
    for (const auto& u : updates) next.push_back(evaluate(cs, out, u.rhs, steps));
    for (size_t i = 0; i < updates.size(); ++i) out.vars[updates[i].var] = next[i];
  }
  return out;
}

// Compiles expressions against a compiled model, appending to its pools.
// Names must already be resolvable (run the validator first); unknown names
// indicate a caller bug.
inline int compile_arith(CompiledSpec& cs, const ArithPtr& e) {
  auto feature = [&](const std::string& n) {
    int f = cs.feature_id(n);
    if (f < 0) throw std::logic_error("compile: unknown feature " + n);
    return f;
  };
  CArith n;
  n.loc = e->loc;
  switch (e->kind) {
    case ArithExpr::Kind::Number:
      n.kind = CArith::Kind::Num;
      n.num = e->number;
      break;
    case ArithExpr::Kind::Variable: {
      auto it = cs.var_index.find(e->name);
      if (it != cs.var_index.end()) {
        n.kind = CArith::Kind::Var;
        n.sym = it->second;
      } else {
        n.kind = CArith::Kind::Feat;
        n.sym = feature(e->name);
      }
      break;
    }
    case ArithExpr::Kind::Feature:
      n.kind = CArith::Kind::Feat;
      n.sym = feature(e->name);
      break;
    case ArithExpr::Kind::Steps:
      n.kind = CArith::Kind::Steps;
      break;
    case ArithExpr::Kind::Predicate: {
      auto it = cs.pred_index.find(e->name);
      if (it == cs.pred_index.end()) throw std::logic_error("compile: unknown predicate " + e->name);
      n.kind = CArith::Kind::Pred;
      n.sym = it->second;
      n.feat = feature(e->feature);
      break;
    }
    case ArithExpr::Kind::Neg:
      n.kind = CArith::Kind::Neg;
      n.a = compile_arith(cs, e->lhs);
      break;
    case ArithExpr::Kind::Bin:
      switch (e->op) {
        case ArithOp::Add: n.kind = CArith::Kind::Add; break;
        case ArithOp::Sub: n.kind = CArith::Kind::Sub; break;
        case ArithOp::Mul: n.kind = CArith::Kind::Mul; break;
        case ArithOp::Div: n.kind = CArith::Kind::Div; break;
      }
      n.a = compile_arith(cs, e->lhs);
      n.b = compile_arith(cs, e->rhs);
      break;
  }
  cs.arith_pool.push_back(n);
  return static_cast<int>(cs.arith_pool.size()) - 1;
}

inline int compile_formula(CompiledSpec& cs, const BoolPtr& f) {
  CBool n;
  n.loc = f->loc;
  switch (f->kind) {
    case BoolFormula::Kind::Lit:
      n.kind = CBool::Kind::Lit;
      n.value = f->value;
      break;
    case BoolFormula::Kind::Has: {
      int feat = cs.feature_id(f->feature);
      if (feat < 0) throw std::logic_error("compile: unknown feature " + f->feature);
      n.kind = CBool::Kind::Has;
      n.feat = feat;
      break;
    }
    case BoolFormula::Kind::Cmp:
      n.kind = CBool::Kind::Cmp;
      n.cmp = f->cmp;
      n.a = compile_arith(cs, f->e1);
      n.b = compile_arith(cs, f->e2);
      break;
    case BoolFormula::Kind::Not:
      n.kind = CBool::Kind::Not;
      n.a = compile_formula(cs, f->f1);
      break;
    case BoolFormula::Kind::And:
    case BoolFormula::Kind::Or:
    case BoolFormula::Kind::Implies:
      n.kind = f->kind == BoolFormula::Kind::And   ? CBool::Kind::And
               : f->kind == BoolFormula::Kind::Or ? CBool::Kind::Or
                                                  : CBool::Kind::Implies;
      n.a = compile_formula(cs, f->f1);
      n.b = compile_formula(cs, f->f2);
      break;
  }
  cs.bool_pool.push_back(n);
  return static_cast<int>(cs.bool_pool.size()) - 1;
}

namespace detail {

class SpecCompiler {
 public:
  explicit SpecCompiler(const Specification& spec) : spec_(spec) {}

  CompiledSpec run() {
    intern_symbols();
    build_tree();
    build_constraints();
    build_action_constraints();
    build_processes();
    build_init();
    return std::move(cs_);
  }

 private:
  const Specification& spec_;
  CompiledSpec cs_;
  std::map<std::string, int> label_ids_;

  [[noreturn]] void bug(const std::string& msg) { throw std::logic_error("compile: " + msg); }

  int feature(const std::string& n) {
    int f = cs_.feature_id(n);
    if (f < 0) bug("unknown feature " + n);
    return f;
  }

  void intern_symbols() {
    for (const auto& f : spec_.abstract_features) {
      cs_.feature_index[f.name] = static_cast<int>(cs_.feature_names.size());
      cs_.feature_names.push_back(f.name);
      cs_.feature_concrete.push_back(0);
    }
    for (const auto& f : spec_.concrete_features) {
      cs_.feature_index[f.name] = static_cast<int>(cs_.feature_names.size());
      cs_.feature_names.push_back(f.name);
      cs_.feature_concrete.push_back(1);
    }
    for (const auto& v : spec_.variables) {
      cs_.var_index[v.name] = static_cast<int>(cs_.var_names.size());
      cs_.var_names.push_back(v.name);
      cs_.var_init.push_back(v.init);
    }
    for (const auto& a : spec_.actions) {
      cs_.user_index[a.name] = static_cast<int>(cs_.user_actions.size());
      cs_.user_actions.push_back(a.name);
    }
    const int nf = cs_.num_features();
    for (const auto& p : spec_.predicates) {
      cs_.pred_index[p.name] = static_cast<int>(cs_.pred_names.size());
      cs_.pred_names.push_back(p.name);
      std::vector<double> row(nf, 0.0);
      for (const auto& [fname, val] : p.values) row[feature(fname)] = val;
      cs_.pred_values.push_back(std::move(row));
    }
  }

  void build_tree() {
    const int nf = cs_.num_features();
    cs_.feature_parent.assign(nf, -1);
    cs_.feature_children.assign(nf, {});
    for (const auto& rel : spec_.diagram) {
      int p = feature(rel.parent);
      for (const auto& c : rel.children) {
        int cid = feature(c.name);
        cs_.feature_parent[cid] = p;
        cs_.feature_children[p].push_back(cid);
      }
    }
    cs_.feature_subtree.assign(nf, {});
    for (int f = 0; f < nf; ++f) collect_subtree(f, cs_.feature_subtree[f]);
  }

  void collect_subtree(int f, std::vector<int>& out) {
    for (int c : cs_.feature_children[f]) {
      out.push_back(c);
      collect_subtree(c, out);
    }
  }

  int add_bool(CBool n) {
    cs_.bool_pool.push_back(n);
    return static_cast<int>(cs_.bool_pool.size()) - 1;
  }
  int add_arith(CArith n) {
    cs_.arith_pool.push_back(n);
    return static_cast<int>(cs_.arith_pool.size()) - 1;
  }
  int b_has(int f) { CBool n; n.kind = CBool::Kind::Has; n.feat = f; return add_bool(n); }
  int b_not(int a) { CBool n; n.kind = CBool::Kind::Not; n.a = a; return add_bool(n); }
  int b_bin(CBool::Kind k, int a, int b) { CBool n; n.kind = k; n.a = a; n.b = b; return add_bool(n); }
  int b_lit(bool v) { CBool n; n.kind = CBool::Kind::Lit; n.value = v; return add_bool(n); }

  int compile_arith(const ArithPtr& e) { return qflan::compile_arith(cs_, e); }
  int compile_formula(const BoolPtr& f) { return qflan::compile_formula(cs_, f); }

  void add_constraint(int formula, std::string text, SourceLoc loc) {
    cs_.constraints.push_back({formula, std::move(text), loc});
  }

  void build_constraints() {
    for (const auto& rel : spec_.diagram) {
      std::string text = rel.parent;
      text += rel.kind == HierarchicalRelation::Kind::And   ? " -> {"
              : rel.kind == HierarchicalRelation::Kind::Or ? " -OR-> {"
                                                           : " -XOR-> {";
      for (size_t i = 0; i < rel.children.size(); ++i) {
        text += i ? " , " : " ";
        if (rel.children[i].optional) text += "?";
        text += rel.children[i].name;
      }
      text += " }";
      int p = feature(rel.parent);
      switch (rel.kind) {
        case HierarchicalRelation::Kind::And: {
          // Mandatory children are globally required.
          int acc = -1;
          for (const auto& c : rel.children) {
            if (c.optional) continue;
            int h = b_has(feature(c.name));
            acc = acc < 0 ? h : b_bin(CBool::Kind::And, acc, h);
          }
          if (acc >= 0) add_constraint(acc, text, rel.loc);
          break;
        }
        case HierarchicalRelation::Kind::Or: {
          int any = -1;
          for (const auto& c : rel.children) {
            int h = b_has(feature(c.name));
            any = any < 0 ? h : b_bin(CBool::Kind::Or, any, h);
          }
          add_constraint(b_bin(CBool::Kind::Implies, b_has(p), any), text, rel.loc);
          break;
        }
        case HierarchicalRelation::Kind::Xor: {
          int exactly_one = -1;
          for (size_t i = 0; i < rel.children.size(); ++i) {
            int conj = b_has(feature(rel.children[i].name));
            for (size_t j = 0; j < rel.children.size(); ++j) {
              if (j == i) continue;
              conj = b_bin(CBool::Kind::And, conj, b_not(b_has(feature(rel.children[j].name))));
            }
            exactly_one = exactly_one < 0 ? conj : b_bin(CBool::Kind::Or, exactly_one, conj);
          }
          if (exactly_one < 0) exactly_one = b_lit(false);
          add_constraint(b_bin(CBool::Kind::Implies, b_has(p), exactly_one), text, rel.loc);
          break;
        }
      }
    }
    for (const auto& ct : spec_.cross_tree) {
      int l = b_has(feature(ct.lhs));
      int r = b_has(feature(ct.rhs));
      if (ct.kind == CrossTreeConstraint::Kind::Requires)
        add_constraint(b_bin(CBool::Kind::Implies, l, r), ct.lhs + " requires " + ct.rhs, ct.loc);
      else
        add_constraint(b_bin(CBool::Kind::Implies, l, b_not(r)), ct.lhs + " excludes " + ct.rhs,
                       ct.loc);
    }
    for (const auto& q : spec_.quantitative)
      add_constraint(compile_formula(q.formula), "{" + to_string(q.formula) + "}", q.loc);

    cs_.constraint_syms.clear();
    for (const auto& c : cs_.constraints) cs_.constraint_syms.push_back(bool_syms(c.formula));
  }

  void build_action_constraints() {
    cs_.user_constraints.assign(cs_.user_actions.size(), {});
    cs_.feature_constraints.assign(cs_.num_features(), {});
    // Implicit gate: a feature action is only executable while installed.
    for (int f = 0; f < cs_.num_features(); ++f)
      if (cs_.feature_concrete[f]) cs_.feature_constraints[f].push_back(b_has(f));
    for (const auto& ac : spec_.action_constraints) {
      int formula = compile_formula(ac.formula);
      switch (ac.target) {
        case ActionConstraint::Target::Name: {
          auto it = cs_.user_index.find(ac.name);
          if (it != cs_.user_index.end())
            cs_.user_constraints[it->second].push_back(formula);
          else
            cs_.feature_constraints[feature(ac.name)].push_back(formula);
          break;
        }
        case ActionConstraint::Target::AnyInstall: cs_.install_constraints.push_back(formula); break;
        case ActionConstraint::Target::AnyUninstall: cs_.uninstall_constraints.push_back(formula); break;
        case ActionConstraint::Target::AnyReplace: cs_.replace_constraints.push_back(formula); break;
      }
    }
  }

  void collect_arith_syms(int idx, std::vector<int>& out) {
    const CArith& n = cs_.arith_pool[idx];
    switch (n.kind) {
      case CArith::Kind::Num: break;
      case CArith::Kind::Var: out.push_back(cs_.var_sym(n.sym)); break;
      case CArith::Kind::Feat: out.push_back(n.sym); break;
      case CArith::Kind::Steps: out.push_back(cs_.steps_sym()); break;
      case CArith::Kind::Pred:
        // Concrete attribute values are constants; abstract sums depend on
        // every flag in the subtree.
        if (!cs_.feature_concrete[n.feat])
          for (int d : cs_.feature_subtree[n.feat]) out.push_back(d);
        break;
      case CArith::Kind::Neg: collect_arith_syms(n.a, out); break;
      default:
        collect_arith_syms(n.a, out);
        collect_arith_syms(n.b, out);
        break;
    }
  }

  void collect_bool_syms(int idx, std::vector<int>& out) {
    const CBool& n = cs_.bool_pool[idx];
    switch (n.kind) {
      case CBool::Kind::Lit: break;
      case CBool::Kind::Has: out.push_back(n.feat); break;
      case CBool::Kind::Cmp:
        collect_arith_syms(n.a, out);
        collect_arith_syms(n.b, out);
        break;
      case CBool::Kind::Not: collect_bool_syms(n.a, out); break;
      default:
        collect_bool_syms(n.a, out);
        collect_bool_syms(n.b, out);
        break;
    }
  }

  std::vector<int> bool_syms(int idx) {
    std::vector<int> out;
    collect_bool_syms(idx, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  CAction compile_action(const Action& a) {
    CAction ca;
    ca.kind = a.kind;
    ca.text = label(a);
    switch (a.kind) {
      case Action::Kind::User: {
        // The parser leaves bare names as User; reclassify feature actions.
        auto it = cs_.user_index.find(a.name);
        if (it != cs_.user_index.end()) {
          ca.user = it->second;
        } else {
          ca.kind = Action::Kind::Feature;
          ca.feat = feature(a.name);
        }
        break;
      }
      case Action::Kind::Feature: ca.feat = feature(a.name); break;
      case Action::Kind::Install:
      case Action::Kind::Uninstall: ca.feat = feature(a.name); break;
      case Action::Kind::Replace:
        ca.feat = feature(a.from);
        ca.feat2 = feature(a.to);
        break;
      case Action::Kind::Ask: ca.guard = compile_formula(a.guard); break;
    }
    return ca;
  }

  void register_label(const std::string& text) { label_ids_.emplace(text, -1); }

  const CTerm* make_term(CTerm t) {
    cs_.term_arena.push_back(std::move(t));
    return &cs_.term_arena.back();
  }

  const CTerm* nil_cterm() {
    CTerm t;
    t.kind = CTerm::Kind::Nil;
    t.key = "0";
    return make_term(std::move(t));
  }

  // Compiles a surface term. Invocation nodes stay symbolic here; the
  // semantics resolves them to definition bodies when they become runtime
  // components.
  const CTerm* compile_term(const TermPtr& t) {
    switch (t->kind) {
      case ProcessTerm::Kind::Nil: return nil_cterm();
      case ProcessTerm::Kind::Invoke: {
        CTerm ct;
        ct.kind = CTerm::Kind::Invoke;
        auto it = cs_.process_index.find(t->name);
        if (it == cs_.process_index.end()) bug("unknown process " + t->name);
        ct.process = it->second;
        return make_term(std::move(ct));
      }
      case ProcessTerm::Kind::Prefix: {
        PrefixSite site;
        site.id = static_cast<int>(cs_.site_arena.size());
        site.action = compile_action(t->action);
        site.rate = t->rate;
        for (const auto& u : t->updates) {
          CUpdate cu;
          cu.var = cs_.var_index.at(u.var);
          cu.rhs = compile_arith(u.value);
          cu.text = u.var + " = " + to_string(u.value);
          site.updates.push_back(std::move(cu));
        }
        site.cont = compile_term(t->cont);
        register_label(site.action.text);
        cs_.site_arena.push_back(std::move(site));
        CTerm ct;
        ct.kind = CTerm::Kind::Prefix;
        ct.site = &cs_.site_arena.back();
        return make_term(std::move(ct));
      }
      case ProcessTerm::Kind::Choice:
      case ProcessTerm::Kind::Par: {
        CTerm ct;
        ct.kind = t->kind == ProcessTerm::Kind::Choice ? CTerm::Kind::Choice : CTerm::Kind::Par;
        for (const auto& c : t->children) ct.children.push_back(compile_term(c));
        return make_term(std::move(ct));
      }
    }
    bug("unreachable term kind");
  }

  void compute_key(CTerm& t) {
    switch (t.kind) {
      case CTerm::Kind::Nil: t.key = "0"; break;
      case CTerm::Kind::Invoke: t.key = "i:" + cs_.process_names[t.process]; break;
      case CTerm::Kind::Prefix: {
        const PrefixSite& s = *t.site;
        std::string k = "p:" + s.action.text + "@" + format_number(s.rate);
        for (const auto& u : s.updates) k += ";" + u.text;
        t.key = k + "." + t.site->cont->key;
        break;
      }
      case CTerm::Kind::Choice:
      case CTerm::Kind::Par: {
        std::vector<std::string> keys;
        for (const CTerm* c : t.children) keys.push_back(c->key);
        std::sort(keys.begin(), keys.end());
        std::string k = t.kind == CTerm::Kind::Choice ? "+(" : "|(";
        for (size_t i = 0; i < keys.size(); ++i) {
          if (i) k += ",";
          k += keys[i];
        }
        t.key = k + ")";
        break;
      }
    }
  }

  void build_processes() {
    std::vector<ProcessDef> defs = spec_.process_defs;
    std::map<std::string, std::string> aliases;
    for (const auto& d : spec_.process_diagrams) {
      auto translated = translate_diagram(d);
      defs.insert(defs.end(), translated.begin(), translated.end());
      if (!d.states.empty()) aliases[d.name] = diagram_state_process(d.name, d.states[0].name);
    }
    for (const auto& d : defs) {
      cs_.process_index[d.name] = static_cast<int>(cs_.process_names.size());
      cs_.process_names.push_back(d.name);
    }
    cs_.process_bodies.resize(defs.size(), nullptr);
    for (size_t i = 0; i < defs.size(); ++i)
      cs_.process_bodies[i] = compile_term(defs[i].term);
    for (const auto& [name, target] : aliases) cs_.process_index[name] = cs_.process_index.at(target);

    // Keys depend on continuation keys; the arena is in post-order (children
    // before parents), so one forward pass suffices.
    for (auto& t : cs_.term_arena) compute_key(t);

    // Intern action labels in sorted order so label ids give a stable total
    // order on actions.
    cs_.action_labels.clear();
    for (auto& [text, id] : label_ids_) {
      id = static_cast<int>(cs_.action_labels.size());
      cs_.action_labels.push_back(text);
    }
    for (auto& site : cs_.site_arena) site.label_id = label_ids_.at(site.action.text);

    for (auto& site : cs_.site_arena) finalize_site(site);
  }

  void push_formula_syms(int formula, std::vector<int>& out) {
    collect_bool_syms(formula, out);
  }

  void finalize_site(PrefixSite& site) {
    // Executability formulas: action constraints for the target plus the ask
    // guard. Store-action side conditions stay hardcoded in the semantics.
    switch (site.action.kind) {
      case Action::Kind::User:
        site.exec_formulas = cs_.user_constraints[site.action.user];
        break;
      case Action::Kind::Feature:
        site.exec_formulas = cs_.feature_constraints[site.action.feat];
        break;
      case Action::Kind::Install:
        site.exec_formulas = cs_.install_constraints;
        break;
      case Action::Kind::Uninstall:
        site.exec_formulas = cs_.uninstall_constraints;
        break;
      case Action::Kind::Replace:
        site.exec_formulas = cs_.replace_constraints;
        break;
      case Action::Kind::Ask:
        site.exec_formulas.push_back(site.action.guard);
        break;
    }

    // Write set: changed flags (with ancestors, conservatively) + updated vars.
    std::vector<int> writes;
    auto add_with_ancestors = [&](int f) {
      writes.push_back(f);
      for (int p = cs_.feature_parent[f]; p >= 0; p = cs_.feature_parent[p]) writes.push_back(p);
    };
    if (site.action.kind == Action::Kind::Install || site.action.kind == Action::Kind::Uninstall)
      add_with_ancestors(site.action.feat);
    if (site.action.kind == Action::Kind::Replace) {
      add_with_ancestors(site.action.feat);
      add_with_ancestors(site.action.feat2);
    }
    for (const auto& u : site.updates) writes.push_back(cs_.var_sym(u.var));
    std::sort(writes.begin(), writes.end());
    writes.erase(std::unique(writes.begin(), writes.end()), writes.end());
    site.writes = writes;

    // Read set: everything the verdict depends on. That is the executability
    // formulas, the flags tested by store-action side conditions, the update
    // right-hand sides, and the read sets of every constraint the write set
    // can touch. The write set itself is included so a fired site re-checks.
    std::vector<int> deps = writes;
    for (int f : site.exec_formulas) push_formula_syms(f, deps);
    switch (site.action.kind) {
      case Action::Kind::Install:
      case Action::Kind::Uninstall: deps.push_back(site.action.feat); break;
      case Action::Kind::Replace:
        deps.push_back(site.action.feat);
        deps.push_back(site.action.feat2);
        break;
      default: break;
    }
    for (const auto& u : site.updates) collect_arith_syms(u.rhs, deps);
    if (!writes.empty()) {
      for (size_t ci = 0; ci < cs_.constraints.size(); ++ci) {
        const auto& syms = cs_.constraint_syms[ci];
        bool touches = false;
        for (int w : writes) {
          if (std::binary_search(syms.begin(), syms.end(), w)) {
            touches = true;
            break;
          }
        }
        if (touches) deps.insert(deps.end(), syms.begin(), syms.end());
      }
    }
    std::sort(deps.begin(), deps.end());
    deps.erase(std::unique(deps.begin(), deps.end()), deps.end());
    site.deps = deps;
  }

  void build_init() {
    cs_.init_flags.assign(cs_.num_features(), 0);
    for (const auto& f : spec_.init_features) cs_.init_flags[feature(f.name)] = 1;
    for (const auto& p : spec_.init_processes) {
      auto it = cs_.process_index.find(p.name);
      if (it == cs_.process_index.end()) bug("unknown initial process " + p.name);
      cs_.init_components.push_back(cs_.process_bodies[it->second]);
    }
  }
};

}  // namespace detail

// Precondition: spec passed validate_specification without errors.
inline CompiledSpec compile_specification(const Specification& spec) {
  return detail::SpecCompiler(spec).run();
}

}  // namespace qflan
