#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "qflan/ast.hpp"

namespace qflan {

// Stable serialization of a process term; used as the total order for
// normalization and as the canonical state key of the semantics.
inline std::string term_key(const TermPtr& t) {
  switch (t->kind) {
    case ProcessTerm::Kind::Nil: return "0";
    case ProcessTerm::Kind::Invoke: return "i:" + t->name;
    case ProcessTerm::Kind::Prefix: {
      std::string s = "p:" + label(t->action) + "@" + format_number(t->rate);
      for (const auto& u : t->updates) s += ";" + u.var + "=" + to_string(u.value);
      return s + "." + term_key(t->cont);
    }
    case ProcessTerm::Kind::Choice:
    case ProcessTerm::Kind::Par: {
      std::string s = t->kind == ProcessTerm::Kind::Choice ? "+(" : "|(";
      for (size_t i = 0; i < t->children.size(); ++i) {
        if (i) s += ",";
        s += term_key(t->children[i]);
      }
      return s + ")";
    }
  }
  return "";
}

// Canonical form under structural congruence: + and || are flattened, nil
// operands dropped, children sorted by term_key, singleton nodes collapsed.
// Invocations are not unfolded here.
inline TermPtr normalize(const TermPtr& t) {
  switch (t->kind) {
    case ProcessTerm::Kind::Nil:
    case ProcessTerm::Kind::Invoke: return t;
    case ProcessTerm::Kind::Prefix: {
      TermPtr cont = normalize(t->cont);
      if (cont == t->cont) return t;
      return prefix(t->action, t->rate, t->updates, cont, t->loc);
    }
    case ProcessTerm::Kind::Choice:
    case ProcessTerm::Kind::Par: {
      std::vector<TermPtr> flat;
      for (const auto& c : t->children) {
        TermPtr n = normalize(c);
        if (n->kind == ProcessTerm::Kind::Nil) continue;
        if (n->kind == t->kind)
          flat.insert(flat.end(), n->children.begin(), n->children.end());
        else
          flat.push_back(n);
      }
      if (flat.empty()) return nil_term(t->loc);
      if (flat.size() == 1) return flat[0];
      std::stable_sort(flat.begin(), flat.end(), [](const TermPtr& a, const TermPtr& b) {
        return term_key(a) < term_key(b);
      });
      return combine(t->kind, std::move(flat), t->loc);
    }
  }
  return t;
}

// State-machine translation: one process definition per state, with one
// summand per outgoing transition in declaration order. The first listed
// state is the initial one; the diagram name resolves to it.
inline std::string diagram_state_process(const std::string& diagram, const std::string& state) {
  return diagram + "_" + state;
}

inline std::vector<ProcessDef> translate_diagram(const ProcessDiagram& d) {
  std::vector<ProcessDef> defs;
  defs.reserve(d.states.size());
  for (const auto& state : d.states) {
    ProcessDef def;
    def.name = diagram_state_process(d.name, state.name);
    def.loc = state.loc;
    std::vector<TermPtr> summands;
    for (const auto& t : d.transitions) {
      if (t.src != state.name) continue;
      summands.push_back(prefix(t.action, t.rate, t.updates,
                                invoke(diagram_state_process(d.name, t.dst), t.loc), t.loc));
    }
    if (summands.empty())
      def.term = nil_term(state.loc);
    else if (summands.size() == 1)
      def.term = summands[0];
    else
      def.term = combine(ProcessTerm::Kind::Choice, std::move(summands), state.loc);
    defs.push_back(std::move(def));
  }
  return defs;
}

}  // namespace qflan
