#pragma once

#include <cstring>
#include <string>
#include <vector>

#include "qflan/store.hpp"

namespace qflan {

// Runtime process state: a flat multiset of component terms, kept sorted by
// canonical key. Invocations are resolved to definition bodies and parallel
// compositions flattened on insertion, so components are Prefix, Choice or
// (under recursion guards) nested structures, never Invoke/Par/Nil.
using Components = std::vector<const CTerm*>;

struct Model {
  Store store;
  Components procs;
  uint64_t steps = 0;
};

inline void add_component(const CompiledSpec& cs, const CTerm* t, Components& out) {
  while (t->kind == CTerm::Kind::Invoke) t = cs.process_bodies[t->process];
  if (t->kind == CTerm::Kind::Nil) return;
  if (t->kind == CTerm::Kind::Par) {
    for (const CTerm* c : t->children) add_component(cs, c, out);
    return;
  }
  out.push_back(t);
}

inline void sort_components(Components& c) {
  std::stable_sort(c.begin(), c.end(),
                   [](const CTerm* a, const CTerm* b) { return a->key < b->key; });
}

inline std::string components_key(const Components& c) {
  std::string k;
  for (const CTerm* t : c) {
    k += t->key;
    k += '|';
  }
  return k;
}

// Exact byte-level store digest; used only for grouping transitions within a
// single step, where identical targets have bit-identical stores.
inline void append_store_bytes(const Store& st, std::string& k) {
  k.append(reinterpret_cast<const char*>(st.flags.data()), st.flags.size());
  k += '#';
  k.append(reinterpret_cast<const char*>(st.vars.data()), st.vars.size() * sizeof(double));
}

struct Transition {
  const PrefixSite* site = nullptr;
  Store store;
  Components procs;
  double rate = 0.0;
  int multiplicity = 1;
  std::string group_key;  // procs key + store bytes
};

struct StepDistribution {
  std::vector<Transition> transitions;
  double total_rate = 0.0;

  double probability(size_t i) const {
    return transitions[i].rate * transitions[i].multiplicity / total_rate;
  }
};

// Per-site verdict cache. Stamps are per symbol; an entry is valid while no
// symbol in the site's dependency list changed after the entry was recorded.
// The cache lives beside one evolving model (one simulation), never inside
// the store.
class AdmissibilityCache {
 public:
  struct Entry {
    uint32_t checked = 0;
    bool executable = false;
    bool viable = false;
  };

  void init(const CompiledSpec& cs) {
    sym_stamp_.assign(cs.num_syms(), 0);
    entries_.assign(cs.site_arena.size(), Entry{});
    now_ = 1;
  }

  bool lookup(const PrefixSite& s, Entry& out) const {
    const Entry& e = entries_[s.id];
    if (e.checked == 0) return false;
    for (int d : s.deps)
      if (sym_stamp_[d] > e.checked) return false;
    out = e;
    return true;
  }

  void record(const PrefixSite& s, bool executable, bool viable) {
    entries_[s.id] = Entry{now_, executable, viable};
  }

  // Called after a step is applied. The steps counter always advances; fired
  // sites additionally invalidate their static write set.
  void commit(const CompiledSpec& cs, const PrefixSite* fired) {
    ++now_;
    sym_stamp_[cs.steps_sym()] = now_;
    if (fired)
      for (int w : fired->writes) sym_stamp_[w] = now_;
  }

 private:
  std::vector<uint32_t> sym_stamp_;
  std::vector<Entry> entries_;
  uint32_t now_ = 1;
};

// Executability: store-action side conditions plus every action constraint
// attached to the action (including the implicit installedness gate for
// feature actions and ask guards).
inline bool is_executable(const CompiledSpec& cs, const Store& st, const PrefixSite& site,
                          uint64_t steps, AttrMemo* memo = nullptr) {
  switch (site.action.kind) {
    case Action::Kind::Install:
      if (st.flags[site.action.feat]) return false;
      break;
    case Action::Kind::Uninstall:
      if (!st.flags[site.action.feat]) return false;
      break;
    case Action::Kind::Replace:
      if (!st.flags[site.action.feat] || st.flags[site.action.feat2]) return false;
      break;
    default:
      break;
  }
  for (int f : site.exec_formulas)
    if (!holds(cs, st, f, steps, memo)) return false;
  return true;
}

namespace detail {

struct Candidate {
  const PrefixSite* site;
  std::vector<const CTerm*> residue;  // parallel siblings inside the component
};

inline void collect_candidates(const CompiledSpec& cs, const CTerm* t,
                               std::vector<const CTerm*>& residue,
                               std::vector<Candidate>& out) {
  switch (t->kind) {
    case CTerm::Kind::Nil:
      return;
    case CTerm::Kind::Prefix:
      out.push_back(Candidate{t->site, residue});
      return;
    case CTerm::Kind::Choice:
      for (const CTerm* c : t->children) collect_candidates(cs, c, residue, out);
      return;
    case CTerm::Kind::Par:
      for (size_t i = 0; i < t->children.size(); ++i) {
        size_t mark = residue.size();
        for (size_t j = 0; j < t->children.size(); ++j)
          if (j != i) residue.push_back(t->children[j]);
        collect_candidates(cs, t->children[i], residue, out);
        residue.resize(mark);
      }
      return;
    case CTerm::Kind::Invoke:
      collect_candidates(cs, cs.process_bodies[t->process], residue, out);
      return;
  }
}

}  // namespace detail

// Enumerates the transition multiset of a model in a canonical deterministic
// order: sorted by (action label, rate, target), with identical transitions
// merged into one entry with a multiplicity.
inline StepDistribution enabled_transitions(const CompiledSpec& cs, const Model& m,
                                            AdmissibilityCache* cache = nullptr,
                                            AttrMemo* memo = nullptr) {
  std::vector<Transition> raw;
  std::vector<detail::Candidate> cands;
  std::vector<const CTerm*> scratch;
  for (size_t ci = 0; ci < m.procs.size(); ++ci) {
    cands.clear();
    scratch.clear();
    detail::collect_candidates(cs, m.procs[ci], scratch, cands);
    for (const auto& cand : cands) {
      const PrefixSite& site = *cand.site;
      bool viable = false;
      AdmissibilityCache::Entry entry;
      bool cached = cache && cache->lookup(site, entry);
      if (cached) {
        viable = entry.viable;
        if (!viable) continue;
      }
      Store target;
      if (cached) {
        target = store_update(cs, m.store, site.action, site.updates, m.steps);
      } else {
        bool exec = is_executable(cs, m.store, site, m.steps, memo);
        if (!exec) {
          if (cache) cache->record(site, false, false);
          continue;
        }
        target = store_update(cs, m.store, site.action, site.updates, m.steps);
        viable = is_consistent(cs, target, m.steps + 1, nullptr);
        if (cache) cache->record(site, true, viable);
        if (!viable) continue;
      }
      Transition tr;
      tr.site = &site;
      tr.store = std::move(target);
      tr.procs.reserve(m.procs.size() + cand.residue.size());
      for (size_t cj = 0; cj < m.procs.size(); ++cj)
        if (cj != ci) tr.procs.push_back(m.procs[cj]);
      for (const CTerm* r : cand.residue) add_component(cs, r, tr.procs);
      add_component(cs, site.cont, tr.procs);
      sort_components(tr.procs);
      tr.rate = site.rate;
      tr.group_key = components_key(tr.procs);
      tr.group_key += '#';
      append_store_bytes(tr.store, tr.group_key);
      raw.push_back(std::move(tr));
    }
  }
  std::stable_sort(raw.begin(), raw.end(), [](const Transition& a, const Transition& b) {
    if (a.site->label_id != b.site->label_id) return a.site->label_id < b.site->label_id;
    if (a.rate != b.rate) return a.rate < b.rate;
    return a.group_key < b.group_key;
  });
  StepDistribution dist;
  for (auto& tr : raw) {
    if (!dist.transitions.empty()) {
      Transition& last = dist.transitions.back();
      if (last.site->label_id == tr.site->label_id && last.rate == tr.rate &&
          last.group_key == tr.group_key) {
        ++last.multiplicity;
        continue;
      }
    }
    dist.transitions.push_back(std::move(tr));
  }
  for (const auto& tr : dist.transitions) dist.total_rate += tr.rate * tr.multiplicity;
  return dist;
}

inline Model initial_model(const CompiledSpec& cs) {
  Model m;
  m.store = initial_store(cs);
  for (const CTerm* t : cs.init_components) add_component(cs, t, m.procs);
  sort_components(m.procs);
  m.steps = 0;
  if (!is_consistent(cs, m.store)) {
    std::string msg = "initial store violates constraints:";
    for (int i : failed_constraints(cs, m.store)) msg += " [" + cs.constraints[i].text + "]";
    throw AnalysisError(msg);
  }
  return m;
}

}  // namespace qflan
