#pragma once

#include <deque>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "qflan/simulator.hpp"

namespace qflan {

// Explicit-state DTMC extracted by breadth-first exploration. States are
// hash-consed on a canonical key: process term keys plus flags plus variable
// values rounded to 12 significant digits. The step counter is not part of
// the key, so guards and constraints must not depend on it; observations and
// query conditions may, since they are evaluated at a given time index.
struct ExplicitDTMC {
  struct State {
    Store store;
    Components procs;
  };
  std::vector<State> states;
  std::vector<std::string> keys;
  std::vector<std::vector<std::pair<int, double>>> rows;  // (target, probability)
  int initial = 0;
};

inline std::string dtmc_state_key(const CompiledSpec& cs, const Store& st, const Components& procs) {
  std::string k = components_key(procs);
  k += '#';
  k.append(reinterpret_cast<const char*>(st.flags.data()), st.flags.size());
  for (double v : st.vars) {
    k += '#';
    k += format_number(v);  // 12 significant digits
  }
  (void)cs;
  return k;
}

inline ExplicitDTMC build_state_space(const CompiledSpec& cs, size_t state_limit = 1000000) {
  ExplicitDTMC dtmc;
  std::unordered_map<std::string, int> index;
  Model init = initial_model(cs);
  dtmc.states.push_back({init.store, init.procs});
  dtmc.keys.push_back(dtmc_state_key(cs, init.store, init.procs));
  index.emplace(dtmc.keys[0], 0);
  std::deque<int> frontier{0};
  while (!frontier.empty()) {
    int si = frontier.front();
    frontier.pop_front();
    Model m{dtmc.states[si].store, dtmc.states[si].procs, 0};
    StepDistribution dist = enabled_transitions(cs, m);
    if (static_cast<int>(dtmc.rows.size()) <= si) dtmc.rows.resize(si + 1);
    auto& row = dtmc.rows[si];
    if (dist.transitions.empty()) {
      row.push_back({si, 1.0});
      continue;
    }
    for (size_t ti = 0; ti < dist.transitions.size(); ++ti) {
      const Transition& tr = dist.transitions[ti];
      std::string key = dtmc_state_key(cs, tr.store, tr.procs);
      auto [it, inserted] = index.emplace(std::move(key), static_cast<int>(dtmc.states.size()));
      int target = it->second;
      if (inserted) {
        if (dtmc.states.size() >= state_limit)
          throw AnalysisError("state space exceeds limit of " + std::to_string(state_limit) +
                              " states");
        dtmc.states.push_back({tr.store, tr.procs});
        dtmc.keys.push_back(it->first);
        frontier.push_back(target);
      }
      double p = dist.probability(ti);
      bool merged = false;
      for (auto& [t, prob] : row) {
        if (t == target) {
          prob += p;
          merged = true;
          break;
        }
      }
      if (!merged) row.push_back({target, p});
    }
  }
  dtmc.rows.resize(dtmc.states.size());
  return dtmc;
}

inline double observe_state(const CompiledSpec& cs, const Store& st, const CompiledObs& o,
                            uint64_t steps) {
  if (o.arith >= 0) return evaluate(cs, st, o.arith, steps);
  return holds(cs, st, o.formula, steps) ? 1.0 : 0.0;
}

inline std::vector<double> transient_distribution(const ExplicitDTMC& dtmc, uint64_t k) {
  std::vector<double> pi(dtmc.states.size(), 0.0), next(dtmc.states.size());
  pi[dtmc.initial] = 1.0;
  for (uint64_t t = 0; t < k; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (size_t s = 0; s < pi.size(); ++s) {
      if (pi[s] == 0.0) continue;
      for (const auto& [target, p] : dtmc.rows[s]) next[target] += pi[s] * p;
    }
    pi.swap(next);
  }
  return pi;
}

// Exact expected observation values after exactly k steps.
inline std::vector<double> transient_expectation(const CompiledSpec& cs, const ExplicitDTMC& dtmc,
                                                 const std::vector<CompiledObs>& obs, uint64_t k) {
  std::vector<double> pi = transient_distribution(dtmc, k);
  std::vector<double> out(obs.size(), 0.0);
  for (size_t s = 0; s < pi.size(); ++s) {
    if (pi[s] == 0.0) continue;
    for (size_t oi = 0; oi < obs.size(); ++oi)
      out[oi] += pi[s] * observe_state(cs, dtmc.states[s].store, obs[oi], k);
  }
  return out;
}

struct WhenExpectation {
  std::vector<double> values;  // conditional on reaching the target
  double absorbed = 0.0;       // probability mass absorbed within the horizon
  double residual = 0.0;       // mass still circulating at the horizon
};

// Expected observation values at the first time the condition holds, made
// absorbing at first arrival. Mass that has not arrived within the horizon
// is reported as residual.
inline WhenExpectation when_expectation(const CompiledSpec& cs, const ExplicitDTMC& dtmc,
                                        int condition, const std::vector<CompiledObs>& obs,
                                        uint64_t horizon = 10000) {
  std::vector<double> alive(dtmc.states.size(), 0.0), next(dtmc.states.size());
  alive[dtmc.initial] = 1.0;
  WhenExpectation we;
  we.values.assign(obs.size(), 0.0);
  for (uint64_t t = 0; t <= horizon; ++t) {
    double circulating = 0.0;
    for (size_t s = 0; s < alive.size(); ++s) {
      if (alive[s] == 0.0) continue;
      if (holds(cs, dtmc.states[s].store, condition, t)) {
        for (size_t oi = 0; oi < obs.size(); ++oi)
          we.values[oi] += alive[s] * observe_state(cs, dtmc.states[s].store, obs[oi], t);
        we.absorbed += alive[s];
        alive[s] = 0.0;
      } else {
        circulating += alive[s];
      }
    }
    if (circulating < 1e-15 || t == horizon) break;
    std::fill(next.begin(), next.end(), 0.0);
    for (size_t s = 0; s < alive.size(); ++s) {
      if (alive[s] == 0.0) continue;
      for (const auto& [target, p] : dtmc.rows[s]) next[target] += alive[s] * p;
    }
    alive.swap(next);
  }
  we.residual = 1.0 - we.absorbed;
  if (we.absorbed > 0.0)
    for (auto& v : we.values) v /= we.absorbed;
  return we;
}

inline void write_dtmc_states(const ExplicitDTMC& dtmc, std::ostream& os) {
  for (size_t s = 0; s < dtmc.states.size(); ++s) os << s << "\t" << dtmc.keys[s] << "\n";
}

inline void write_dtmc_transitions(const ExplicitDTMC& dtmc, std::ostream& os) {
  for (size_t s = 0; s < dtmc.rows.size(); ++s)
    for (const auto& [target, p] : dtmc.rows[s])
      os << s << "\t" << target << "\t" << format_number(p) << "\n";
}

}  // namespace qflan
