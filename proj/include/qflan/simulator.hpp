#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qflan/rng.hpp"
#include "qflan/semantics.hpp"

namespace qflan {

struct CompiledObs {
  int arith = -1;    // exactly one of arith/formula is set
  int formula = -1;
  double delta = 0.0;
  std::string label;
};

struct CompiledAnalysis {
  AnalysisRequest::Kind kind = AnalysisRequest::Kind::When;
  int condition = -1;          // WHEN target / UNTIL guard
  long long from = 0, to = 0, by = 1;
  std::vector<CompiledObs> obs;
  double alpha = 0.05;
  int parallelism = 1;
  std::string query_text;

  std::vector<long long> param_grid() const {
    std::vector<long long> g;
    if (kind == AnalysisRequest::Kind::For)
      for (long long v = from; v <= to; v += by) g.push_back(v);
    return g;
  }
};

// Precondition: validate_analysis reported no errors against the same spec.
inline CompiledAnalysis bind_analysis(CompiledSpec& cs, const AnalysisRequest& req) {
  CompiledAnalysis ca;
  ca.kind = req.kind;
  ca.alpha = req.alpha;
  ca.parallelism = req.parallelism;
  if (req.kind == AnalysisRequest::Kind::For) {
    ca.from = static_cast<long long>(req.from);
    ca.to = static_cast<long long>(req.to);
    ca.by = static_cast<long long>(req.by);
    ca.query_text = "for step from " + std::to_string(ca.from) + " to " + std::to_string(ca.to) +
                    " by " + std::to_string(ca.by);
  } else {
    ca.condition = compile_formula(cs, req.condition);
    ca.query_text = (req.kind == AnalysisRequest::Kind::When ? "when {" : "until {") +
                    to_string(req.condition) + "}";
  }
  for (size_t i = 0; i < req.observations.size(); ++i) {
    const Observation& o = req.observations[i];
    CompiledObs co;
    co.label = o.label();
    co.delta = req.delta_for(i);
    if (o.expr)
      co.arith = compile_arith(cs, o.expr);
    else
      co.formula = compile_formula(cs, o.formula);
    ca.obs.push_back(std::move(co));
  }
  return ca;
}

inline double observe(const CompiledSpec& cs, const Model& m, const CompiledObs& o,
                      AttrMemo* memo = nullptr) {
  if (o.arith >= 0) return evaluate(cs, m.store, o.arith, m.steps, memo);
  return holds(cs, m.store, o.formula, m.steps, memo) ? 1.0 : 0.0;
}

// One line per executed step: step number, action label, rate, probability.
using TraceSink = std::function<void(uint64_t step, const std::string& action, double rate, double prob)>;

inline StepDistribution transition_probabilities(const CompiledSpec& cs, const Model& m,
                                                 AdmissibilityCache* cache = nullptr,
                                                 AttrMemo* memo = nullptr) {
  return enabled_transitions(cs, m, cache, memo);
}

// Picks the transition by inverse-CDF over the canonical order with a single
// uniform draw.
inline size_t pick_transition(const StepDistribution& dist, double u) {
  double cum = 0.0;
  for (size_t i = 0; i < dist.transitions.size(); ++i) {
    cum += dist.probability(i);
    if (u < cum) return i;
  }
  return dist.transitions.size() - 1;
}

// Advances the model by one DTMC step. Deadlocked states take the implicit
// probability-one self-loop. Exactly one uniform draw is consumed unless the
// state is deadlocked (none).
inline void simulate_step(const CompiledSpec& cs, Model& m, Xoshiro256StarStar& rng,
                          AdmissibilityCache* cache = nullptr, AttrMemo* memo = nullptr,
                          const TraceSink& trace = nullptr) {
  StepDistribution dist = enabled_transitions(cs, m, cache, memo);
  if (dist.transitions.empty()) {
    ++m.steps;
    if (cache) cache->commit(cs, nullptr);
    if (memo) memo->bump();
    if (trace) trace(m.steps, "deadlock", 0.0, 1.0);
    return;
  }
  size_t idx = pick_transition(dist, rng.uniform01());
  Transition& tr = dist.transitions[idx];
  double prob = dist.probability(idx);
  m.store = std::move(tr.store);
  m.procs = std::move(tr.procs);
  ++m.steps;
  if (cache) cache->commit(cs, tr.site);
  if (memo) memo->bump();
  if (trace) trace(m.steps, tr.site->action.text, tr.rate, prob);
}

// Runs one simulation of a query and returns one value per result cell:
// obs.size() values for WHEN/UNTIL, grid.size() * obs.size() for FOR
// (grid-major). max_steps only guards WHEN queries, whose horizon is not
// otherwise bounded; FOR stops at `to` and UNTIL when the guard fails.
inline std::vector<double> sample_query(const CompiledSpec& cs, const CompiledAnalysis& ca,
                                        uint64_t master_seed, uint64_t sim_index,
                                        uint64_t max_steps, const TraceSink& trace = nullptr) {
  Xoshiro256StarStar rng = sim_stream(master_seed, sim_index);
  AdmissibilityCache cache;
  cache.init(cs);
  AttrMemo memo;
  memo.reset(cs);
  Model m = initial_model(cs);

  auto observe_all = [&](std::vector<double>& out) {
    for (const auto& o : ca.obs) out.push_back(observe(cs, m, o, &memo));
  };

  std::vector<double> out;
  switch (ca.kind) {
    case AnalysisRequest::Kind::When: {
      out.reserve(ca.obs.size());
      while (!holds(cs, m.store, ca.condition, m.steps, &memo)) {
        if (m.steps >= max_steps)
          throw AnalysisError("simulation " + std::to_string(sim_index) + " exceeded " +
                              std::to_string(max_steps) + " steps without reaching the target of " +
                              ca.query_text);
        simulate_step(cs, m, rng, &cache, &memo, trace);
      }
      observe_all(out);
      break;
    }
    case AnalysisRequest::Kind::For: {
      std::vector<long long> grid = ca.param_grid();
      out.reserve(grid.size() * ca.obs.size());
      for (long long p : grid) {
        while (static_cast<long long>(m.steps) < p) simulate_step(cs, m, rng, &cache, &memo, trace);
        observe_all(out);
      }
      break;
    }
    case AnalysisRequest::Kind::Until: {
      std::vector<double> ok(ca.obs.size(), 1.0);
      while (holds(cs, m.store, ca.condition, m.steps, &memo)) {
        for (size_t i = 0; i < ca.obs.size(); ++i)
          if (ok[i] != 0.0 && !holds(cs, m.store, ca.obs[i].formula, m.steps, &memo)) ok[i] = 0.0;
        simulate_step(cs, m, rng, &cache, &memo, trace);
      }
      out = std::move(ok);
      break;
    }
  }
  return out;
}

}  // namespace qflan
