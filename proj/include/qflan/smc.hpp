#pragma once

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "qflan/simulator.hpp"

namespace qflan {

// Half width of the two-sided (1 - alpha) Student-t confidence interval.
// Requires at least two samples.
inline double ci_half_width_moments(uint64_t n, double m2, double alpha) {
  if (n < 2) throw std::invalid_argument("confidence interval requires at least two samples");
  double variance = m2 / static_cast<double>(n - 1);
  if (variance <= 0.0) return 0.0;
  boost::math::students_t dist(static_cast<double>(n - 1));
  double t = boost::math::quantile(dist, 1.0 - alpha / 2.0);
  return t * std::sqrt(variance / static_cast<double>(n));
}

inline double ci_half_width(const std::vector<double>& samples, double alpha) {
  if (samples.size() < 2)
    throw std::invalid_argument("confidence interval requires at least two samples");
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(samples.size());
  double m2 = 0.0;
  for (double x : samples) m2 += (x - mean) * (x - mean);
  return ci_half_width_moments(samples.size(), m2, alpha);
}

struct CellResult {
  double mean = 0.0;
  double half_width = 0.0;
  uint64_t samples = 0;
};

struct AnalysisResult {
  AnalysisRequest::Kind kind = AnalysisRequest::Kind::When;
  std::string query;
  std::vector<long long> params;         // empty param column for WHEN/UNTIL
  std::vector<std::string> obs_labels;
  std::vector<double> deltas;
  std::vector<CellResult> cells;         // grid-major: [param][obs]
  double alpha = 0.05;
  uint64_t total_sims = 0;

  const CellResult& cell(size_t param, size_t obs) const {
    return cells[param * obs_labels.size() + obs];
  }
};

struct RunOptions {
  uint64_t seed = 20090213;
  int parallelism = 0;       // 0: use the analysis file's setting
  uint64_t max_steps = 10000;
  uint64_t min_samples = 20;
  uint64_t batch_size = 20;
  std::function<TraceSink(uint64_t sim_index)> trace_factory;  // optional
};

namespace detail {

struct Welford {
  uint64_t n = 0;
  double mean = 0.0, m2 = 0.0;

  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
};

}  // namespace detail

// Sequential estimation: simulations run in batches until every cell's
// (1 - alpha) confidence interval is no wider than its delta. All cells share
// the same simulations, so the total count is the maximum requirement over
// cells. Work is distributed round-robin over `parallelism` workers and
// folded in simulation-index order, making results independent of scheduling.
inline AnalysisResult run_analysis(const CompiledSpec& cs, const CompiledAnalysis& ca,
                                   const RunOptions& opts = {}) {
  AnalysisResult res;
  res.kind = ca.kind;
  res.query = ca.query_text;
  res.params = ca.param_grid();
  size_t nparams = ca.kind == AnalysisRequest::Kind::For ? res.params.size() : 1;
  for (const auto& o : ca.obs) {
    res.obs_labels.push_back(o.label);
    res.deltas.push_back(o.delta);
  }
  res.alpha = ca.alpha;
  const size_t ncells = nparams * ca.obs.size();
  std::vector<detail::Welford> acc(ncells);

  int workers = opts.parallelism > 0 ? opts.parallelism : ca.parallelism;
  if (workers < 1) workers = 1;

  auto converged = [&]() {
    for (size_t i = 0; i < ncells; ++i) {
      if (acc[i].n < opts.min_samples) return false;
      double hw = ci_half_width_moments(acc[i].n, acc[i].m2, ca.alpha);
      if (2.0 * hw > res.deltas[i % ca.obs.size()]) return false;
    }
    return true;
  };

  uint64_t next_index = 0;
  while (!converged()) {
    const uint64_t base = next_index;
    const uint64_t count = opts.batch_size;
    std::vector<std::vector<double>> results(count);
    std::vector<std::exception_ptr> errors(count);
    auto work = [&](int w) {
      for (uint64_t k = w; k < count; k += static_cast<uint64_t>(workers)) {
        uint64_t idx = base + k;
        try {
          TraceSink trace = opts.trace_factory ? opts.trace_factory(idx) : TraceSink{};
          results[k] = sample_query(cs, ca, opts.seed, idx, opts.max_steps, trace);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (uint64_t k = 0; k < count; ++k)
      if (errors[k]) std::rethrow_exception(errors[k]);
    for (uint64_t k = 0; k < count; ++k)
      for (size_t i = 0; i < ncells; ++i) acc[i].add(results[k][i]);
    next_index += count;
  }

  res.total_sims = next_index;
  res.cells.resize(ncells);
  for (size_t i = 0; i < ncells; ++i) {
    res.cells[i].mean = acc[i].mean;
    res.cells[i].half_width = ci_half_width_moments(acc[i].n, acc[i].m2, ca.alpha);
    res.cells[i].samples = acc[i].n;
  }
  return res;
}

}  // namespace qflan
