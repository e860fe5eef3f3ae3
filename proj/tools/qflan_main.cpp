#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qflan/dtmc.hpp"
#include "qflan/elevator_gen.hpp"
#include "qflan/output.hpp"
#include "qflan/parser.hpp"
#include "qflan/smc.hpp"
#include "qflan/validate.hpp"

namespace {

constexpr uint64_t kDefaultSeed = 20090213;

// Exit codes: 0 success, 1 language or analysis failure, 2 usage/file errors.
enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_diagnostics(const std::vector<qflan::Diagnostic>& ds) {
  for (const auto& d : ds) std::cerr << qflan::to_string(d) << "\n";
}

qflan::Specification load_spec(const std::string& path) {
  auto pr = qflan::parse_specification(read_file(path));
  print_diagnostics(pr.diagnostics);
  if (!pr.ok()) throw std::runtime_error(path + ": parse failed");
  auto report = qflan::validate_specification(*pr.spec);
  print_diagnostics(report.diagnostics);
  if (!report.ok()) throw std::runtime_error(path + ": validation failed");
  return std::move(*pr.spec);
}

qflan::AnalysisRequest load_analysis(const std::string& path, const qflan::Specification& spec) {
  auto ar = qflan::parse_analysis(read_file(path));
  print_diagnostics(ar.diagnostics);
  if (!ar.ok()) throw std::runtime_error(path + ": parse failed");
  auto report = qflan::validate_analysis(*ar.request, spec);
  print_diagnostics(report.diagnostics);
  if (!report.ok()) throw std::runtime_error(path + ": validation failed");
  return std::move(*ar.request);
}

void write_or_print(const std::string& out, const std::function<void(std::ostream&)>& fn) {
  if (out.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream os(out, std::ios::binary);
  if (!os) throw UsageError("cannot write " + out);
  fn(os);
}

int cmd_validate(const std::string& model_path, const std::string& analysis_path) {
  auto pr = qflan::parse_specification(read_file(model_path));
  print_diagnostics(pr.diagnostics);
  if (!pr.ok()) return kFailure;
  auto report = qflan::validate_specification(*pr.spec);
  print_diagnostics(report.diagnostics);
  if (!report.ok()) return kFailure;
  if (!analysis_path.empty()) {
    auto ar = qflan::parse_analysis(read_file(analysis_path));
    print_diagnostics(ar.diagnostics);
    if (!ar.ok()) return kFailure;
    auto areport = qflan::validate_analysis(*ar.request, *pr.spec);
    print_diagnostics(areport.diagnostics);
    if (!areport.ok()) return kFailure;
  }
  std::cerr << "ok\n";
  return kOk;
}

int cmd_analyze(const std::string& model_path, const std::string& analysis_path, uint64_t seed,
                int parallelism, uint64_t max_steps, const std::string& format,
                const std::string& out, const std::string& trace_dir,
                const std::string& gnuplot_dir) {
  qflan::Specification spec = load_spec(model_path);
  qflan::AnalysisRequest req = load_analysis(analysis_path, spec);
  qflan::CompiledSpec cs = qflan::compile_specification(spec);
  qflan::CompiledAnalysis ca = qflan::bind_analysis(cs, req);

  qflan::RunOptions opts;
  opts.seed = seed;
  opts.parallelism = parallelism;
  opts.max_steps = max_steps;
  if (!trace_dir.empty()) {
    std::filesystem::create_directories(trace_dir);
    opts.trace_factory = [trace_dir](uint64_t sim_index) -> qflan::TraceSink {
      auto os = std::make_shared<std::ofstream>(trace_dir + "/sim_" + std::to_string(sim_index) +
                                                ".tsv");
      return [os](uint64_t step, const std::string& action, double rate, double prob) {
        *os << step << "\t" << action << "\t" << qflan::format_number(rate) << "\t"
            << qflan::format_number(prob) << "\n";
      };
    };
  }

  auto t0 = std::chrono::steady_clock::now();
  qflan::AnalysisResult res = qflan::run_analysis(cs, ca, opts);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_or_print(out, [&](std::ostream& os) {
    if (format == "json")
      qflan::write_json(res, os);
    else
      qflan::write_csv(res, os);
  });
  if (!gnuplot_dir.empty() && res.kind == qflan::AnalysisRequest::Kind::For) {
    std::filesystem::create_directories(gnuplot_dir);
    for (size_t oi = 0; oi < res.obs_labels.size(); ++oi) {
      std::ofstream os(gnuplot_dir + "/" + qflan::sanitize_label(res.obs_labels[oi]) + ".dat");
      qflan::write_gnuplot_series(res, oi, os);
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%llu simulations in %.2fs\n",
                static_cast<unsigned long long>(res.total_sims), secs);
  std::cerr << buf;
  return kOk;
}

int cmd_exact(const std::string& model_path, const std::string& analysis_path, long long step,
              size_t state_limit, uint64_t horizon, const std::string& export_prefix,
              const std::string& out) {
  qflan::Specification spec = load_spec(model_path);
  qflan::CompiledSpec cs = qflan::compile_specification(spec);
  qflan::ExplicitDTMC dtmc = qflan::build_state_space(cs, state_limit);
  std::cerr << dtmc.states.size() << " states\n";

  if (!export_prefix.empty()) {
    std::ofstream ss(export_prefix + ".states"), ts(export_prefix + ".trans");
    if (!ss || !ts) throw UsageError("cannot write " + export_prefix + ".{states,trans}");
    qflan::write_dtmc_states(dtmc, ss);
    qflan::write_dtmc_transitions(dtmc, ts);
  }
  if (analysis_path.empty()) return kOk;

  qflan::AnalysisRequest req = load_analysis(analysis_path, spec);
  qflan::CompiledAnalysis ca = qflan::bind_analysis(cs, req);
  write_or_print(out, [&](std::ostream& os) {
    os << "observation,param,value\n";
    if (step >= 0) {
      auto values = qflan::transient_expectation(cs, dtmc, ca.obs, static_cast<uint64_t>(step));
      for (size_t i = 0; i < ca.obs.size(); ++i)
        os << qflan::csv_field(ca.obs[i].label) << "," << step << ","
           << qflan::format_number(values[i]) << "\n";
    } else if (ca.kind == qflan::AnalysisRequest::Kind::For) {
      for (long long p : ca.param_grid()) {
        auto values = qflan::transient_expectation(cs, dtmc, ca.obs, static_cast<uint64_t>(p));
        for (size_t i = 0; i < ca.obs.size(); ++i)
          os << qflan::csv_field(ca.obs[i].label) << "," << p << ","
             << qflan::format_number(values[i]) << "\n";
      }
    } else if (ca.kind == qflan::AnalysisRequest::Kind::When) {
      auto we = qflan::when_expectation(cs, dtmc, ca.condition, ca.obs, horizon);
      for (size_t i = 0; i < ca.obs.size(); ++i)
        os << qflan::csv_field(ca.obs[i].label) << ",," << qflan::format_number(we.values[i])
           << "\n";
      os << "residual,," << qflan::format_number(we.residual) << "\n";
    } else {
      throw UsageError("exact supports when and for queries (or --step K)");
    }
  });
  return kOk;
}

int cmd_gen_elevator(int floors, long long max_step, const std::string& out,
                     const std::string& analysis_out) {
  if (floors < 2) throw UsageError("--floors must be at least 2");
  write_or_print(out, [&](std::ostream& os) { os << qflan::generate_elevator(floors, max_step); });
  if (!analysis_out.empty())
    write_or_print(analysis_out, [&](std::ostream& os) { os << qflan::elevator_until_analysis(); });
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qflan: probabilistic feature-oriented model analysis"};
  app.require_subcommand(1);

  std::string model, analysis, out, trace_dir, gnuplot_dir, export_prefix, format = "csv";
  uint64_t seed = kDefaultSeed, max_steps = 10000, horizon = 10000;
  int parallelism = 0, floors = 5;
  long long step = -1, max_step = 10000;
  size_t state_limit = 1000000;

  auto* validate = app.add_subcommand("validate", "parse and validate a model");
  validate->add_option("model", model, "model file")->required();
  validate->add_option("--analysis", analysis, "analysis file to validate against the model");

  auto* analyze = app.add_subcommand("analyze", "statistical model checking");
  analyze->add_option("model", model, "model file")->required();
  analyze->add_option("analysis", analysis, "analysis file")->required();
  analyze->add_option("--seed", seed, "master seed");
  analyze->add_option("--parallelism", parallelism, "worker threads (overrides the analysis file)");
  analyze->add_option("--max-steps", max_steps, "step budget per simulation for when-queries");
  analyze->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  analyze->add_option("--out", out, "result file (default: stdout)");
  analyze->add_option("--trace", trace_dir, "write per-simulation traces into this directory");
  analyze->add_option("--gnuplot", gnuplot_dir, "write per-observation series for for-queries");

  auto* exact = app.add_subcommand("exact", "exact analysis on the explicit DTMC");
  exact->add_option("model", model, "model file")->required();
  exact->add_option("--analysis", analysis, "analysis file with the query and observations");
  exact->add_option("--step", step, "expected observation values after exactly K steps");
  exact->add_option("--state-limit", state_limit, "abort if the state space exceeds this");
  exact->add_option("--horizon", horizon, "absorption horizon for when-queries");
  exact->add_option("--export", export_prefix, "write <prefix>.states and <prefix>.trans");
  exact->add_option("--out", out, "result file (default: stdout)");

  auto* gen = app.add_subcommand("gen-elevator", "generate the elevator case study");
  gen->add_option("--floors", floors, "number of floors")->required();
  gen->add_option("--max-step", max_step, "until-query horizon stored in the model");
  gen->add_option("--out", out, "model file (default: stdout)");
  gen->add_option("--analysis-out", analysis, "also write the matching until-query");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(model, analysis);
    if (analyze->parsed())
      return cmd_analyze(model, analysis, seed, parallelism, max_steps, format, out, trace_dir,
                         gnuplot_dir);
    if (exact->parsed())
      return cmd_exact(model, analysis, step, state_limit, horizon, export_prefix, out);
    if (gen->parsed()) return cmd_gen_elevator(floors, max_step, out, analysis);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
