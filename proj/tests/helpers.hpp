// Shared fixtures for the test suite: file loading and parse/compile
// shortcuts around the bundled models.
#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "qflan/parser.hpp"
#include "qflan/pretty.hpp"
#include "qflan/semantics.hpp"
#include "qflan/simulator.hpp"
#include "qflan/validate.hpp"

namespace testutil {

inline std::string model_path(const std::string& name) {
  return std::string(QFLAN_MODELS_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline qflan::Specification parse_model(const std::string& name) {
  auto r = qflan::parse_specification(slurp(model_path(name)));
  if (!r.ok())
    throw std::runtime_error(name + ": " + r.diagnostics.front().message);
  return *r.spec;
}

inline qflan::AnalysisRequest parse_query(const std::string& name) {
  auto r = qflan::parse_analysis(slurp(model_path(name)));
  if (!r.ok())
    throw std::runtime_error(name + ": " + r.diagnostics.front().message);
  return *r.request;
}

// Parse + validate + compile in one go; throws on any error so tests fail
// loudly when a bundled model regresses.
inline qflan::CompiledSpec compile_model(const std::string& name) {
  auto spec = parse_model(name);
  auto report = qflan::validate_specification(spec);
  if (!report.ok()) throw std::runtime_error(name + ": " + report.str());
  return qflan::compile_specification(spec);
}

inline qflan::CompiledSpec compile_text(const std::string& source) {
  auto r = qflan::parse_specification(source);
  if (!r.ok()) throw std::runtime_error("parse: " + r.diagnostics.front().message);
  auto report = qflan::validate_specification(*r.spec);
  if (!report.ok()) throw std::runtime_error("validate: " + report.str());
  return qflan::compile_specification(*r.spec);
}

inline qflan::CompiledAnalysis bind_query(qflan::CompiledSpec& cs, const std::string& name) {
  return qflan::bind_analysis(cs, parse_query(name));
}

inline qflan::CompiledAnalysis bind_query_text(qflan::CompiledSpec& cs,
                                               const std::string& source) {
  auto r = qflan::parse_analysis(source);
  if (!r.ok()) throw std::runtime_error("parse: " + r.diagnostics.front().message);
  return qflan::bind_analysis(cs, *r.request);
}

}  // namespace testutil
