#pragma once

#include <string>
#include <vector>

namespace qflan {

struct SourceLoc {
  int line = 0;
  int col = 0;
};

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  SourceLoc loc;
};

inline std::string to_string(const Diagnostic& d) {
  std::string s = d.severity == Severity::Error ? "error: " : "warning: ";
  s += d.message;
  s += " @ ";
  s += std::to_string(d.loc.line);
  s += ':';
  s += std::to_string(d.loc.col);
  return s;
}

// Shared result type for parsing and validation passes.
struct ValidationReport {
  std::vector<Diagnostic> diagnostics;

  bool ok() const {
    for (const auto& d : diagnostics)
      if (d.severity == Severity::Error) return false;
    return true;
  }
  void error(std::string msg, SourceLoc loc = {}) {
    diagnostics.push_back({Severity::Error, std::move(msg), loc});
  }
  void warn(std::string msg, SourceLoc loc = {}) {
    diagnostics.push_back({Severity::Warning, std::move(msg), loc});
  }
  std::string str() const {
    std::string out;
    for (const auto& d : diagnostics) {
      out += to_string(d);
      out += '\n';
    }
    return out;
  }
};

}  // namespace qflan
