#pragma once

#include <json.hpp>
#include <ostream>
#include <string>

#include "qflan/smc.hpp"

namespace qflan {

// Result files are byte-deterministic: no timestamps or timings, numbers
// rendered with format_number (12 significant digits).

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_csv(const AnalysisResult& res, std::ostream& os) {
  os << "observation,param,mean,half_width,samples\n";
  const size_t nparams = res.params.empty() ? 1 : res.params.size();
  for (size_t oi = 0; oi < res.obs_labels.size(); ++oi) {
    for (size_t pi = 0; pi < nparams; ++pi) {
      const CellResult& c = res.cell(pi, oi);
      os << csv_field(res.obs_labels[oi]) << ",";
      if (!res.params.empty()) os << res.params[pi];
      os << "," << format_number(c.mean) << "," << format_number(c.half_width) << ","
         << c.samples << "\n";
    }
  }
}

inline void write_json(const AnalysisResult& res, std::ostream& os) {
  nlohmann::ordered_json j;
  j["query"] = res.query;
  j["alpha"] = res.alpha;
  j["total_simulations"] = res.total_sims;
  j["results"] = nlohmann::ordered_json::array();
  const size_t nparams = res.params.empty() ? 1 : res.params.size();
  for (size_t oi = 0; oi < res.obs_labels.size(); ++oi) {
    for (size_t pi = 0; pi < nparams; ++pi) {
      const CellResult& c = res.cell(pi, oi);
      nlohmann::ordered_json row;
      row["observation"] = res.obs_labels[oi];
      if (res.params.empty())
        row["param"] = nullptr;
      else
        row["param"] = res.params[pi];
      row["mean"] = c.mean;
      row["half_width"] = c.half_width;
      row["samples"] = c.samples;
      j["results"].push_back(std::move(row));
    }
  }
  os << j.dump(2) << "\n";
}

inline std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_')
      out += c;
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "obs" : out;
}

// Two-column (param, mean) series for one observation of a FOR query,
// ready for gnuplot.
inline void write_gnuplot_series(const AnalysisResult& res, size_t oi, std::ostream& os) {
  os << "# " << res.obs_labels[oi] << "\n";
  for (size_t pi = 0; pi < res.params.size(); ++pi)
    os << res.params[pi] << " " << format_number(res.cell(pi, oi).mean) << "\n";
}

}  // namespace qflan
