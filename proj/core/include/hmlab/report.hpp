#pragma once

#include "hmlab/estimates.hpp"

#include <string>
#include <vector>

namespace hmlab {

/// Everything a run emits: the verified-inequality reports plus provenance
/// (config hash, tool version, mesh hashes) so a report is reproducible
/// byte-for-byte from its config and seed.
struct ReportBundle {
  std::string tool_version;
  std::uint64_t config_hash = 0;
  std::string canonical_config;
  std::vector<std::pair<std::string, std::string>> provenance;  // e.g. mesh hashes
  std::vector<EstimateReport> reports;

  bool any_failed() const {
    for (const auto& r : reports)
      if (r.any_failed()) return true;
    return false;
  }
  int exit_code() const { return any_failed() ? 2 : 0; }
};

std::string bundle_to_json(const ReportBundle& bundle);

/// Flat CSV, one row per check:
/// report,context,status,measured,bound,margin,tol_analytic,tol_mesh,tol_sampling,samples
std::string bundle_to_csv(const ReportBundle& bundle);

/// Write via a temp file + rename so observers never see partial reports.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace hmlab
