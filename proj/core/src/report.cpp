#include "hmlab/report.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace hmlab {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64, v);
  return buf;
}

// Fixed shortest-round-trip formatting keeps reports byte-stable.
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json check_to_json(const BoundCheck& c) {
  ordered_json j;
  j["context"] = c.context;
  j["status"] = to_string(c.status);
  if (c.applicable()) {
    j["measured"] = num(c.measured);
    j["bound"] = num(c.bound);
    j["margin"] = num(c.margin());
    j["tol_analytic"] = num(c.tol_analytic);
    j["tol_mesh"] = num(c.tol_mesh);
    j["tol_sampling"] = num(c.tol_sampling);
  }
  j["samples"] = c.samples;
  return j;
}

}  // namespace

std::string bundle_to_json(const ReportBundle& bundle) {
  ordered_json j;
  j["schema"] = 1;
  j["tool_version"] = bundle.tool_version;
  j["config_hash"] = hex64(bundle.config_hash);
  j["config"] = ordered_json::parse(bundle.canonical_config);
  ordered_json prov = ordered_json::object();
  for (const auto& [k, v] : bundle.provenance) prov[k] = v;
  j["provenance"] = prov;
  ordered_json reps = ordered_json::array();
  for (const auto& r : bundle.reports) {
    ordered_json jr;
    jr["name"] = r.name;
    ordered_json sc = ordered_json::object();
    for (const auto& [k, v] : r.scalars) sc[k] = num(v);
    jr["scalars"] = sc;
    ordered_json cks = ordered_json::array();
    for (const auto& c : r.checks) cks.push_back(check_to_json(c));
    jr["checks"] = cks;
    jr["notes"] = r.notes;
    reps.push_back(jr);
  }
  j["reports"] = reps;
  j["status"] = bundle.any_failed() ? "fail" : "pass";
  return j.dump(2) + "\n";
}

std::string bundle_to_csv(const ReportBundle& bundle) {
  std::ostringstream out;
  out << "report,context,status,measured,bound,margin,tol_analytic,tol_mesh,tol_sampling,samples\n";
  for (const auto& r : bundle.reports)
    for (const auto& c : r.checks) {
      out << r.name << ',' << c.context << ',' << to_string(c.status) << ',';
      if (c.applicable()) {
        out << num(c.measured) << ',' << num(c.bound) << ',' << num(c.margin()) << ','
            << num(c.tol_analytic) << ',' << num(c.tol_mesh) << ',' << num(c.tol_sampling);
      } else {
        out << ",,,,,";
      }
      out << ',' << c.samples << '\n';
    }
  return out.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("write_file_atomic: cannot open " + tmp);
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) throw Error("write_file_atomic: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace hmlab
