#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slosim/simulator.hpp"

namespace slosim {

// Summary JSON for a simulation run (per-request detail stays in the CSV).
std::string report_summary_json(const SimulationReport& report);

// CSV: id,arrival_s,start_s,end_s,vm,latency_s,slo_hit
std::string requests_csv(const SimulationReport& report);

// Provisioner log joined with cluster size and active cores.
// CSV: tick,now_s,forecast,alpha,delta,deploys,recalls,parks,expiries,
//      actual_per_interval,forecast_per_interval,warm_vms,live_vms,active_cores
std::string ticks_csv(const SimulationReport& report);

// Self-contained SVG: actual requests, forecast, and VM count over time.
std::string timeseries_svg(const SimulationReport& report);

std::uint64_t fnv1a64(const std::string& bytes);

// Collects output files under a directory and writes manifest.json with one
// {path, bytes, fnv1a64} entry per emitted file.
class OutputDir {
 public:
  explicit OutputDir(std::string dir);
  void write(const std::string& name, const std::string& content);
  void finalize();  // writes the manifest

  const std::string& dir() const { return dir_; }
  std::string path_of(const std::string& name) const { return dir_ + "/" + name; }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> entries_;  // name, content digest source
};

}  // namespace slosim
