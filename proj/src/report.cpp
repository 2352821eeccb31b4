#include "slosim/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/stat.h>

#include <json.hpp>

#include "slosim/errors.hpp"

namespace slosim {

namespace {
using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}
}  // namespace

std::string report_summary_json(const SimulationReport& r) {
  json j;
  j["requests"] = r.requests.size();
  j["slo_hits"] = r.slo_hits;
  j["slo_misses"] = r.slo_misses;
  j["slo_compliance"] = r.slo_compliance;
  j["total_cost"] = r.total_cost;
  j["core_seconds_released"] = r.core_seconds_released;
  j["latency_s"] = {{"p50", r.p50_latency_s}, {"p95", r.p95_latency_s}, {"p99", r.p99_latency_s}};
  j["horizon_end_s"] = r.horizon_end_s;
  j["vms_deployed"] = r.vms_deployed;
  j["state_transitions"] = r.state_transitions;
  j["illegal_transitions"] = r.illegal_transitions;
  j["ticks"] = r.ticks.size();
  return j.dump(2);
}

std::string requests_csv(const SimulationReport& r) {
  std::ostringstream out;
  out << "id,arrival_s,start_s,end_s,vm,latency_s,slo_hit\n";
  for (const auto& q : r.requests) {
    out << q.id << "," << fmt(q.arrival_s) << "," << fmt(q.start_s) << "," << fmt(q.end_s) << ","
        << q.vm << "," << fmt(q.latency_s) << "," << (q.slo_hit ? 1 : 0) << "\n";
  }
  return out.str();
}

std::string ticks_csv(const SimulationReport& r) {
  std::ostringstream out;
  out << "tick,now_s,forecast,alpha,delta,deploys,recalls,parks,expiries,"
         "actual_per_interval,forecast_per_interval,warm_vms,live_vms,active_cores\n";
  for (const auto& t : r.ticks) {
    const auto& a = t.actions;
    out << a.tick << "," << fmt(a.now_s) << "," << fmt(a.forecast) << "," << a.alpha << ","
        << a.delta << "," << a.deploys << "," << a.recalls << "," << a.parks << "," << a.expiries
        << "," << fmt(t.actual_per_interval) << "," << fmt(t.forecast_per_interval) << ","
        << t.warm_vms << "," << t.live_vms << "," << t.total_active_cores << "\n";
  }
  return out.str();
}

namespace {

struct Series {
  std::vector<double> xs, ys;
};

void polyline(std::ostringstream& out, const Series& s, double x0, double x1, double y1,
              double w, double h, double pad, const char* color) {
  if (s.xs.empty() || x1 <= x0 || y1 <= 0.0) return;
  out << "<polyline fill='none' stroke='" << color << "' stroke-width='1' points='";
  for (std::size_t i = 0; i < s.xs.size(); ++i) {
    double px = pad + (s.xs[i] - x0) / (x1 - x0) * w;
    double py = pad + h - std::min(1.0, std::max(0.0, s.ys[i] / y1)) * h;
    out << fmt(px) << "," << fmt(py) << " ";
  }
  out << "'/>\n";
}

}  // namespace

std::string timeseries_svg(const SimulationReport& r) {
  Series actual, forecast, vms;
  double x0 = 0.0, x1 = 1.0, ymax = 1.0, vmax = 1.0;
  if (!r.ticks.empty()) {
    x0 = r.ticks.front().actions.now_s;
    x1 = std::max(x0 + 1.0, r.ticks.back().actions.now_s);
  }
  for (const auto& t : r.ticks) {
    if (t.actual_per_interval >= 0.0) {
      actual.xs.push_back(t.actions.now_s);
      actual.ys.push_back(t.actual_per_interval);
      ymax = std::max(ymax, t.actual_per_interval);
    }
    if (t.forecast_per_interval >= 0.0) {
      forecast.xs.push_back(t.actions.now_s);
      forecast.ys.push_back(t.forecast_per_interval);
      ymax = std::max(ymax, t.forecast_per_interval);
    }
    vms.xs.push_back(t.actions.now_s);
    vms.ys.push_back(static_cast<double>(t.warm_vms));
    vmax = std::max(vmax, static_cast<double>(t.warm_vms));
  }

  const double pad = 40, w = 820, h = 240;
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << (w + 2 * pad) << "' height='"
      << (h + 2 * pad) << "'>\n";
  out << "<rect x='" << pad << "' y='" << pad << "' width='" << w << "' height='" << h
      << "' fill='white' stroke='#888'/>\n";
  polyline(out, actual, x0, x1, ymax, w, h, pad, "#c0392b");
  polyline(out, forecast, x0, x1, ymax, w, h, pad, "#2980b9");
  polyline(out, vms, x0, x1, vmax, w, h, pad, "#27ae60");
  out << "<text x='" << pad << "' y='" << (pad - 8)
      << "' font-size='12' font-family='monospace'>"
      << "red: requests/interval  blue: forecast  green: warm VMs (scale max " << fmt(vmax)
      << ")</text>\n";
  out << "<text x='" << pad << "' y='" << (pad + h + 24)
      << "' font-size='12' font-family='monospace'>t in [" << fmt(x0) << ", " << fmt(x1)
      << "] s, request scale max " << fmt(ymax) << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

OutputDir::OutputDir(std::string dir) : dir_(std::move(dir)) {
  ::mkdir(dir_.c_str(), 0755);  // EEXIST is fine; write() surfaces real failures
}

void OutputDir::write(const std::string& name, const std::string& content) {
  std::ofstream out(path_of(name), std::ios::binary);
  if (!out) throw ParseError(path_of(name) + ": cannot open for writing");
  out << content;
  out.close();
  char digest[32];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(fnv1a64(content)));
  entries_.emplace_back(name, std::to_string(content.size()) + ":" + digest);
}

void OutputDir::finalize() {
  nlohmann::json j;
  j["files"] = nlohmann::json::array();
  for (const auto& [name, meta] : entries_) {
    auto colon = meta.find(':');
    j["files"].push_back({{"path", name},
                          {"bytes", std::stoull(meta.substr(0, colon))},
                          {"fnv1a64", meta.substr(colon + 1)}});
  }
  std::ofstream out(path_of("manifest.json"), std::ios::binary);
  if (!out) throw ParseError(path_of("manifest.json") + ": cannot open for writing");
  out << j.dump(2) << "\n";
}

}  // namespace slosim
