#include "atcor/evaluate/report.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "atcor/common/error.hpp"

namespace atcor::evaluate {

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

const EvalReport* find(std::span<const EvalReport> reports, const std::string& scheme) {
  for (const auto& r : reports)
    if (r.scheme == scheme) return &r;
  return nullptr;
}

std::string display(const std::string& scheme) {
  if (scheme == "atcor") return "AtCoR";
  if (scheme == "persistence") return "Persistence";
  std::string s = scheme;
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string table(std::span<const EvalReport> reports, const std::vector<std::string>& columns,
                  const std::string& title) {
  std::ostringstream o;
  o << title << "\n";
  if (!reports.empty()) {
    o << "city: " << reports.front().city << ", stations: " << reports.front().stations.size()
      << ", predictions per target: " << reports.front().predictions() << "\n";
  }
  const std::size_t w = 16;
  o << pad("target", 10) << pad("metric", 8);
  for (const auto& c : columns) o << pad(display(c), w);
  o << "\n";
  for (int target = 0; target < 2; ++target) {
    for (int metric = 0; metric < 2; ++metric) {
      o << pad(metric == 0 ? (target == 0 ? "pick-up" : "drop-off") : "", 10) << pad(metric == 0 ? "MAE" : "MSE", 8);
      for (const auto& c : columns) {
        const auto* r = find(reports, c);
        std::string cell = "not implemented";
        if (r) {
          const auto m = (target == 0 ? r->pickups : r->dropoffs).metrics();
          cell = fixed(metric == 0 ? m.mae : m.mse);
        } else if (c != "arima" && c != "gcn") {
          cell = "-";
        }
        o << pad(cell, w);
      }
      o << "\n";
    }
  }
  return o.str();
}

std::vector<std::string> present_columns(std::span<const EvalReport> reports, std::vector<std::string> order) {
  std::vector<std::string> out;
  for (const auto& c : order)
    if (c == "arima" || c == "gcn" || find(reports, c)) out.push_back(c);
  for (const auto& r : reports) {
    bool seen = false;
    for (const auto& c : out) seen = seen || c == r.scheme;
    if (!seen) out.push_back(r.scheme);
  }
  return out;
}

}  // namespace

ErrorSums pooled_pickups(const EvalReport& r) {
  ErrorSums s;
  for (const auto& st : r.stations) s += st.pickups;
  return s;
}

ErrorSums pooled_dropoffs(const EvalReport& r) {
  ErrorSums s;
  for (const auto& st : r.stations) s += st.dropoffs;
  return s;
}

std::string existing_table(std::span<const EvalReport> reports) {
  return table(reports,
               present_columns(reports, {"arima", "rnn", "gcn", "lstm", "gru", "persistence", "atcor"}),
               "Existing stations: MAE and MSE of one-step predictions over the test span");
}

std::string new_station_table(std::span<const EvalReport> reports) {
  return table(reports, present_columns(reports, {"rnn", "lstm", "gru", "persistence", "atcor"}),
               "New stations: MAE and MSE over the window after first usage");
}

std::string ablation_table(const EvalReport& with_virtual, const EvalReport& without_virtual) {
  std::ostringstream o;
  const auto it = with_virtual.metadata.find("protocol.ablation_intervals");
  o << "New stations, first " << (it == with_virtual.metadata.end() ? std::string("?") : it->second)
    << " intervals after first usage: " << display(with_virtual.scheme) << " with and without virtual history\n";
  o << "city: " << with_virtual.city << ", stations: " << with_virtual.stations.size() << "\n";
  o << pad("target", 10) << pad("scheme", 28) << pad("MAE", 12) << pad("MSE", 12) << "\n";
  for (int target = 0; target < 2; ++target) {
    for (const auto* r : {&with_virtual, &without_virtual}) {
      const auto m = (target == 0 ? r->pickups : r->dropoffs).metrics();
      o << pad(r == &with_virtual ? (target == 0 ? "pick-up" : "drop-off") : "", 10)
        << pad(display(r->scheme) + (r == &with_virtual ? " w/ virtual" : " w/o virtual"), 28) << pad(fixed(m.mae), 12)
        << pad(fixed(m.mse), 12) << "\n";
    }
  }
  return o.str();
}

std::string report_records(std::span<const EvalReport> reports) {
  std::ostringstream o;
  for (const auto& r : reports) {
    const auto p = r.pickups.metrics(), d = r.dropoffs.metrics();
    o << "[report]\n"
      << "scheme=" << r.scheme << "\n"
      << "city=" << r.city << "\n"
      << "protocol=" << r.protocol << "\n"
      << "stations=" << r.stations.size() << "\n"
      << "predictions=" << r.predictions() << "\n"
      << "pickups.mae=" << exact(p.mae) << "\n"
      << "pickups.mse=" << exact(p.mse) << "\n"
      << "dropoffs.mae=" << exact(d.mae) << "\n"
      << "dropoffs.mse=" << exact(d.mse) << "\n";
    for (const auto& [k, v] : r.metadata) {
      std::string flat = v;
      for (auto& c : flat)
        if (c == '\n') c = ';';
      o << k << "=" << flat << "\n";
    }
    for (const auto& s : r.stations) {
      const auto sp = s.pickups.metrics(), sd = s.dropoffs.metrics();
      o << "station." << s.station << "=cluster:" << s.cluster << " n:" << s.pickups.n
        << " pickups.mae:" << exact(sp.mae) << " pickups.mse:" << exact(sp.mse) << " dropoffs.mae:" << exact(sd.mae)
        << " dropoffs.mse:" << exact(sd.mse) << "\n";
    }
    o << "\n";
  }
  return o.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace atcor::evaluate
