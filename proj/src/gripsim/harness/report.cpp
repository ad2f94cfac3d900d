#include "gripsim/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gripsim::harness {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

ForceStats force_stats(const std::vector<double>& values) {
  ForceStats s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / s.count);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

namespace {

ordered_json stats_json(const ForceStats& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min}, {"max", s.max}};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

}  // namespace

ordered_json aggregate_report(const std::vector<TrialResult>& results, const slip::EvalReport* eval) {
  require(!results.empty(), ErrorCode::PreconditionFailed, "a report needs at least one trial");
  int valid = 0;
  int stable = 0;
  std::vector<double> steady;
  std::vector<double> displacement;
  for (const auto& r : results) {
    if (!r.valid) continue;
    ++valid;
    displacement.push_back(r.max_displacement);
    if (r.stable) {
      ++stable;
      steady.push_back(r.steady_normal_force);
    }
  }
  ordered_json j;
  j["trials"] = results.size();
  j["valid_trials"] = valid;
  j["invalid_trials"] = static_cast<int>(results.size()) - valid;
  j["stable_trials"] = stable;
  j["stability_rate"] = valid > 0 ? static_cast<double>(stable) / valid : 0.0;
  j["steady_normal_force"] = stats_json(force_stats(steady));
  j["max_displacement"] = stats_json(force_stats(displacement));
  if (eval != nullptr) {
    ordered_json lead;
    lead["onsets"] = eval->lead_times.size();
    lead["median"] = eval->median_lead();
    lead["fraction_at_least_5"] = eval->fraction_with_lead_at_least(5);
    j["lead_times"] = lead;
    j["balanced_accuracy"] = eval->balanced_accuracy;
  }
  return j;
}

std::string trials_csv(const std::vector<TrialResult>& results) {
  int fingers = 0;
  for (const auto& r : results) fingers = std::max(fingers, r.n_fingers);
  std::ostringstream out;
  out.precision(10);
  out << "trial_id,kind,object,mass,friction,n_fingers,seed,valid,stable,drop_time,duration,"
         "steady_normal_force,max_displacement";
  for (int k = 0; k < fingers; ++k) out << ",F_N_" << k;
  for (int k = 0; k < fingers; ++k) out << ",y_min_" << k;
  out << '\n';
  for (const auto& r : results) {
    out << r.trial_id << ',' << r.kind << ',' << csv_field(r.object_name) << ',' << r.object_mass << ','
        << r.object_friction << ',' << r.n_fingers << ',' << r.seed << ',' << (r.valid ? 1 : 0) << ','
        << (r.stable ? 1 : 0) << ',';
    if (r.drop_time) out << *r.drop_time;
    out << ',' << r.duration << ',' << r.steady_normal_force << ',' << r.max_displacement;
    for (int k = 0; k < fingers; ++k) {
      out << ',';
      if (k < static_cast<int>(r.fingers.size())) out << r.fingers[k].steady_normal_force;
    }
    for (int k = 0; k < fingers; ++k) {
      out << ',';
      if (k < static_cast<int>(r.fingers.size()) && r.fingers[k].y_min) out << *r.fingers[k].y_min;
    }
    out << '\n';
  }
  return out.str();
}

std::string trace_csv(const TrialResult& result) {
  std::ostringstream out;
  out.precision(10);
  const int n = result.n_fingers;
  out << "time,x,y,theta,wrench_x,wrench_y,torque";
  for (const char* col : {"y", "speed", "F_N", "P_dc"}) {
    for (int k = 0; k < n; ++k) out << ',' << col << '_' << k;
  }
  out << '\n';
  for (const auto& t : result.ticks) {
    out << t.time << ',' << t.pose.x << ',' << t.pose.y << ',' << t.pose.theta << ',' << t.applied.fx << ','
        << t.applied.fy << ',' << t.applied.torque;
    for (const auto& f : t.fingers) out << ',' << f.control.y;
    for (const auto& f : t.fingers) out << ',' << f.command.norm();
    for (const auto& f : t.fingers) out << ',' << f.normal_force;
    for (const auto& f : t.fingers) out << ',' << f.p_dc;
    out << '\n';
  }
  return out.str();
}

ordered_json export_report(const std::vector<TrialResult>& results, const std::string& directory,
                           const slip::EvalReport* eval) {
  auto summary = aggregate_report(results, eval);
  const fs::path dir(directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create '" + directory + "': " + ec.message());
  write_file(dir / "trials.csv", trials_csv(results));
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  bool traces = false;
  for (const auto& r : results) traces = traces || !r.ticks.empty();
  if (traces) {
    fs::create_directories(dir / "traces", ec);
    if (ec) fail(ErrorCode::Io, "cannot create trace directory: " + ec.message());
    for (const auto& r : results) {
      if (r.ticks.empty()) continue;
      const std::string stem = "trial_" + std::to_string(r.trial_id);
      std::string lines;
      for (const auto& t : r.ticks) lines += to_json(t).dump() + "\n";
      write_file(dir / "traces" / (stem + ".jsonl"), lines);
      write_file(dir / "traces" / (stem + ".csv"), trace_csv(r));
    }
  }
  return summary;
}

}  // namespace gripsim::harness
