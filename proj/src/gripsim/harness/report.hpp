#pragma once

#include <string>
#include <vector>

#include "gripsim/harness/grasp.hpp"

namespace gripsim::harness {

struct ForceStats {
  int count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

ForceStats force_stats(const std::vector<double>& values);

// Stability rate over valid trials, steady-force statistics over stable
// trials, optional classifier lead times.
nlohmann::ordered_json aggregate_report(const std::vector<TrialResult>& results,
                                        const slip::EvalReport* eval = nullptr);

// One row per trial; per-finger columns up to the largest finger count.
std::string trials_csv(const std::vector<TrialResult>& results);

// Plot-ready columns for one trial: applied wrench, then y, command speed,
// F_N and P_dc per finger.
std::string trace_csv(const TrialResult& result);

// Writes trials.csv, summary.json and, when traces are kept, one
// trial_<id>.jsonl log plus trial_<id>.csv per trial under traces/.
nlohmann::ordered_json export_report(const std::vector<TrialResult>& results, const std::string& directory,
                                     const slip::EvalReport* eval = nullptr);

}  // namespace gripsim::harness
