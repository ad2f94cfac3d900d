#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "gripsim/harness/grasp.hpp"

namespace gripsim::harness {

inline constexpr std::uint64_t kTestObjectSeed = 5;

// "pinch", "heavy-box" or "generated:<index>" into the generated test set.
physics::ObjectSpec named_object(std::string_view name);

struct GraspExperiment {
  std::vector<physics::ObjectSpec> objects;  // empty: the generated test set
  std::vector<int> fingers{2, 3};
  int trials = 5;
  double duration = 10.0;
};

// Trials ordered by object, finger count, repetition; ids are consecutive.
std::vector<TrialResult> run_grasp_experiment(const SimConfig& config, std::shared_ptr<const slip::Classifier> classifier,
                                              const GraspExperiment& experiment, std::uint64_t seed);

struct PerturbationExperiment {
  physics::ObjectSpec object = heavy_box();
  int fingers = 3;
  int trials = 5;
};

std::vector<TrialResult> run_perturbation_experiment(const SimConfig& config,
                                                     std::shared_ptr<const slip::Classifier> classifier,
                                                     const PerturbationExperiment& experiment, std::uint64_t seed);

struct MasterSlaveExperiment {
  physics::ObjectSpec object = heavy_box();
  int fingers = 3;
  int trials = 5;
  double duration = 10.0;
  std::vector<FingerOverride> script;  // empty: retraction_script(fingers)
};

std::vector<TrialResult> run_master_slave_experiment(const SimConfig& config,
                                                     std::shared_ptr<const slip::Classifier> classifier,
                                                     const MasterSlaveExperiment& experiment, std::uint64_t seed);

// F_k / sum F. All zeros when nothing is loaded.
std::vector<double> force_shares(const std::vector<double>& forces);

// Two distributions differ when their force shares are more than `tolerance`
// apart in L1.
bool distributions_differ(const std::vector<double>& a, const std::vector<double>& b, double tolerance = 0.05);

struct PerturbationVerdict {
  bool no_drop = false;
  int pulses = 0;
  int pulses_with_rise = 0;
  int differing_pairs = 0;  // among the repeated identical pulses
  int repeated_pairs = 0;

  bool every_pulse_rises() const { return pulses_with_rise == pulses; }
  // At least two of the three pairs of repeated pulses settle differently.
  bool distributions_vary() const { return repeated_pairs > 0 && differing_pairs >= std::min(2, repeated_pairs); }
  bool pass() const { return no_drop && every_pulse_rises() && distributions_vary(); }
};

PerturbationVerdict judge_perturbation(const TrialResult& result, const PerturbationConfig& config);

inline constexpr double kMaxMasterSlaveDisplacement = 0.02;

}  // namespace gripsim::harness
