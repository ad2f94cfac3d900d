#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gripsim/harness/config.hpp"

namespace gripsim::harness {

// Directions (world frame, from the object centre) at which fingers are placed.
// Two fingers oppose horizontally; more fingers split between the two sides,
// spaced `spread` apart and centred on the horizontal.
std::vector<double> grasp_angles(int n_fingers, double spread);

// Fingertips on rays from the object centre, `standoff` outside the surface.
std::vector<physics::FingertipState> place_fingers(const physics::ObjectSpec& object, const physics::Pose& pose,
                                                   const std::vector<double>& angles, double radius,
                                                   double standoff);

struct PidState {
  double integral = 0.0;
  double previous_error = 0.0;
  bool has_previous = false;
};

// Inward normal speed (m/s, positive presses) from the pressure error.
double pid_pressure_servo(double target, double measured, PidState& state, const PidGains& gains, double dt);

// Settled once |error| < band * target continuously for the settle time.
class SettleDetector {
 public:
  SettleDetector(double band, double hold) : band_(band), hold_(hold) {}
  bool update(double target, double measured, double dt);
  bool settled() const { return settled_; }

 private:
  double band_;
  double hold_;
  double inside_ = 0.0;
  bool settled_ = false;
};

struct FingerTrace {
  std::vector<sensor::SensorFrame> raw;
  std::vector<sensor::SensorFrame> grounded;
  std::vector<Vec2> positions;
  std::vector<double> normal_force;
  std::vector<double> utilization;
  std::vector<ContactClass> truth;  // physics ground truth
  std::vector<ContactClass> labels;  // auto-labels from P_dc and positions
};

struct CollectionTrial {
  int trial_id = 0;
  int object_index = 0;
  std::string object_name;
  double target_pressure = 0.0;
  double survey_speed = 0.0;
  double survey_accel = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  std::vector<FingerTrace> fingers;
};

struct CollectionResult {
  std::vector<CollectionTrial> trials;
  std::vector<slip::TrialRecord> records;  // successful trials only, one per finger
  std::vector<std::string> warnings;

  int failed_trials() const;
};

// Runs one trial of the collection protocol on a fixated object.
// `survey_speed_override` replaces the random survey speed (tests).
CollectionTrial run_collection_trial(const SimConfig& config, int object_index, double target_pressure,
                                     int trial_id, std::uint64_t seed,
                                     std::optional<double> survey_speed_override = std::nullopt);

CollectionResult collect_training_data(const SimConfig& config);

// Deterministic split by trial id; roughly `holdout` of the trials go to test.
struct DatasetSplit {
  std::vector<slip::LabeledSample> train;
  std::vector<slip::LabeledSample> test;
};
DatasetSplit split_by_trial(const std::vector<slip::LabeledSample>& samples, double holdout, std::uint64_t seed);

}  // namespace gripsim::harness
