#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gripsim/controller.hpp"
#include "gripsim/physics.hpp"
#include "gripsim/sensor.hpp"
#include "gripsim/slip.hpp"
#include "json.hpp"

namespace gripsim::harness {

struct PidGains {
  double kp = 2e-6;      // m/s per s.p.u.
  double ki = 7e-5;      // m/s per s.p.u. s
  double kd = 0.0;       // m/s per s.p.u./s
  double clamp = 0.05;   // |output| limit, m/s
  double settle_band = 0.05;   // fraction of target
  double settle_time = 0.2;    // s inside the band

  void validate() const;
};

struct CollectionProtocol {
  std::vector<double> target_pressures{20, 40, 60, 80, 100, 150, 200, 250, 300};
  int trials_per_pressure = 3;
  std::vector<physics::ObjectSpec> objects = default_training_objects();
  int fingers = 3;
  double survey_speed_min = 0.02;   // m/s, drawn per trial
  double survey_speed_max = 0.05;
  double survey_accel_min = 0.03;   // m/s^2, drawn per trial
  double survey_accel_max = 0.08;
  double survey_cruise = 0.4;       // s at full survey speed
  double approach_speed = 0.008;
  double approach_timeout = 2.0;
  double settle_timeout = 3.0;
  double hold = 0.6;
  double hold_dip = 0.4;            // fractional pressure dip during the hold, no sliding
  double retract_speed = 0.03;
  double retract_duration = 0.25;
  double unload_tau = 0.15;         // s, decay of the pressure target while unloading
  double retract_ramp = 0.2;        // m/s^2 limit on the release command
  double axis_tilt = 0.4;           // rad, max random tilt of a fingertip's axis off the contact normal
  int baseline_ticks = 20;
  double standoff = 0.003;
  std::uint64_t seed = 7;

  static std::vector<physics::ObjectSpec> default_training_objects();
  void validate() const;
};

struct GraspConfig {
  double duration = 10.0;
  double finger_radius = 0.01;
  double standoff = 0.002;
  int baseline_ticks = 15;
  double approach_timeout = 3.0;
  double settle_time = 0.3;   // all fingers loaded this long before release
  double side_spread = 0.35;  // rad between neighbouring fingers on one side
  double steady_window = 2.0; // s averaged for steady-state forces
  physics::DropCriteria drop;

  void validate() const;
};

struct PerturbationConfig {
  int pulses = 8;
  double first_start = 2.0;
  double total = 30.0;
  double magnitude_min = 0.5;
  double magnitude_max = 3.0;
  double duration_min = 0.1;
  double duration_max = 1.0;
  double gap_min = 1.0;
  double gap_max = 4.0;
  // Pulses (0-based) replaced by one identical "from above" pulse.
  std::vector<int> repeated{0, 3, 7};
  double repeated_magnitude = 2.0;
  double repeated_duration = 0.3;
  double response_window = 0.2;

  void validate() const;
};

struct SimConfig {
  physics::PhysicsConfig physics;
  sensor::SensorConfig sensor;
  control::ControllerConfig controller;
  slip::LabelThresholds labels;
  int horizon = slip::kDefaultHorizon;
  slip::TrainConfig training;
  double holdout = 0.25;           // fraction of trials held out for evaluation
  std::uint64_t split_seed = 99;
  CollectionProtocol protocol;
  PidGains pid;
  GraspConfig grasp;
  PerturbationConfig perturbation;
  int physics_steps_per_tick = 10;

  double tick_seconds() const { return physics.dt * physics_steps_per_tick; }
  void validate() const;
};

nlohmann::ordered_json to_json(const physics::ObjectSpec& o);
physics::ObjectSpec object_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const SimConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
SimConfig config_from_json(const nlohmann::json& j);
SimConfig load_config(const std::string& path);

// Deterministic stream derivation: independent seeds per trial and finger.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace gripsim::harness
