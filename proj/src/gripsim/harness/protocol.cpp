#include "gripsim/harness/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace gripsim::harness {

std::vector<double> grasp_angles(int n_fingers, double spread) {
  require(n_fingers >= 1, ErrorCode::InvalidArgument, "need at least one finger");
  if (n_fingers == 1) return {0.0};
  if (n_fingers == 2) return {0.0, std::numbers::pi};
  std::vector<double> angles;
  const int right = n_fingers / 2;
  const int left = n_fingers - right;
  for (int i = 0; i < right; ++i) angles.push_back((i - (right - 1) / 2.0) * spread);
  for (int i = 0; i < left; ++i) angles.push_back(std::numbers::pi + (i - (left - 1) / 2.0) * spread);
  return angles;
}

std::vector<physics::FingertipState> place_fingers(const physics::ObjectSpec& object, const physics::Pose& pose,
                                                   const std::vector<double>& angles, double radius,
                                                   double standoff) {
  std::vector<physics::FingertipState> fingers;
  fingers.reserve(angles.size());
  for (double a : angles) {
    const auto sp = physics::surface_along_ray(object, pose, a);
    physics::FingertipState f;
    f.radius = radius;
    f.position = sp.point + sp.normal * (radius + standoff);
    fingers.push_back(f);
  }
  return fingers;
}

double pid_pressure_servo(double target, double measured, PidState& state, const PidGains& gains, double dt) {
  const double error = target - measured;
  state.integral += error * dt;
  const double derivative = state.has_previous ? (error - state.previous_error) / dt : 0.0;
  state.previous_error = error;
  state.has_previous = true;
  const double u = gains.kp * error + gains.ki * state.integral + gains.kd * derivative;
  return std::clamp(u, -gains.clamp, gains.clamp);
}

bool SettleDetector::update(double target, double measured, double dt) {
  if (std::abs(target - measured) < band_ * std::abs(target)) {
    inside_ += dt;
  } else {
    inside_ = 0.0;
  }
  if (inside_ >= hold_ - 1e-12) settled_ = true;
  return settled_;
}

int CollectionResult::failed_trials() const {
  return static_cast<int>(std::count_if(trials.begin(), trials.end(), [](const auto& t) { return t.failed; }));
}

namespace {

enum class Phase { Baseline, Approach, Servo, Hold, Survey, Unload, Release, Retract, Done };

struct CollectingFinger {
  Phase phase = Phase::Baseline;
  double phase_time = 0.0;
  PidState pid;
  SettleDetector settle{0.05, 0.2};
  double direction = 1.0;  // survey direction along the contact tangent
  double normal_command = 0.0;  // inward speed
  Vec2 axis;
};

}  // namespace

CollectionTrial run_collection_trial(const SimConfig& config, int object_index, double target_pressure,
                                     int trial_id, std::uint64_t seed, std::optional<double> survey_speed_override) {
  const auto& pr = config.protocol;
  require(object_index >= 0 && object_index < static_cast<int>(pr.objects.size()), ErrorCode::InvalidArgument,
          "object index out of range");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  CollectionTrial trial;
  trial.trial_id = trial_id;
  trial.object_index = object_index;
  trial.object_name = pr.objects[object_index].name;
  trial.target_pressure = target_pressure;
  trial.seed = seed;
  trial.survey_speed = pr.survey_speed_min + (pr.survey_speed_max - pr.survey_speed_min) * unit(rng);
  trial.survey_accel = pr.survey_accel_min + (pr.survey_accel_max - pr.survey_accel_min) * unit(rng);
  if (survey_speed_override) trial.survey_speed = *survey_speed_override;
  const double rotation = 2.0 * std::numbers::pi * unit(rng);

  physics::ObjectSpec object = pr.objects[object_index];
  std::vector<double> angles;
  for (int k = 0; k < pr.fingers; ++k) angles.push_back(rotation + 2.0 * std::numbers::pi * k / pr.fingers);
  auto tips = place_fingers(object, object.initial_pose, angles, config.grasp.finger_radius, pr.standoff);
  physics::WorldState world = physics::make_world(object, tips, config.physics);
  world.object_fixed = true;

  const std::size_t n = world.fingers.size();
  std::vector<CollectingFinger> fingers(n);
  std::vector<sensor::SensorModel> sensors;
  for (std::size_t k = 0; k < n; ++k) {
    sensors.emplace_back(config.sensor, derive_seed(seed, 1, k), derive_seed(seed, 2, k));
    fingers[k].direction = unit(rng) < 0.5 ? -1.0 : 1.0;
    fingers[k].settle = SettleDetector(config.pid.settle_band, config.pid.settle_time);
    fingers[k].axis = rotate(-world.contacts[k].normal, pr.axis_tilt * (2.0 * unit(rng) - 1.0));
  }
  trial.fingers.resize(n);
  std::vector<sensor::Baseline> baselines(n);

  const double dt = config.tick_seconds();
  const double ramp_time = trial.survey_accel > 0.0 ? trial.survey_speed / trial.survey_accel : 0.0;
  const double contact_threshold = config.labels.contact;
  const int max_ticks = static_cast<int>(std::ceil(
      (pr.baseline_ticks * dt + pr.approach_timeout + pr.settle_timeout + 2.0 * pr.hold + ramp_time + pr.unload_tau * std::log(std::max(1.0, 2.0 * target_pressure / contact_threshold)) +
       pr.survey_cruise + 1.0 + pr.retract_duration) / dt)) + 50;

  for (std::int64_t tick = 0; tick < max_ticks; ++tick) {
    bool all_done = true;
    for (std::size_t k = 0; k < n; ++k) {
      auto& f = fingers[k];
      auto& trace = trial.fingers[k];
      const auto& contact = world.contacts[k];
      const Vec2 normal = contact.normal;
      const double angle = sensor::contact_point_angle(f.axis, normal);
      trace.raw.push_back(sensors[k].sample(contact, angle, tick));
      trace.positions.push_back(world.fingers[k].position);
      trace.normal_force.push_back(contact.normal_force);
      trace.utilization.push_back(contact.utilization);
      trace.truth.push_back(physics::ground_truth_contact_class(contact, config.physics));

      if (static_cast<int>(tick) + 1 == pr.baseline_ticks) {
        baselines[k] = sensor::capture_baseline(trace.raw, trace.normal_force);
        for (const auto& r : trace.raw) trace.grounded.push_back(sensor::ground_frame(r, baselines[k]));
      } else if (static_cast<int>(tick) >= pr.baseline_ticks) {
        trace.grounded.push_back(sensor::ground_frame(trace.raw.back(), baselines[k]));
      }
      const double p = trace.grounded.empty() ? 0.0 : trace.grounded.back().p_dc();

      double tangential = 0.0;
      f.phase_time += dt;
      auto enter = [&f](Phase next) {
        f.phase = next;
        f.phase_time = 0.0;
      };
      switch (f.phase) {
        case Phase::Baseline:
          f.normal_command = 0.0;
          if (static_cast<int>(tick) + 1 >= pr.baseline_ticks) enter(Phase::Approach);
          break;
        case Phase::Approach:
          f.normal_command = pr.approach_speed;
          if (p > contact_threshold) {
            // Bumpless hand-over to the servo.
            f.pid.integral = config.pid.ki > 0.0 ? pr.approach_speed / config.pid.ki : 0.0;
            enter(Phase::Servo);
          } else if (f.phase_time > pr.approach_timeout) {
            trial.failed = true;
            trial.failure = "finger " + std::to_string(k) + " never reached contact";
          }
          break;
        case Phase::Servo:
          f.normal_command = pid_pressure_servo(target_pressure, p, f.pid, config.pid, dt);
          if (f.settle.update(target_pressure, p, dt) || f.phase_time > pr.settle_timeout) enter(Phase::Hold);
          break;
        case Phase::Hold: {
          const double dip = std::sin(std::numbers::pi * std::min(f.phase_time / pr.hold, 1.0));
          const double goal = target_pressure * (1.0 - pr.hold_dip * dip * dip);
          f.normal_command = pid_pressure_servo(goal, p, f.pid, config.pid, dt);
          if (f.phase_time >= pr.hold - 1e-9) enter(Phase::Survey);
          break;
        }
        case Phase::Survey:
          f.normal_command = pid_pressure_servo(target_pressure, p, f.pid, config.pid, dt);
          tangential = f.direction * std::min(trial.survey_speed, trial.survey_accel * f.phase_time);
          if (f.phase_time >= ramp_time + pr.survey_cruise - 1e-9) enter(Phase::Unload);
          break;
        case Phase::Unload: {
          // Lift off while still sliding; a stopped fingertip would rest loaded
          // at the friction limit.
          const double goal = target_pressure * std::exp(-f.phase_time / pr.unload_tau);
          f.normal_command = pid_pressure_servo(goal, p, f.pid, config.pid, dt);
          tangential = f.direction * trial.survey_speed;
          if (goal < 0.5 * contact_threshold) enter(Phase::Release);
          break;
        }
        case Phase::Release:
          tangential = f.direction * trial.survey_speed;
          f.normal_command = std::max(f.normal_command - pr.retract_ramp * dt, -pr.approach_speed);
          if (p <= contact_threshold && contact.normal_force == 0.0) enter(Phase::Retract);
          break;
        case Phase::Retract:
          f.normal_command = -pr.retract_speed;
          if (f.phase_time >= pr.retract_duration - 1e-9) enter(Phase::Done);
          break;
        case Phase::Done:
          f.normal_command = 0.0;
          break;
      }
      if (f.phase != Phase::Done) all_done = false;
      world.fingers[k].commanded_velocity = -normal * f.normal_command + normal.perp() * tangential;
    }
    if (trial.failed || all_done) break;
    for (int s = 0; s < config.physics_steps_per_tick; ++s) physics::step_physics_in_place(world, config.physics);
  }

  if (!trial.failed) {
    for (auto& trace : trial.fingers) {
      std::vector<double> pdc;
      pdc.reserve(trace.grounded.size());
      for (const auto& g : trace.grounded) pdc.push_back(g.p_dc());
      trace.labels = slip::auto_label(pdc, trace.positions, config.labels);
    }
  }
  return trial;
}

CollectionResult collect_training_data(const SimConfig& config) {
  config.validate();
  const auto& pr = config.protocol;
  CollectionResult result;
  int trial_id = 0;
  for (int o = 0; o < static_cast<int>(pr.objects.size()); ++o) {
    for (double target : pr.target_pressures) {
      for (int rep = 0; rep < pr.trials_per_pressure; ++rep, ++trial_id) {
        auto trial = run_collection_trial(config, o, target, trial_id, derive_seed(pr.seed, trial_id));
        if (trial.failed) {
          result.warnings.push_back("trial " + std::to_string(trial_id) + " excluded: " + trial.failure);
        } else {
          for (std::size_t k = 0; k < trial.fingers.size(); ++k) {
            slip::TrialRecord rec;
            rec.trial_id = trial_id;
            rec.finger_id = static_cast<int>(k);
            rec.grounded = trial.fingers[k].grounded;
            rec.labels = trial.fingers[k].labels;
            result.records.push_back(std::move(rec));
          }
        }
        result.trials.push_back(std::move(trial));
      }
    }
  }
  return result;
}

DatasetSplit split_by_trial(const std::vector<slip::LabeledSample>& samples, double holdout, std::uint64_t seed) {
  require(holdout >= 0.0 && holdout < 1.0, ErrorCode::InvalidArgument, "holdout fraction must lie in [0, 1)");
  DatasetSplit split;
  for (const auto& s : samples) {
    const std::uint64_t h = derive_seed(seed, static_cast<std::uint64_t>(s.trial_id));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    (u < holdout ? split.test : split.train).push_back(s);
  }
  return split;
}

}  // namespace gripsim::harness
