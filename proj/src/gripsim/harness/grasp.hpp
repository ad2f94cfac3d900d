#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gripsim/harness/config.hpp"
#include "gripsim/harness/protocol.hpp"

namespace gripsim::harness {

// Scripted replacement of one finger's command (master-slave operation).
struct FingerOverride {
  enum class Kind {
    Velocity,  // fixed world-frame velocity
    Retract,   // outward along the finger's approach axis at `speed`
    Scale,     // controller command multiplied by `scale`
  };
  int finger = 0;
  double start = 0.0;  // s after activation
  double duration = 0.0;
  Kind kind = Kind::Velocity;
  Vec2 velocity;
  double speed = 0.0;
  double scale = 1.0;

  bool active(double t) const { return t >= start - 1e-9 && t < start + duration - 1e-9; }
};

struct FingerTick {
  Vec2 position;
  double normal_force = 0.0;
  double tangential_force = 0.0;
  physics::ContactMode mode = physics::ContactMode::Free;
  double utilization = 0.0;
  ContactClass truth = ContactClass::NoContact;
  double p_dc = 0.0;  // grounded
  control::TickOutput control;
  Vec2 command;       // what the finger actually received
  bool overridden = false;
};

struct TickRecord {
  std::int64_t tick = 0;
  double time = 0.0;  // s after activation
  physics::Pose pose;
  physics::Twist twist;
  physics::Wrench applied;
  std::vector<FingerTick> fingers;
};

nlohmann::ordered_json to_json(const TickRecord& r);

// One grasp: object on a support, fingers placed in opposition, approach,
// activation with support removal, then independent per-finger control.
class GraspEngine {
 public:
  GraspEngine(const SimConfig& config, physics::ObjectSpec object, int n_fingers,
              std::shared_ptr<const slip::Classifier> classifier, std::uint64_t seed);

  // Baseline capture and approach. Returns false when the fingers never all
  // reached contact; the engine then stays inactive.
  bool establish();
  bool active() const { return active_; }

  // One 10 ms control tick; requires an established grasp.
  TickRecord step();

  // Finger update order within a tick (a permutation of 0..n-1).
  void set_update_order(std::vector<int> order);
  void add_override(const FingerOverride& o);
  // Live override until cleared.
  void set_manual_velocity(int finger, std::optional<Vec2> velocity);
  // Wrench on the object starting `start` s after activation.
  void schedule_wrench(const physics::Wrench& w, double start, double duration);

  const physics::WorldState& world() const { return world_; }
  const SimConfig& config() const { return config_; }
  int finger_count() const { return static_cast<int>(world_.fingers.size()); }
  double elapsed() const { return elapsed_; }
  std::int64_t tick_index() const { return tick_; }
  double initial_height() const { return initial_height_; }
  const physics::Pose& activation_pose() const { return activation_pose_; }
  std::vector<physics::ScheduledWrench> schedule() const;  // activation-relative
  std::string failure() const { return failure_; }

 private:
  sensor::SensorFrame sense(int k);

  SimConfig config_;
  std::shared_ptr<const slip::Classifier> classifier_;
  physics::WorldState world_;
  std::vector<sensor::SensorModel> sensors_;
  std::vector<sensor::Baseline> baselines_;
  std::vector<control::FingerController> controllers_;
  std::vector<Vec2> axes_;
  std::vector<int> order_;
  std::vector<FingerOverride> overrides_;
  std::vector<std::optional<Vec2>> manual_;
  physics::WrenchSchedule schedule_;
  std::int64_t tick_ = 0;
  std::int64_t active_ticks_ = 0;
  double activation_time_ = 0.0;
  double elapsed_ = 0.0;
  double initial_height_ = 0.0;
  physics::Pose activation_pose_;
  bool active_ = false;
  std::string failure_;
};

struct FingerSummary {
  double steady_normal_force = 0.0;  // mean over the steady window
  std::optional<double> y_min;
  double final_y = 0.0;
};

struct TrialResult {
  int trial_id = 0;
  std::string kind = "grasp";
  std::string object_name;
  double object_mass = 0.0;
  double object_friction = 0.0;
  int n_fingers = 0;
  std::uint64_t seed = 0;
  bool valid = true;
  std::string invalid_reason;
  bool stable = false;
  std::optional<double> drop_time;
  double duration = 0.0;
  double steady_normal_force = 0.0;  // mean over fingers
  double max_displacement = 0.0;     // COM, from the activation pose
  std::vector<FingerSummary> fingers;
  std::vector<physics::ScheduledWrench> schedule;
  std::vector<FingerOverride> overrides;
  std::vector<TickRecord> ticks;
};

struct TrialOptions {
  double duration = 10.0;
  std::vector<physics::ScheduledWrench> schedule;  // activation-relative
  std::vector<FingerOverride> overrides;
  std::vector<int> update_order;
  bool keep_ticks = true;
  bool stop_on_drop = true;
};

TrialResult run_trial(const SimConfig& config, const physics::ObjectSpec& object, int n_fingers,
                      std::shared_ptr<const slip::Classifier> classifier, std::uint64_t seed,
                      const TrialOptions& options);

TrialResult run_grasp_trial(const SimConfig& config, const physics::ObjectSpec& object, int n_fingers,
                            std::shared_ptr<const slip::Classifier> classifier, std::uint64_t seed,
                            double duration = 10.0);

// Irregular pulse train: uniform directions, random magnitudes, durations and
// gaps; the repeated indices get one identical downward pulse.
std::vector<physics::ScheduledWrench> irregular_schedule(const PerturbationConfig& config, std::uint64_t seed);

TrialResult run_perturbation_trial(const SimConfig& config, const physics::ObjectSpec& object, int n_fingers,
                                   std::shared_ptr<const slip::Classifier> classifier, std::uint64_t seed,
                                   const std::vector<physics::ScheduledWrench>& schedule, double total = 30.0);

// Default script: the upper finger on the crowded side retracts fully.
std::vector<FingerOverride> retraction_script(int n_fingers, double start = 3.0, double speed = 0.05,
                                              double distance = 0.02, double total = 10.0);

TrialResult run_master_slave(const SimConfig& config, const physics::ObjectSpec& object, int n_fingers,
                             std::shared_ptr<const slip::Classifier> classifier, std::uint64_t seed,
                             const std::vector<FingerOverride>& script, double total = 10.0);

// Per-pulse analysis of a perturbation trial.
struct PulseResponse {
  double start = 0.0;
  bool integrator_rise = false;            // some finger predicted slip within the window
  std::vector<double> settled_forces;      // per-finger mean F_N before the next pulse
};
std::vector<PulseResponse> analyze_pulses(const TrialResult& result, double response_window,
                                          double settle_window = 0.5);

// 12 parametric objects spanning 10-400 g, mu in {0.3, 0.5, 0.8}, widths 10-100 mm.
std::vector<physics::ObjectSpec> generate_test_objects(std::uint64_t seed, int count = 12);

// Two-finger pinch test object: 0.2 kg disk, mu 0.5.
physics::ObjectSpec pinch_disk();

// Upright 0.4 kg box, mu 0.8: the perturbation and master-slave test object.
physics::ObjectSpec heavy_box();

}  // namespace gripsim::harness
