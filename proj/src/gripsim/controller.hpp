#pragma once

#include <memory>
#include <optional>

#include "gripsim/sensor.hpp"
#include "gripsim/slip.hpp"
#include "gripsim/types.hpp"

namespace gripsim::control {

struct ControllerConfig {
  double leakage = 0.95;        // alpha, per 10 ms tick
  double max_speed = 0.02;      // v_max, m/s at y = 1
  double initial_fraction = 0.5;  // beta
  double floor = 0.05;          // y_floor until y_min is learned
  int stable_period = 20;       // consecutive contact predictions before y_min may be learned

  void validate() const;
};

struct ControllerState {
  double y = 0.0;
  std::optional<double> y_min;
  std::optional<ContactClass> previous_prediction;
  int contact_streak = 0;
  bool seen_stable_period = false;
  Vec2 last_command;
};

ControllerState init_controller(const ControllerConfig& config);

// L: 1 for predicted slip, 0 otherwise.
double integrator_input(ContactClass predicted);

// y_t = alpha * y_{t-1} + (1 - alpha) * L
double update_integrator(double y_prev, double input, double leakage);

// Learns y_min at the first contact -> slip transition after a stable period.
ControllerState update_y_min(ControllerState state, std::optional<ContactClass> previous_prediction,
                             ContactClass prediction, double y);

// Press into the surface along -N with speed v_max * max(y, y_effective).
// Zero when there is no contact normal.
Vec2 command_velocity(double y, double y_effective, std::optional<Vec2> contact_normal, double max_speed);

struct TickOutput {
  Vec2 command;
  ContactClass prediction = ContactClass::NoContact;
  double input = 0.0;
  double y = 0.0;
  std::optional<double> y_min;
  bool sensor_gap = false;
};

// One 10 ms control step from the finger's own frames and contact normal.
// On a missing or non-consecutive previous frame the previous command is held
// and the output is flagged.
std::pair<TickOutput, ControllerState> controller_tick(const ControllerState& state,
                                                       const sensor::SensorFrame* previous,
                                                       const sensor::SensorFrame& current,
                                                       const slip::Classifier& classifier,
                                                       std::optional<Vec2> contact_normal,
                                                       const ControllerConfig& config);

class FingerController {
 public:
  FingerController(ControllerConfig config, std::shared_ptr<const slip::Classifier> classifier);

  TickOutput tick(const sensor::SensorFrame& grounded, std::optional<Vec2> contact_normal);
  // Seeds the history with a frame so the next tick has a predecessor.
  void prime(const sensor::SensorFrame& grounded) { last_frame_ = grounded; }
  void reset();

  const ControllerState& state() const { return state_; }
  const ControllerConfig& config() const { return config_; }

 private:
  ControllerConfig config_;
  std::shared_ptr<const slip::Classifier> classifier_;
  ControllerState state_;
  std::optional<sensor::SensorFrame> last_frame_;
};

}  // namespace gripsim::control
