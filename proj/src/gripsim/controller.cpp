#include "gripsim/controller.hpp"

#include <algorithm>
#include <cmath>

namespace gripsim::control {

void ControllerConfig::validate() const {
  require(leakage > 0.0 && leakage < 1.0, ErrorCode::InvalidArgument, "leakage alpha must lie in (0, 1)");
  require(max_speed > 0.0, ErrorCode::InvalidArgument, "v_max must be > 0");
  require(initial_fraction > 0.0 && initial_fraction <= 1.0, ErrorCode::InvalidArgument,
          "initial fraction beta must lie in (0, 1]");
  require(floor >= 0.0 && floor < 1.0, ErrorCode::InvalidArgument, "y_floor must lie in [0, 1)");
  require(stable_period >= 1, ErrorCode::InvalidArgument, "stable period must be >= 1 tick");
}

ControllerState init_controller(const ControllerConfig& config) {
  config.validate();
  ControllerState s;
  s.y = config.initial_fraction;
  return s;
}

double integrator_input(ContactClass predicted) { return predicted == ContactClass::Slip ? 1.0 : 0.0; }

double update_integrator(double y_prev, double input, double leakage) {
  return leakage * y_prev + (1.0 - leakage) * input;
}

ControllerState update_y_min(ControllerState state, std::optional<ContactClass> previous_prediction,
                             ContactClass prediction, double y) {
  if (!state.y_min && state.seen_stable_period && previous_prediction == ContactClass::Contact &&
      prediction == ContactClass::Slip) {
    state.y_min = std::clamp(y, 0.0, 1.0);
  }
  return state;
}

Vec2 command_velocity(double y, double y_effective, std::optional<Vec2> contact_normal, double max_speed) {
  if (!contact_normal) return {};
  if (std::abs(contact_normal->norm() - 1.0) > 1e-6) {
    fail(ErrorCode::InvalidArgument, "contact normal must be a unit vector");
  }
  return *contact_normal * (-max_speed * std::max(y, y_effective));
}

std::pair<TickOutput, ControllerState> controller_tick(const ControllerState& state,
                                                       const sensor::SensorFrame* previous,
                                                       const sensor::SensorFrame& current,
                                                       const slip::Classifier& classifier,
                                                       std::optional<Vec2> contact_normal,
                                                       const ControllerConfig& config) {
  TickOutput out;
  if (previous == nullptr || current.tick != previous->tick + 1) {
    out.command = state.last_command;
    out.prediction = state.previous_prediction.value_or(ContactClass::NoContact);
    out.y = state.y;
    out.y_min = state.y_min;
    out.sensor_gap = true;
    return {out, state};
  }

  const ContactClass pred = classifier.predict(slip::extract_features(*previous, current));
  const double input = integrator_input(pred);
  const double y = update_integrator(state.y, input, config.leakage);

  ControllerState next = update_y_min(state, state.previous_prediction, pred, y);
  next.y = y;
  next.previous_prediction = pred;
  next.contact_streak = pred == ContactClass::Contact ? state.contact_streak + 1 : 0;
  next.seen_stable_period = state.seen_stable_period || next.contact_streak >= config.stable_period;
  const double y_effective = next.y_min.value_or(config.floor);
  next.last_command = command_velocity(y, y_effective, contact_normal, config.max_speed);

  out.command = next.last_command;
  out.prediction = pred;
  out.input = input;
  out.y = y;
  out.y_min = next.y_min;
  return {out, next};
}

FingerController::FingerController(ControllerConfig config, std::shared_ptr<const slip::Classifier> classifier)
    : config_(config), classifier_(std::move(classifier)), state_(init_controller(config_)) {
  require(classifier_ != nullptr, ErrorCode::InvalidArgument, "finger controller needs a classifier");
}

TickOutput FingerController::tick(const sensor::SensorFrame& grounded, std::optional<Vec2> contact_normal) {
  const sensor::SensorFrame* prev = last_frame_ ? &*last_frame_ : nullptr;
  auto [out, next] = controller_tick(state_, prev, grounded, *classifier_, contact_normal, config_);
  state_ = next;
  last_frame_ = grounded;
  return out;
}

void FingerController::reset() {
  state_ = init_controller(config_);
  last_frame_.reset();
}

}  // namespace gripsim::control
