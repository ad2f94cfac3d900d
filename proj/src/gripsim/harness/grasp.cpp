#include "gripsim/harness/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace gripsim::harness {

using nlohmann::ordered_json;

namespace {

ordered_json vec(Vec2 v) { return ordered_json::array({v.x, v.y}); }

}  // namespace

ordered_json to_json(const TickRecord& r) {
  ordered_json j;
  j["tick"] = r.tick;
  j["time"] = r.time;
  j["pose"] = {r.pose.x, r.pose.y, r.pose.theta};
  j["twist"] = {r.twist.vx, r.twist.vy, r.twist.omega};
  j["applied_wrench"] = {r.applied.fx, r.applied.fy, r.applied.torque};
  ordered_json fingers = ordered_json::array();
  for (std::size_t i = 0; i < r.fingers.size(); ++i) {
    const auto& f = r.fingers[i];
    ordered_json fj;
    fj["id"] = i;
    fj["pos"] = vec(f.position);
    fj["F_N"] = f.normal_force;
    fj["F_t"] = f.tangential_force;
    fj["mode"] = std::string(physics::to_string(f.mode));
    fj["utilization"] = f.utilization;
    fj["p_dc"] = f.p_dc;
    fj["c_pred"] = std::string(to_string(f.control.prediction));
    fj["L"] = f.control.input;
    fj["y"] = f.control.y;
    fj["y_min"] = f.control.y_min ? ordered_json(*f.control.y_min) : ordered_json(nullptr);
    fj["command"] = vec(f.command);
    fj["overridden"] = f.overridden;
    fj["sensor_gap"] = f.control.sensor_gap;
    fingers.push_back(std::move(fj));
  }
  j["fingers"] = std::move(fingers);
  return j;
}

GraspEngine::GraspEngine(const SimConfig& config, physics::ObjectSpec object, int n_fingers,
                         std::shared_ptr<const slip::Classifier> classifier, std::uint64_t seed)
    : config_(config), classifier_(std::move(classifier)) {
  config_.validate();
  require(n_fingers >= 1, ErrorCode::InvalidArgument, "grasp needs at least one finger");
  require(classifier_ != nullptr, ErrorCode::InvalidArgument, "grasp needs a trained classifier");
  const auto angles = grasp_angles(n_fingers, config_.grasp.side_spread);
  auto tips = place_fingers(object, object.initial_pose, angles, config_.grasp.finger_radius,
                            config_.grasp.standoff);
  world_ = physics::make_world(std::move(object), std::move(tips), config_.physics);
  world_.object_fixed = true;
  for (int k = 0; k < n_fingers; ++k) {
    sensors_.emplace_back(config_.sensor, derive_seed(seed, 11, k), derive_seed(seed, 12, k));
    controllers_.emplace_back(config_.controller, classifier_);
    axes_.push_back(-world_.contacts[k].normal);
  }
  baselines_.resize(n_fingers);
  manual_.resize(n_fingers);
  order_.resize(n_fingers);
  std::iota(order_.begin(), order_.end(), 0);
}

sensor::SensorFrame GraspEngine::sense(int k) {
  const auto& c = world_.contacts[k];
  return sensors_[k].sample(c, sensor::contact_point_angle(axes_[k], c.normal), tick_);
}

bool GraspEngine::establish() {
  require(!active_ && tick_ == 0, ErrorCode::PreconditionFailed, "grasp already established");
  const int n = finger_count();
  const double dt = config_.tick_seconds();
  const auto step_world = [&] {
    for (int s = 0; s < config_.physics_steps_per_tick; ++s) physics::step_physics_in_place(world_, config_.physics);
  };

  std::vector<std::vector<sensor::SensorFrame>> raw(n);
  std::vector<std::vector<double>> forces(n);
  for (int t = 0; t < config_.grasp.baseline_ticks; ++t, ++tick_) {
    for (int k = 0; k < n; ++k) {
      raw[k].push_back(sense(k));
      forces[k].push_back(world_.contacts[k].normal_force);
    }
    step_world();
  }
  for (int k = 0; k < n; ++k) baselines_[k] = sensor::capture_baseline(raw[k], forces[k]);

  const double speed = config_.controller.initial_fraction * config_.controller.max_speed;
  std::vector<double> loaded(n, 0.0);
  std::vector<sensor::SensorFrame> last(n);
  for (double t = 0.0;; t += dt, ++tick_) {
    bool all = true;
    for (int k = 0; k < n; ++k) {
      last[k] = sensor::ground_frame(sense(k), baselines_[k]);
      loaded[k] = last[k].p_dc() > config_.labels.contact ? loaded[k] + dt : 0.0;
      if (loaded[k] < config_.grasp.settle_time - 1e-9) all = false;
      world_.fingers[k].commanded_velocity = -world_.contacts[k].normal * speed;
    }
    if (all) break;
    if (t > config_.grasp.approach_timeout) {
      failure_ = "fingers did not all reach contact within the approach timeout";
      return false;
    }
    step_world();
  }
  // The approach frame is the controllers' first history entry.
  for (int k = 0; k < n; ++k) controllers_[k].prime(last[k]);
  step_world();
  ++tick_;
  world_.object_fixed = false;
  activation_time_ = world_.time;
  activation_pose_ = world_.pose;
  initial_height_ = world_.pose.y;
  active_ = true;
  return true;
}

TickRecord GraspEngine::step() {
  require(active_, ErrorCode::PreconditionFailed, "grasp not established");
  TickRecord rec;
  rec.tick = tick_;
  rec.time = elapsed_;
  rec.pose = world_.pose;
  rec.twist = world_.twist;
  rec.applied = schedule_.at(world_.time);
  rec.fingers.resize(world_.fingers.size());

  for (int k : order_) {
    const auto& contact = world_.contacts[k];
    const auto grounded = sensor::ground_frame(sense(k), baselines_[k]);
    const std::optional<Vec2> normal = contact.in_contact ? std::optional<Vec2>(contact.normal) : std::nullopt;
    auto& ft = rec.fingers[k];
    ft.control = controllers_[k].tick(grounded, normal);
    Vec2 cmd = ft.control.command;
    for (const auto& o : overrides_) {
      if (o.finger != k || !o.active(elapsed_)) continue;
      ft.overridden = true;
      switch (o.kind) {
        case FingerOverride::Kind::Velocity: cmd = o.velocity; break;
        case FingerOverride::Kind::Retract: cmd = -axes_[k] * o.speed; break;
        case FingerOverride::Kind::Scale: cmd = cmd * o.scale; break;
      }
    }
    if (manual_[k]) {
      ft.overridden = true;
      cmd = *manual_[k];
    }
    world_.fingers[k].commanded_velocity = cmd;
    ft.command = cmd;
    ft.position = world_.fingers[k].position;
    ft.normal_force = contact.normal_force;
    ft.tangential_force = contact.tangential_force;
    ft.mode = contact.mode;
    ft.utilization = contact.utilization;
    ft.truth = physics::ground_truth_contact_class(contact, config_.physics);
    ft.p_dc = grounded.p_dc();
  }

  for (int s = 0; s < config_.physics_steps_per_tick; ++s) {
    world_.external_wrench = schedule_.at(world_.time);
    physics::step_physics_in_place(world_, config_.physics);
  }
  world_.external_wrench = {};
  ++tick_;
  ++active_ticks_;
  elapsed_ = static_cast<double>(active_ticks_) * config_.tick_seconds();
  return rec;
}

void GraspEngine::set_update_order(std::vector<int> order) {
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expected(finger_count());
  std::iota(expected.begin(), expected.end(), 0);
  require(sorted == expected, ErrorCode::InvalidArgument, "update order must be a permutation of the fingers");
  order_ = std::move(order);
}

void GraspEngine::add_override(const FingerOverride& o) {
  require(o.finger >= 0 && o.finger < finger_count(), ErrorCode::InvalidArgument, "override finger out of range");
  require(o.duration > 0.0, ErrorCode::InvalidArgument, "override duration must be > 0");
  overrides_.push_back(o);
}

void GraspEngine::set_manual_velocity(int finger, std::optional<Vec2> velocity) {
  require(finger >= 0 && finger < finger_count(), ErrorCode::InvalidArgument, "finger id out of range");
  require(!velocity || is_finite(*velocity), ErrorCode::InvalidArgument, "override velocity must be finite");
  manual_[finger] = velocity;
}

void GraspEngine::schedule_wrench(const physics::Wrench& w, double start, double duration) {
  require(active_, ErrorCode::PreconditionFailed, "wrenches are scheduled after activation");
  schedule_.add(w, activation_time_ + start, duration);
}

std::vector<physics::ScheduledWrench> GraspEngine::schedule() const {
  std::vector<physics::ScheduledWrench> out;
  for (auto e : schedule_.entries()) {
    e.start -= activation_time_;
    out.push_back(e);
  }
  return out;
}

TrialResult run_trial(const SimConfig& config, const physics::ObjectSpec& object, int n_fingers,
                      std::shared_ptr<const slip::Classifier> classifier, std::uint64_t seed,
                      const TrialOptions& options) {
  TrialResult result;
  result.object_name = object.name;
  result.object_mass = object.mass;
  result.object_friction = object.friction;
  result.n_fingers = n_fingers;
  result.seed = seed;
  result.schedule = options.schedule;
  result.overrides = options.overrides;

  GraspEngine engine(config, object, n_fingers, std::move(classifier), seed);
  if (!options.update_order.empty()) engine.set_update_order(options.update_order);
  try {
    if (!engine.establish()) {
      result.valid = false;
      result.invalid_reason = engine.failure();
      return result;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SimulationDiverged) throw;
    result.valid = false;
    result.invalid_reason = e.what();
    return result;
  }
  for (const auto& s : options.schedule) engine.schedule_wrench(s.wrench, s.start, s.duration);
  for (const auto& o : options.overrides) engine.add_override(o);

  const double dt = config.tick_seconds();
  const auto ticks = static_cast<std::int64_t>(std::llround(options.duration / dt));
  const auto& drop = config.grasp.drop;
  const physics::Pose start = engine.activation_pose();
  std::vector<physics::DropSample> samples;
  std::vector<TickRecord> records;
  std::optional<double> loss_start;
  try {
    for (std::int64_t i = 0; i < ticks; ++i) {
      TickRecord rec = engine.step();
      bool any = false;
      for (const auto& f : rec.fingers) any = any || f.normal_force > 0.0;
      samples.push_back({rec.time, rec.pose.y, any});
      result.max_displacement =
          std::max(result.max_displacement, std::hypot(rec.pose.x - start.x, rec.pose.y - start.y));
      records.push_back(std::move(rec));
      if (options.stop_on_drop && physics::find_drop(std::span(samples).last(1), engine.initial_height(), drop)) break;
      if (any) {
        loss_start.reset();
      } else {
        if (!loss_start) loss_start = samples.back().time;
        if (options.stop_on_drop && samples.back().time - *loss_start > drop.max_contact_loss) break;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SimulationDiverged) throw;
    result.valid = false;
    result.invalid_reason = e.what();
  }
  result.duration = records.empty() ? 0.0 : records.back().time + dt;
  if (!samples.empty()) {
    result.drop_time = physics::find_drop(samples, engine.initial_height(), drop);
    result.stable = result.valid && !physics::detect_drop(samples, engine.initial_height(), drop);
  }

  result.fingers.resize(n_fingers);
  const double window_start = options.duration - config.grasp.steady_window - 1e-9;
  int counted = 0;
  for (const auto& r : records) {
    if (r.time < window_start) continue;
    ++counted;
    for (int k = 0; k < n_fingers; ++k) result.fingers[k].steady_normal_force += r.fingers[k].normal_force;
  }
  double total = 0.0;
  for (int k = 0; k < n_fingers; ++k) {
    auto& f = result.fingers[k];
    if (counted > 0) f.steady_normal_force /= counted;
    total += f.steady_normal_force;
    if (!records.empty()) {
      f.y_min = records.back().fingers[k].control.y_min;
      f.final_y = records.back().fingers[k].control.y;
    }
  }
  result.steady_normal_force = total / n_fingers;
  if (options.keep_ticks) result.ticks = std::move(records);
  return result;
}

TrialResult run_grasp_trial(const SimConfig& config, const physics::ObjectSpec& object, int n_fingers,
                            std::shared_ptr<const slip::Classifier> classifier, std::uint64_t seed, double duration) {
  TrialOptions options;
  options.duration = duration;
  return run_trial(config, object, n_fingers, std::move(classifier), seed, options);
}

std::vector<physics::ScheduledWrench> irregular_schedule(const PerturbationConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  std::vector<physics::ScheduledWrench> pulses(config.pulses);
  std::vector<double> gaps(config.pulses > 0 ? config.pulses - 1 : 0);
  for (int i = 0; i < config.pulses; ++i) {
    const double angle = between(0.0, 2.0 * std::numbers::pi);
    const double magnitude = between(config.magnitude_min, config.magnitude_max);
    pulses[i].wrench = {magnitude * std::cos(angle), magnitude * std::sin(angle), 0.0};
    pulses[i].duration = between(config.duration_min, config.duration_max);
    if (i + 1 < config.pulses) gaps[i] = between(config.gap_min, config.gap_max);
  }
  for (int r : config.repeated) {
    pulses[r].wrench = {0.0, -config.repeated_magnitude, 0.0};
    pulses[r].duration = config.repeated_duration;
  }

  // Leave a settling tail after the last pulse; squeeze the gaps if needed.
  const double tail = std::min(2.0, 0.1 * config.total);
  double busy = 0.0;
  for (const auto& p : pulses) busy += p.duration;
  const double gap_sum = std::accumulate(gaps.begin(), gaps.end(), 0.0);
  const double room = config.total - tail - config.first_start - busy;
  require(room >= 0.0, ErrorCode::InvalidArgument, "perturbation pulses do not fit into the trial");
  if (gap_sum > room) {
    for (double& g : gaps) g *= room / gap_sum;
  }
  double t = config.first_start;
  for (int i = 0; i < config.pulses; ++i) {
    pulses[i].start = t;
    t += pulses[i].duration + (i < static_cast<int>(gaps.size()) ? gaps[i] : 0.0);
  }
  return pulses;
}

TrialResult run_perturbation_trial(const SimConfig& config, const physics::ObjectSpec& object, int n_fingers,
                                   std::shared_ptr<const slip::Classifier> classifier, std::uint64_t seed,
                                   const std::vector<physics::ScheduledWrench>& schedule, double total) {
  TrialOptions options;
  options.duration = total;
  options.schedule = schedule;
  auto r = run_trial(config, object, n_fingers, std::move(classifier), seed, options);
  r.kind = "perturbation";
  return r;
}

std::vector<FingerOverride> retraction_script(int n_fingers, double start, double speed, double distance,
                                              double total) {
  require(n_fingers >= 2, ErrorCode::InvalidArgument, "retraction needs at least two fingers");
  require(speed > 0.0 && distance > 0.0, ErrorCode::InvalidArgument, "retraction speed and distance must be > 0");
  const int right = n_fingers / 2;
  // First finger on the left side sits above the horizontal for odd counts.
  const int finger = n_fingers == 2 ? 1 : right;
  const double move = distance / speed;
  FingerOverride retract;
  retract.finger = finger;
  retract.start = start;
  retract.duration = move;
  retract.kind = FingerOverride::Kind::Retract;
  retract.speed = speed;
  FingerOverride park;
  park.finger = finger;
  park.start = start + move;
  park.duration = std::max(total - start - move, 1e-3) + 1.0;
  park.kind = FingerOverride::Kind::Velocity;
  return {retract, park};
}

TrialResult run_master_slave(const SimConfig& config, const physics::ObjectSpec& object, int n_fingers,
                             std::shared_ptr<const slip::Classifier> classifier, std::uint64_t seed,
                             const std::vector<FingerOverride>& script, double total) {
  TrialOptions options;
  options.duration = total;
  options.overrides = script;
  auto r = run_trial(config, object, n_fingers, std::move(classifier), seed, options);
  r.kind = "master-slave";
  return r;
}

std::vector<PulseResponse> analyze_pulses(const TrialResult& result, double response_window,
                                          double settle_window) {
  auto pulses = result.schedule;
  std::sort(pulses.begin(), pulses.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  std::vector<PulseResponse> out;
  const int n = result.n_fingers;
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    PulseResponse pr;
    pr.start = pulses[i].start;
    const double next = i + 1 < pulses.size() ? pulses[i + 1].start : result.duration;
    pr.settled_forces.assign(n, 0.0);
    int counted = 0;
    for (std::size_t t = 1; t < result.ticks.size(); ++t) {
      const auto& r = result.ticks[t];
      if (r.time >= pr.start - 1e-9 && r.time <= pr.start + response_window + 1e-9) {
        for (int k = 0; k < n; ++k) {
          if (r.fingers[k].control.y > result.ticks[t - 1].fingers[k].control.y) pr.integrator_rise = true;
        }
      }
      if (r.time >= next - settle_window - 1e-9 && r.time < next - 1e-9) {
        ++counted;
        for (int k = 0; k < n; ++k) pr.settled_forces[k] += r.fingers[k].normal_force;
      }
    }
    if (counted > 0) {
      for (double& f : pr.settled_forces) f /= counted;
    }
    out.push_back(std::move(pr));
  }
  return out;
}

std::vector<physics::ObjectSpec> generate_test_objects(std::uint64_t seed, int count) {
  require(count >= 1, ErrorCode::InvalidArgument, "object count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double frictions[] = {0.3, 0.5, 0.8};
  std::vector<physics::ObjectSpec> objects;
  for (int i = 0; i < count; ++i) {
    const double s = count > 1 ? static_cast<double>(i) / (count - 1) : 0.0;
    physics::ObjectSpec o;
    o.mass = 0.01 * std::pow(40.0, s);
    o.friction = frictions[i % 3];
    // Widths cycle through the range independently of the mass ordering.
    const double width = 0.01 + 0.09 * std::fmod(0.37 * i + 0.5 * unit(rng), 1.0);
    switch (i % 3) {
      case 0:
        o.shape = physics::Disk{width / 2.0};
        o.name = "disk-" + std::to_string(i);
        break;
      case 1:
        o.shape = physics::Box{width, width * (0.8 + 0.7 * unit(rng))};
        o.name = "box-" + std::to_string(i);
        break;
      default:
        o.shape = physics::RegularPolygon{6, width / 2.0};
        // Flat faces towards the fingers.
        o.initial_pose.theta = std::numbers::pi / 6.0;
        o.name = "hexagon-" + std::to_string(i);
        break;
    }
    o.validate();
    objects.push_back(std::move(o));
  }
  return objects;
}

physics::ObjectSpec pinch_disk() {
  physics::ObjectSpec o;
  o.name = "pinch disk";
  o.shape = physics::Disk{0.04};
  o.mass = 0.2;
  o.friction = 0.5;
  return o;
}

physics::ObjectSpec heavy_box() {
  physics::ObjectSpec o;
  o.name = "heavy box";
  o.shape = physics::Box{0.06, 0.12};
  o.mass = 0.4;
  o.friction = 0.8;
  return o;
}

}  // namespace gripsim::harness
