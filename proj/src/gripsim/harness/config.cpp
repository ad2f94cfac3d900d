#include "gripsim/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace gripsim::harness {

using nlohmann::json;
using nlohmann::ordered_json;

void PidGains::validate() const {
  require(kp >= 0.0 && ki >= 0.0 && kd >= 0.0, ErrorCode::InvalidArgument, "PID gains must be >= 0");
  require(clamp > 0.0, ErrorCode::InvalidArgument, "PID output clamp must be > 0");
  require(settle_band > 0.0 && settle_time >= 0.0, ErrorCode::InvalidArgument, "invalid PID settle criterion");
}

std::vector<physics::ObjectSpec> CollectionProtocol::default_training_objects() {
  using namespace physics;
  return {
      ObjectSpec{"ball", Disk{0.035}, 0.06, std::nullopt, 0.6, {}},
      ObjectSpec{"tea box", Box{0.08, 0.12}, 0.1, std::nullopt, 0.5, {}},
      ObjectSpec{"tuna can", Disk{0.042}, 0.17, std::nullopt, 0.4, {}},
      ObjectSpec{"cup proxy", Box{0.07, 0.1}, 0.02, std::nullopt, 0.7, {}},
  };
}

void CollectionProtocol::validate() const {
  require(!target_pressures.empty(), ErrorCode::InvalidArgument, "protocol needs target pressures");
  for (std::size_t i = 0; i < target_pressures.size(); ++i) {
    require(target_pressures[i] > 0.0, ErrorCode::InvalidArgument, "target pressures must be positive");
    if (i > 0) {
      require(target_pressures[i] > target_pressures[i - 1], ErrorCode::InvalidArgument,
              "target pressures must be ascending");
    }
  }
  require(trials_per_pressure >= 1, ErrorCode::InvalidArgument, "trials per pressure must be >= 1");
  require(!objects.empty(), ErrorCode::InvalidArgument, "protocol needs at least one object");
  for (const auto& o : objects) o.validate();
  require(fingers >= 1, ErrorCode::InvalidArgument, "protocol needs at least one finger");
  require(survey_speed_min >= 0.0 && survey_speed_max >= survey_speed_min, ErrorCode::InvalidArgument,
          "invalid survey speed range");
  require(survey_accel_min > 0.0 && survey_accel_max >= survey_accel_min, ErrorCode::InvalidArgument,
          "invalid survey acceleration range");
  require(baseline_ticks >= static_cast<int>(sensor::kMinBaselineFrames), ErrorCode::InvalidArgument,
          "baseline window must be at least 10 ticks");
  require(approach_speed > 0.0 && approach_timeout > 0.0 && settle_timeout > 0.0, ErrorCode::InvalidArgument,
          "invalid approach parameters");
  require(hold >= 0.0 && hold_dip >= 0.0 && hold_dip < 1.0, ErrorCode::InvalidArgument, "invalid hold parameters");
  require(unload_tau > 0.0 && retract_ramp > 0.0 && retract_speed >= 0.0, ErrorCode::InvalidArgument,
          "invalid retract parameters");
  require(axis_tilt >= 0.0 && axis_tilt < 1.5, ErrorCode::InvalidArgument, "axis tilt must lie in [0, 1.5) rad");
}

void GraspConfig::validate() const {
  require(duration > 0.0, ErrorCode::InvalidArgument, "trial duration must be > 0");
  require(finger_radius > 0.0, ErrorCode::InvalidArgument, "finger radius must be > 0");
  require(baseline_ticks >= static_cast<int>(sensor::kMinBaselineFrames), ErrorCode::InvalidArgument,
          "baseline window must be at least 10 ticks");
  require(approach_timeout > 0.0 && settle_time >= 0.0, ErrorCode::InvalidArgument, "invalid approach parameters");
  require(steady_window > 0.0, ErrorCode::InvalidArgument, "steady window must be > 0");
}

void PerturbationConfig::validate() const {
  require(pulses >= 0, ErrorCode::InvalidArgument, "pulse count must be >= 0");
  require(magnitude_min >= 0.0 && magnitude_max >= magnitude_min, ErrorCode::InvalidArgument,
          "invalid pulse magnitude range");
  require(duration_min > 0.0 && duration_max >= duration_min, ErrorCode::InvalidArgument,
          "invalid pulse duration range");
  require(gap_min >= 0.0 && gap_max >= gap_min, ErrorCode::InvalidArgument, "invalid pulse gap range");
  require(total > first_start, ErrorCode::InvalidArgument, "perturbation trial too short");
  for (int r : repeated) {
    require(r >= 0 && r < pulses, ErrorCode::InvalidArgument, "repeated pulse index out of range");
  }
}

void SimConfig::validate() const {
  physics.validate();
  sensor.validate();
  controller.validate();
  protocol.validate();
  pid.validate();
  grasp.validate();
  perturbation.validate();
  require(holdout >= 0.0 && holdout < 1.0, ErrorCode::InvalidArgument, "holdout fraction must lie in [0, 1)");
  require(horizon >= 1, ErrorCode::InvalidArgument, "prediction horizon must be >= 1");
  require(physics_steps_per_tick >= 1, ErrorCode::InvalidArgument, "physics steps per tick must be >= 1");
  require(labels.contact >= 0.0 && labels.movement >= 0.0, ErrorCode::InvalidArgument,
          "label thresholds must be >= 0");
}

namespace {

// Reads known keys from a section and rejects anything else.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) fail(ErrorCode::Parse, "config section '" + name_ + "' must be an object");
  }

  template <class T>
  Section& field(const char* key, T& out) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) {
      try {
        out = it->template get<T>();
      } catch (const json::exception& e) {
        fail(ErrorCode::Parse, "config key '" + name_ + "." + key + "': " + e.what());
      }
    }
    return *this;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(ErrorCode::Parse, "unknown config key '" + name_ + "." + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

ordered_json to_json(const physics::ObjectSpec& o) {
  ordered_json j;
  j["name"] = o.name;
  if (const auto* d = std::get_if<physics::Disk>(&o.shape)) {
    j["shape"] = {{"type", "disk"}, {"radius", d->radius}};
  } else if (const auto* b = std::get_if<physics::Box>(&o.shape)) {
    j["shape"] = {{"type", "box"}, {"width", b->width}, {"height", b->height}};
  } else {
    const auto& p = std::get<physics::RegularPolygon>(o.shape);
    j["shape"] = {{"type", "polygon"}, {"sides", p.sides}, {"circumradius", p.circumradius}};
  }
  j["mass"] = o.mass;
  if (o.inertia_override) j["inertia"] = *o.inertia_override;
  j["friction"] = o.friction;
  j["pose"] = {o.initial_pose.x, o.initial_pose.y, o.initial_pose.theta};
  return j;
}

physics::ObjectSpec object_from_json(const json& j) {
  physics::ObjectSpec o;
  Section s(j, "object");
  s.field("name", o.name).field("mass", o.mass).field("friction", o.friction);
  double inertia = 0.0;
  if (j.contains("inertia")) {
    s.field("inertia", inertia);
    o.inertia_override = inertia;
  }
  std::vector<double> pose;
  s.field("pose", pose);
  if (!pose.empty()) {
    if (pose.size() != 3) fail(ErrorCode::Parse, "object pose must be [x, y, theta]");
    o.initial_pose = {pose[0], pose[1], pose[2]};
  }
  if (const json* shape = s.child("shape")) {
    Section sh(*shape, "object.shape");
    std::string type;
    sh.field("type", type);
    if (type == "disk") {
      physics::Disk d;
      sh.field("radius", d.radius);
      o.shape = d;
    } else if (type == "box") {
      physics::Box b;
      sh.field("width", b.width).field("height", b.height);
      o.shape = b;
    } else if (type == "polygon") {
      physics::RegularPolygon p;
      sh.field("sides", p.sides).field("circumradius", p.circumradius);
      o.shape = p;
    } else {
      fail(ErrorCode::Parse, "unknown object shape type '" + type + "'");
    }
    sh.finish();
  }
  s.finish();
  o.validate();
  return o;
}

ordered_json to_json(const SimConfig& c) {
  ordered_json j;
  const auto& p = c.physics;
  j["physics"] = {{"dt", p.dt},
                  {"gravity", p.gravity},
                  {"normal_stiffness", p.normal_stiffness},
                  {"normal_damping", p.normal_damping},
                  {"tangential_stiffness", p.tangential_stiffness},
                  {"tangential_damping", p.tangential_damping},
                  {"static_kinetic_ratio", p.static_kinetic_ratio},
                  {"slip_velocity", p.slip_velocity},
                  {"actuator_damping", p.actuator_damping},
                  {"velocity_cap", p.velocity_cap},
                  {"max_substeps", p.max_substeps},
                  {"steps_per_tick", c.physics_steps_per_tick}};
  const auto& s = c.sensor;
  j["sensor"] = {{"pressure_gain", s.pressure_gain},
                 {"noise_pdc", s.noise_pdc},
                 {"noise_pac", s.noise_pac},
                 {"noise_electrode", s.noise_electrode},
                 {"noise_temperature", s.noise_temperature},
                 {"electrode_kappa", s.electrode_kappa},
                 {"vibration_onset", s.vibration_onset},
                 {"vibration_amplitude", s.vibration_amplitude},
                 {"slip_burst_amplitude", s.slip_burst_amplitude},
                 {"baseline_spread", s.baseline_spread}};
  const auto& k = c.controller;
  j["controller"] = {{"leakage", k.leakage},
                     {"max_speed", k.max_speed},
                     {"initial_fraction", k.initial_fraction},
                     {"floor", k.floor},
                     {"stable_period", k.stable_period}};
  j["labeling"] = {{"contact_threshold", c.labels.contact},
                   {"movement_threshold", c.labels.movement},
                   {"horizon", c.horizon}};
  const auto& t = c.training;
  j["training"] = {{"kind", std::string(slip::to_string(t.kind))},
                   {"learning_rate", t.learning_rate},
                   {"epochs", t.epochs},
                   {"batches_per_epoch", t.batches_per_epoch},
                   {"l2", t.l2},
                   {"class_weighting", t.class_weighting},
                   {"seed", t.seed},
                   {"knn_k", t.knn_k},
                   {"knn_max_exemplars", t.knn_max_exemplars},
                   {"holdout", c.holdout},
                   {"split_seed", c.split_seed}};
  const auto& pr = c.protocol;
  ordered_json objects = ordered_json::array();
  for (const auto& o : pr.objects) objects.push_back(to_json(o));
  j["protocol"] = {{"target_pressures", pr.target_pressures},
                   {"trials_per_pressure", pr.trials_per_pressure},
                   {"objects", objects},
                   {"fingers", pr.fingers},
                   {"survey_speed_min", pr.survey_speed_min},
                   {"survey_speed_max", pr.survey_speed_max},
                   {"survey_accel_min", pr.survey_accel_min},
                   {"survey_accel_max", pr.survey_accel_max},
                   {"survey_cruise", pr.survey_cruise},
                   {"approach_speed", pr.approach_speed},
                   {"approach_timeout", pr.approach_timeout},
                   {"settle_timeout", pr.settle_timeout},
                   {"hold", pr.hold},
                   {"hold_dip", pr.hold_dip},
                   {"retract_speed", pr.retract_speed},
                   {"retract_duration", pr.retract_duration},
                   {"unload_tau", pr.unload_tau},
                   {"retract_ramp", pr.retract_ramp},
                   {"axis_tilt", pr.axis_tilt},
                   {"baseline_ticks", pr.baseline_ticks},
                   {"standoff", pr.standoff},
                   {"seed", pr.seed}};
  j["pid"] = {{"kp", c.pid.kp},       {"ki", c.pid.ki},
              {"kd", c.pid.kd},       {"clamp", c.pid.clamp},
              {"settle_band", c.pid.settle_band}, {"settle_time", c.pid.settle_time}};
  const auto& g = c.grasp;
  j["grasp"] = {{"duration", g.duration},
                {"finger_radius", g.finger_radius},
                {"standoff", g.standoff},
                {"baseline_ticks", g.baseline_ticks},
                {"approach_timeout", g.approach_timeout},
                {"settle_time", g.settle_time},
                {"side_spread", g.side_spread},
                {"steady_window", g.steady_window},
                {"drop_fall", g.drop.max_fall},
                {"drop_contact_loss", g.drop.max_contact_loss}};
  const auto& pb = c.perturbation;
  j["perturbation"] = {{"pulses", pb.pulses},
                       {"first_start", pb.first_start},
                       {"total", pb.total},
                       {"magnitude_min", pb.magnitude_min},
                       {"magnitude_max", pb.magnitude_max},
                       {"duration_min", pb.duration_min},
                       {"duration_max", pb.duration_max},
                       {"gap_min", pb.gap_min},
                       {"gap_max", pb.gap_max},
                       {"repeated", pb.repeated},
                       {"repeated_magnitude", pb.repeated_magnitude},
                       {"repeated_duration", pb.repeated_duration},
                       {"response_window", pb.response_window}};
  return j;
}

SimConfig config_from_json(const json& j) {
  SimConfig c;
  Section root(j, "config");
  if (const json* s = root.child("physics")) {
    auto& p = c.physics;
    Section sec(*s, "physics");
    sec.field("dt", p.dt)
        .field("gravity", p.gravity)
        .field("normal_stiffness", p.normal_stiffness)
        .field("normal_damping", p.normal_damping)
        .field("tangential_stiffness", p.tangential_stiffness)
        .field("tangential_damping", p.tangential_damping)
        .field("static_kinetic_ratio", p.static_kinetic_ratio)
        .field("slip_velocity", p.slip_velocity)
        .field("actuator_damping", p.actuator_damping)
        .field("velocity_cap", p.velocity_cap)
        .field("max_substeps", p.max_substeps)
        .field("steps_per_tick", c.physics_steps_per_tick);
    sec.finish();
  }
  if (const json* s = root.child("sensor")) {
    auto& p = c.sensor;
    Section sec(*s, "sensor");
    sec.field("pressure_gain", p.pressure_gain)
        .field("noise_pdc", p.noise_pdc)
        .field("noise_pac", p.noise_pac)
        .field("noise_electrode", p.noise_electrode)
        .field("noise_temperature", p.noise_temperature)
        .field("electrode_kappa", p.electrode_kappa)
        .field("vibration_onset", p.vibration_onset)
        .field("vibration_amplitude", p.vibration_amplitude)
        .field("slip_burst_amplitude", p.slip_burst_amplitude)
        .field("baseline_spread", p.baseline_spread);
    sec.finish();
  }
  if (const json* s = root.child("controller")) {
    auto& p = c.controller;
    Section sec(*s, "controller");
    sec.field("leakage", p.leakage)
        .field("max_speed", p.max_speed)
        .field("initial_fraction", p.initial_fraction)
        .field("floor", p.floor)
        .field("stable_period", p.stable_period);
    sec.finish();
  }
  if (const json* s = root.child("labeling")) {
    Section sec(*s, "labeling");
    sec.field("contact_threshold", c.labels.contact)
        .field("movement_threshold", c.labels.movement)
        .field("horizon", c.horizon);
    sec.finish();
  }
  if (const json* s = root.child("training")) {
    auto& p = c.training;
    Section sec(*s, "training");
    std::string kind(slip::to_string(p.kind));
    sec.field("kind", kind)
        .field("learning_rate", p.learning_rate)
        .field("epochs", p.epochs)
        .field("batches_per_epoch", p.batches_per_epoch)
        .field("l2", p.l2)
        .field("class_weighting", p.class_weighting)
        .field("seed", p.seed)
        .field("knn_k", p.knn_k)
        .field("knn_max_exemplars", p.knn_max_exemplars)
        .field("holdout", c.holdout)
        .field("split_seed", c.split_seed);
    p.kind = slip::parse_model_kind(kind);
    sec.finish();
  }
  if (const json* s = root.child("protocol")) {
    auto& p = c.protocol;
    Section sec(*s, "protocol");
    sec.field("target_pressures", p.target_pressures)
        .field("trials_per_pressure", p.trials_per_pressure)
        .field("fingers", p.fingers)
        .field("survey_speed_min", p.survey_speed_min)
        .field("survey_speed_max", p.survey_speed_max)
        .field("survey_accel_min", p.survey_accel_min)
        .field("survey_accel_max", p.survey_accel_max)
        .field("survey_cruise", p.survey_cruise)
        .field("approach_speed", p.approach_speed)
        .field("approach_timeout", p.approach_timeout)
        .field("settle_timeout", p.settle_timeout)
        .field("hold", p.hold)
        .field("hold_dip", p.hold_dip)
        .field("retract_speed", p.retract_speed)
        .field("retract_duration", p.retract_duration)
        .field("unload_tau", p.unload_tau)
        .field("retract_ramp", p.retract_ramp)
        .field("axis_tilt", p.axis_tilt)
        .field("baseline_ticks", p.baseline_ticks)
        .field("standoff", p.standoff)
        .field("seed", p.seed);
    if (const json* objs = sec.child("objects")) {
      if (!objs->is_array()) fail(ErrorCode::Parse, "protocol.objects must be an array");
      p.objects.clear();
      for (const auto& o : *objs) p.objects.push_back(object_from_json(o));
    }
    sec.finish();
  }
  if (const json* s = root.child("pid")) {
    Section sec(*s, "pid");
    sec.field("kp", c.pid.kp)
        .field("ki", c.pid.ki)
        .field("kd", c.pid.kd)
        .field("clamp", c.pid.clamp)
        .field("settle_band", c.pid.settle_band)
        .field("settle_time", c.pid.settle_time);
    sec.finish();
  }
  if (const json* s = root.child("grasp")) {
    auto& g = c.grasp;
    Section sec(*s, "grasp");
    sec.field("duration", g.duration)
        .field("finger_radius", g.finger_radius)
        .field("standoff", g.standoff)
        .field("baseline_ticks", g.baseline_ticks)
        .field("approach_timeout", g.approach_timeout)
        .field("settle_time", g.settle_time)
        .field("side_spread", g.side_spread)
        .field("steady_window", g.steady_window)
        .field("drop_fall", g.drop.max_fall)
        .field("drop_contact_loss", g.drop.max_contact_loss);
    sec.finish();
  }
  if (const json* s = root.child("perturbation")) {
    auto& p = c.perturbation;
    Section sec(*s, "perturbation");
    sec.field("pulses", p.pulses)
        .field("first_start", p.first_start)
        .field("total", p.total)
        .field("magnitude_min", p.magnitude_min)
        .field("magnitude_max", p.magnitude_max)
        .field("duration_min", p.duration_min)
        .field("duration_max", p.duration_max)
        .field("gap_min", p.gap_min)
        .field("gap_max", p.gap_max)
        .field("repeated", p.repeated)
        .field("repeated_magnitude", p.repeated_magnitude)
        .field("repeated_duration", p.repeated_duration)
        .field("response_window", p.response_window);
    sec.finish();
  }
  root.finish();
  c.validate();
  return c;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, "config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

}  // namespace gripsim::harness
