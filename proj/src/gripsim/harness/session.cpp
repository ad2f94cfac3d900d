#include "gripsim/harness/session.hpp"

#include <cmath>

namespace gripsim::harness {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

double number(const json& m, const char* key, std::optional<double> fallback = std::nullopt) {
  auto it = m.find(key);
  if (it == m.end()) {
    if (fallback) return *fallback;
    fail(ErrorCode::Parse, std::string("missing field '") + key + "'");
  }
  if (!it->is_number()) fail(ErrorCode::Parse, std::string("field '") + key + "' must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be finite");
  return v;
}

int finger_id(const json& m, int finger_count) {
  auto it = m.find("finger");
  if (it == m.end() || !it->is_number_integer()) fail(ErrorCode::Parse, "field 'finger' must be an integer");
  const int id = it->get<int>();
  if (id < 0 || id >= finger_count) fail(ErrorCode::InvalidArgument, "finger id out of range");
  return id;
}

ordered_json vec(Vec2 v) { return ordered_json::array({v.x, v.y}); }

}  // namespace

Command parse_command(const json& m, int finger_count) {
  if (!m.is_object()) fail(ErrorCode::Parse, "command must be a JSON object");
  auto t = m.find("type");
  if (t == m.end() || !t->is_string()) fail(ErrorCode::Parse, "command needs a string 'type'");
  const std::string type = t->get<std::string>();
  if (type == "wrench") {
    command::Wrench c;
    c.wrench = {number(m, "fx", 0.0), number(m, "fy", 0.0), number(m, "torque", 0.0)};
    c.duration = number(m, "duration");
    if (c.duration <= 0.0) fail(ErrorCode::InvalidArgument, "wrench duration must be > 0");
    return c;
  }
  if (type == "override") {
    command::Override c;
    c.finger = finger_id(m, finger_count);
    auto v = m.find("velocity");
    if (v == m.end() || !v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
      fail(ErrorCode::Parse, "field 'velocity' must be [vx, vy]");
    }
    c.velocity = {(*v)[0].get<double>(), (*v)[1].get<double>()};
    if (!is_finite(c.velocity)) fail(ErrorCode::InvalidArgument, "override velocity must be finite");
    return c;
  }
  if (type == "release") return command::Release{finger_id(m, finger_count)};
  if (type == "pause") return command::Pause{};
  if (type == "resume") return command::Resume{};
  if (type == "reset") {
    command::Reset c;
    if (auto s = m.find("seed"); s != m.end()) {
      if (!s->is_number_unsigned()) fail(ErrorCode::Parse, "field 'seed' must be a non-negative integer");
      c.seed = s->get<std::uint64_t>();
    }
    return c;
  }
  fail(ErrorCode::Parse, "unknown command type '" + type + "'");
}

Session::Session(SimConfig config, std::shared_ptr<const slip::Classifier> classifier, SessionOptions options)
    : config_(std::move(config)), classifier_(std::move(classifier)), options_(std::move(options)) {
  restart(options_.seed);
}

void Session::restart(std::uint64_t seed) {
  auto engine = std::make_unique<GraspEngine>(config_, options_.object, options_.fingers, classifier_, seed);
  if (!engine->establish()) fail(ErrorCode::PreconditionFailed, "session grasp failed: " + engine->failure());
  engine_ = std::move(engine);
  options_.seed = seed;
  last_.reset();
  ticks_ = 0;
}

ordered_json Session::hello() const {
  ordered_json j;
  j["type"] = "hello";
  j["protocol_version"] = kProtocolVersion;
  j["tick_seconds"] = config_.tick_seconds();
  j["object"] = to_json(options_.object);
  j["fingers"] = options_.fingers;
  j["seed"] = options_.seed;
  j["commands"] = {"wrench", "override", "release", "pause", "resume", "reset"};
  return j;
}

ordered_json Session::submit(std::string_view text) {
  ordered_json reply;
  json message;
  try {
    message = json::parse(text);
  } catch (const json::exception& e) {
    reply["type"] = "error";
    reply["message"] = std::string("malformed JSON: ") + e.what();
    return reply;
  }
  if (message.is_object() && message.contains("id")) reply["id"] = message["id"];
  try {
    Command c = parse_command(message, engine_->finger_count());
    reply["type"] = "ack";
    reply["command"] = message["type"];
    reply["tick"] = ticks_;
    ordered_json entry = message;
    entry["received_tick"] = ticks_;
    queue_.emplace_back(std::move(c), std::move(entry));
  } catch (const Error& e) {
    reply["type"] = "error";
    reply["message"] = e.what();
  }
  return reply;
}

void Session::apply(const Command& c) {
  if (const auto* w = std::get_if<command::Wrench>(&c)) {
    engine_->schedule_wrench(w->wrench, engine_->elapsed(), w->duration);
  } else if (const auto* o = std::get_if<command::Override>(&c)) {
    engine_->set_manual_velocity(o->finger, o->velocity);
  } else if (const auto* r = std::get_if<command::Release>(&c)) {
    engine_->set_manual_velocity(r->finger, std::nullopt);
  } else if (std::holds_alternative<command::Pause>(c)) {
    paused_ = true;
  } else if (std::holds_alternative<command::Resume>(c)) {
    paused_ = false;
  } else {
    restart(std::get<command::Reset>(c).seed.value_or(options_.seed));
  }
}

bool Session::advance() {
  while (!queue_.empty()) {
    auto [c, entry] = std::move(queue_.front());
    queue_.pop_front();
    entry["applied_tick"] = ticks_;
    apply(c);
    log_.push_back(std::move(entry));
  }
  if (paused_) return false;
  last_ = engine_->step();
  ++ticks_;
  return true;
}

ordered_json Session::snapshot() const {
  const auto& world = engine_->world();
  ordered_json j;
  j["type"] = "state";
  j["tick"] = ticks_;
  j["time"] = engine_->elapsed();
  j["paused"] = paused_;
  j["object"] = {{"pose", {world.pose.x, world.pose.y, world.pose.theta}},
                 {"twist", {world.twist.vx, world.twist.vy, world.twist.omega}}};
  ordered_json fingers = ordered_json::array();
  for (int k = 0; k < engine_->finger_count(); ++k) {
    const auto& c = world.contacts[k];
    ordered_json f;
    f["id"] = k;
    f["pos"] = vec(world.fingers[k].position);
    f["F_N"] = c.normal_force;
    f["F_t"] = c.tangential_force;
    f["mode"] = std::string(physics::to_string(c.mode));
    if (last_) {
      const auto& ctl = last_->fingers[k].control;
      f["y"] = ctl.y;
      f["y_min"] = ctl.y_min ? ordered_json(*ctl.y_min) : ordered_json(nullptr);
      f["c_pred"] = std::string(to_string(ctl.prediction));
      f["overridden"] = last_->fingers[k].overridden;
    } else {
      f["y"] = config_.controller.initial_fraction;
      f["y_min"] = nullptr;
      f["c_pred"] = nullptr;
      f["overridden"] = false;
    }
    fingers.push_back(std::move(f));
  }
  j["fingers"] = std::move(fingers);
  const auto w = last_ ? last_->applied : physics::Wrench{};
  j["applied_wrench"] = {w.fx, w.fy, w.torque};
  return j;
}

}  // namespace gripsim::harness
