#include "gripsim/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gripsim::physics {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Vec2 to_world(const Pose& pose, Vec2 local) { return rotate(local, pose.theta) + pose.position(); }

Vec2 to_local(const Pose& pose, Vec2 world) { return rotate(world - pose.position(), -pose.theta); }

double inverse_or_zero(double v) { return std::isinf(v) ? 0.0 : 1.0 / v; }

SurfacePoint closest_on_polygon(std::span<const Vec2> verts, Vec2 p) {
  const std::size_t n = verts.size();
  double max_inside = -std::numeric_limits<double>::infinity();
  Vec2 inside_normal;
  bool outside = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = verts[i];
    const Vec2 b = verts[(i + 1) % n];
    const Vec2 e = b - a;
    const Vec2 normal = Vec2{e.y, -e.x} / e.norm();
    const double d = normal.dot(p - a);
    if (d > 0.0) outside = true;
    if (d > max_inside) {
      max_inside = d;
      inside_normal = normal;
    }
  }
  if (!outside) return {max_inside, p - inside_normal * max_inside, inside_normal};

  SurfacePoint best{std::numeric_limits<double>::infinity(), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = verts[i];
    const Vec2 e = verts[(i + 1) % n] - a;
    const double s = std::clamp((p - a).dot(e) / e.dot(e), 0.0, 1.0);
    const Vec2 q = a + e * s;
    const double d = (p - q).norm();
    if (d < best.distance) best = {d, q, (p - q) / d};
  }
  return best;
}

}  // namespace

std::vector<Vec2> outline_vertices(const Shape& shape) {
  return std::visit(
      Overloaded{
          [](const Disk&) { return std::vector<Vec2>{}; },
          [](const Box& b) {
            const double hw = b.width / 2.0;
            const double hh = b.height / 2.0;
            return std::vector<Vec2>{{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}};
          },
          [](const RegularPolygon& p) {
            std::vector<Vec2> v;
            v.reserve(static_cast<std::size_t>(p.sides));
            // Flat bottom edge.
            const double offset = -std::numbers::pi / 2.0 + std::numbers::pi / p.sides;
            for (int k = 0; k < p.sides; ++k) {
              const double a = offset + 2.0 * std::numbers::pi * k / p.sides;
              v.push_back({p.circumradius * std::cos(a), p.circumradius * std::sin(a)});
            }
            return v;
          },
      },
      shape);
}

double ObjectSpec::inertia() const {
  if (inertia_override) return *inertia_override;
  return std::visit(Overloaded{
                        [&](const Disk& d) { return 0.5 * mass * d.radius * d.radius; },
                        [&](const Box& b) {
                          return mass * (b.width * b.width + b.height * b.height) / 12.0;
                        },
                        [&](const RegularPolygon& p) {
                          const double c = std::cos(std::numbers::pi / p.sides);
                          return mass * p.circumradius * p.circumradius * (1.0 + 2.0 * c * c) / 6.0;
                        },
                    },
                    shape);
}

double ObjectSpec::bounding_radius() const {
  return std::visit(Overloaded{
                        [](const Disk& d) { return d.radius; },
                        [](const Box& b) { return std::hypot(b.width, b.height) / 2.0; },
                        [](const RegularPolygon& p) { return p.circumradius; },
                    },
                    shape);
}

void ObjectSpec::validate() const {
  require(mass > 0.0 && std::isfinite(mass), ErrorCode::InvalidArgument, "object mass must be > 0");
  require(friction > 0.0 && std::isfinite(friction), ErrorCode::InvalidArgument,
          "object friction coefficient must be > 0");
  std::visit(Overloaded{
                 [](const Disk& d) {
                   require(d.radius > 0.0, ErrorCode::InvalidArgument, "disk radius must be > 0");
                 },
                 [](const Box& b) {
                   require(b.width > 0.0 && b.height > 0.0, ErrorCode::InvalidArgument,
                           "box dimensions must be > 0");
                 },
                 [](const RegularPolygon& p) {
                   require(p.sides >= 3 && p.circumradius > 0.0, ErrorCode::InvalidArgument,
                           "regular polygon needs >= 3 sides and circumradius > 0");
                 },
             },
             shape);
  require(inertia() > 0.0 && std::isfinite(inertia()), ErrorCode::InvalidArgument,
          "object inertia must be > 0");
}

SurfacePoint closest_surface_point(const ObjectSpec& object, const Pose& pose, Vec2 p) {
  const Vec2 local = to_local(pose, p);
  SurfacePoint sp;
  if (const auto* disk = std::get_if<Disk>(&object.shape)) {
    const double r = local.norm();
    const Vec2 dir = r > 0.0 ? local / r : Vec2{1.0, 0.0};
    sp = {r - disk->radius, dir * disk->radius, dir};
  } else {
    const auto verts = outline_vertices(object.shape);
    sp = closest_on_polygon(verts, local);
  }
  return {sp.distance, to_world(pose, sp.point), rotate(sp.normal, pose.theta)};
}

SurfacePoint surface_along_ray(const ObjectSpec& object, const Pose& pose, double angle) {
  const Vec2 dir = rotate(Vec2{std::cos(angle), std::sin(angle)}, -pose.theta);
  SurfacePoint sp;
  if (const auto* disk = std::get_if<Disk>(&object.shape)) {
    sp = {0.0, dir * disk->radius, dir};
  } else {
    const auto verts = outline_vertices(object.shape);
    double best_t = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < verts.size(); ++i) {
      const Vec2 a = verts[i];
      const Vec2 e = verts[(i + 1) % verts.size()] - a;
      const double denom = dir.cross(e);
      if (std::abs(denom) < 1e-15) continue;
      // Solve t*dir = a + s*e.
      const double t = a.cross(e) / denom;
      const double s = a.cross(dir) / denom;
      if (t > 0.0 && s >= -1e-12 && s <= 1.0 + 1e-12 && t < best_t) {
        best_t = t;
        sp = {0.0, dir * t, Vec2{e.y, -e.x} / e.norm()};
      }
    }
  }
  return {0.0, to_world(pose, sp.point), rotate(sp.normal, pose.theta)};
}

std::string_view to_string(ContactMode m) {
  switch (m) {
    case ContactMode::Stick: return "stick";
    case ContactMode::Slip: return "slip";
    case ContactMode::Free: return "free";
  }
  return "unknown";
}

void PhysicsConfig::validate() const {
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::InvalidArgument, "dt_physics must be > 0");
  require(normal_stiffness > 0.0 && tangential_stiffness > 0.0, ErrorCode::InvalidArgument,
          "contact stiffnesses must be > 0");
  require(normal_damping >= 0.0 && tangential_damping >= 0.0, ErrorCode::InvalidArgument,
          "contact damping must be >= 0");
  require(static_kinetic_ratio >= 1.0, ErrorCode::InvalidArgument,
          "static/kinetic friction ratio must be >= 1");
  require(slip_velocity > 0.0, ErrorCode::InvalidArgument, "slip velocity threshold must be > 0");
  require(actuator_damping > 0.0, ErrorCode::InvalidArgument, "actuator damping must be > 0");
  require(velocity_cap > 0.0, ErrorCode::InvalidArgument, "velocity cap must be > 0");
  require(max_substeps >= 1, ErrorCode::InvalidArgument, "max_substeps must be >= 1");
  require(std::isfinite(gravity), ErrorCode::InvalidArgument, "gravity must be finite");
}

WorldState make_world(ObjectSpec object, std::vector<FingertipState> fingers, const PhysicsConfig& config) {
  config.validate();
  object.validate();
  for (const auto& f : fingers) {
    require(f.radius > 0.0, ErrorCode::InvalidArgument, "fingertip radius must be > 0");
  }
  WorldState w;
  w.pose = object.initial_pose;
  w.object = std::move(object);
  w.fingers = std::move(fingers);
  w.contacts.resize(w.fingers.size());
  for (std::size_t i = 0; i < w.fingers.size(); ++i) {
    w.contacts[i] = compute_contact({w.fingers[i], w.object, w.pose, w.twist, ContactState{}, config.dt},
                                    config);
  }
  return w;
}

ContactState compute_contact(const ContactQuery& q, const PhysicsConfig& config) {
  const SurfacePoint sp = closest_surface_point(q.object, q.pose, q.finger.position);
  ContactState c;
  c.normal = sp.normal;
  c.point = sp.point;
  const double pen = q.finger.radius - sp.distance;
  if (pen <= 0.0) return c;
  c.penetration = pen;

  const Vec2 n = sp.normal;
  const Vec2 t = n.perp();
  const Vec2 r = sp.point - q.pose.position();
  const Vec2 v_obj = q.twist.linear() + Vec2{-r.y, r.x} * q.twist.omega;
  const double inv_b = inverse_or_zero(config.actuator_damping);

  // F_N = k_n pen + d_n pen_rate, where the fingertip itself yields at F_N / b.
  const double approach = -(q.finger.commanded_velocity - v_obj).dot(n);
  const double fn = (config.normal_stiffness * pen + config.normal_damping * approach) /
                    (1.0 + config.normal_damping * inv_b);
  if (!(fn > 0.0)) return c;

  c.in_contact = true;
  c.normal_force = fn;
  const Vec2 v_finger = q.finger.commanded_velocity + n * (fn * inv_b);
  const double vt = (v_finger - v_obj).dot(t);
  c.tangential_velocity = vt;

  const double mu_s = q.object.friction;
  const double mu_k = mu_s / config.static_kinetic_ratio;
  const double s_prev = q.previous.mode == ContactMode::Free ? 0.0 : q.previous.spring_displacement;
  const double s_trial = s_prev + vt * q.dt;
  const double ft_trial = -(config.tangential_stiffness * s_trial + config.tangential_damping * vt);

  // Sliding ends below the hysteresis band or when the relative velocity
  // passes through zero within the step.
  const bool reversed = vt * q.previous.tangential_velocity <= 0.0;
  const bool may_stick =
      q.previous.mode != ContactMode::Slip || std::abs(vt) < config.slip_velocity / 2.0 || reversed;
  if (may_stick && std::abs(ft_trial) <= mu_s * fn) {
    c.mode = ContactMode::Stick;
    c.tangential_force = ft_trial;
    c.spring_displacement = s_trial;
  } else {
    c.tangential_force = std::copysign(mu_k * fn, ft_trial);
    c.spring_displacement = -c.tangential_force / config.tangential_stiffness;
    // A clamped contact with exactly zero sliding speed is still sticking.
    c.mode = vt != 0.0 ? ContactMode::Slip : ContactMode::Stick;
  }
  c.utilization = std::abs(c.tangential_force) / (mu_s * fn);
  return c;
}

Vec2 fingertip_velocity(const FingertipState& finger, const ContactState& contact, const PhysicsConfig& config) {
  Vec2 v = finger.commanded_velocity;
  if (contact.in_contact) v += contact.normal * (contact.normal_force * inverse_or_zero(config.actuator_damping));
  const double speed = v.norm();
  if (speed > config.velocity_cap) v = v * (config.velocity_cap / speed);
  return v;
}

int substep_count(const WorldState& world, const PhysicsConfig& config) {
  const double inv_b = inverse_or_zero(config.actuator_damping);
  const double scale = 1.0 / (1.0 + config.normal_damping * inv_b);
  const double kn = config.normal_stiffness * scale;
  const double cn = config.normal_damping * scale;
  double rate = kn * inv_b;
  if (!world.object_fixed && !world.fingers.empty()) {
    const double nf = static_cast<double>(world.fingers.size());
    const double r = world.object.bounding_radius();
    const double inv_mass = std::max(1.0 / world.object.mass, r * r / world.object.inertia());
    const double c = std::max(cn, config.tangential_damping);
    const double k = std::max(kn, config.tangential_stiffness);
    rate = std::max({rate, nf * c * inv_mass, std::sqrt(nf * k * inv_mass)});
  }
  const double n = std::ceil(config.dt * rate / 0.5);
  return static_cast<int>(std::clamp(n, 1.0, static_cast<double>(config.max_substeps)));
}

namespace {

bool world_finite(const WorldState& w) {
  if (!std::isfinite(w.pose.x) || !std::isfinite(w.pose.y) || !std::isfinite(w.pose.theta)) return false;
  if (!std::isfinite(w.twist.vx) || !std::isfinite(w.twist.vy) || !std::isfinite(w.twist.omega)) return false;
  for (const auto& f : w.fingers) {
    if (!is_finite(f.position) || !is_finite(f.velocity)) return false;
  }
  for (const auto& c : w.contacts) {
    if (!std::isfinite(c.normal_force) || !std::isfinite(c.tangential_force)) return false;
  }
  return true;
}

}  // namespace

void step_physics_in_place(WorldState& world, const PhysicsConfig& config) {
  config.validate();
  require(world.contacts.size() == world.fingers.size(), ErrorCode::InvalidArgument,
          "contacts must be index-aligned with fingers");
  const int n = substep_count(world, config);
  const double h = config.dt / n;
  const double mass = world.object.mass;
  const double inertia = world.object.inertia();

  for (int s = 0; s < n; ++s) {
    Vec2 force{world.external_wrench.fx, world.external_wrench.fy - mass * config.gravity};
    double torque = world.external_wrench.torque;
    for (std::size_t i = 0; i < world.fingers.size(); ++i) {
      auto& finger = world.fingers[i];
      auto& contact = world.contacts[i];
      contact = compute_contact({finger, world.object, world.pose, world.twist, contact, h}, config);
      const Vec2 on_object = -contact.force_on_finger();
      force += on_object;
      torque += (contact.point - world.pose.position()).cross(on_object);
      finger.velocity = fingertip_velocity(finger, contact, config);
    }
    if (world.object_fixed) {
      world.twist = {};
    } else {
      world.twist.vx += h * force.x / mass;
      world.twist.vy += h * force.y / mass;
      world.twist.omega += h * torque / inertia;
      world.pose.x += h * world.twist.vx;
      world.pose.y += h * world.twist.vy;
      world.pose.theta += h * world.twist.omega;
    }
    for (auto& finger : world.fingers) finger.position += finger.velocity * h;
  }
  world.time += config.dt;
  ++world.step_count;
  if (!world_finite(world)) {
    fail(ErrorCode::SimulationDiverged, "simulation diverged at t=" + std::to_string(world.time));
  }
}

WorldState step_physics(WorldState world, const PhysicsConfig& config) {
  step_physics_in_place(world, config);
  return world;
}

ContactClass ground_truth_contact_class(const ContactState& contact, const PhysicsConfig& config) {
  if (!(contact.normal_force > 0.0)) return ContactClass::NoContact;
  if (std::abs(contact.tangential_velocity) > config.slip_velocity) return ContactClass::Slip;
  return ContactClass::Contact;
}

double kinetic_energy(const WorldState& world) {
  if (world.object_fixed) return 0.0;
  const auto& t = world.twist;
  return 0.5 * world.object.mass * (t.vx * t.vx + t.vy * t.vy) + 0.5 * world.object.inertia() * t.omega * t.omega;
}

const ScheduledWrench& WrenchSchedule::add(const Wrench& wrench, double start, double duration) {
  require(duration > 0.0 && std::isfinite(duration), ErrorCode::InvalidArgument, "wrench duration must be > 0");
  require(std::isfinite(start), ErrorCode::InvalidArgument, "wrench start must be finite");
  entries_.push_back({start, duration, wrench});
  return entries_.back();
}

Wrench WrenchSchedule::at(double t) const {
  Wrench total;
  for (const auto& e : entries_) {
    if (e.active(t)) total = total + e.wrench;
  }
  return total;
}

const ScheduledWrench& apply_external_wrench(const WorldState& world, WrenchSchedule& schedule,
                                             const Wrench& wrench, double duration) {
  return schedule.add(wrench, world.time, duration);
}

std::optional<double> find_drop(std::span<const DropSample> trajectory, double initial_height,
                                const DropCriteria& criteria) {
  std::optional<double> loss_start;
  for (const auto& s : trajectory) {
    if (s.height < initial_height - criteria.max_fall) return s.time;
    if (s.any_contact) {
      loss_start.reset();
    } else {
      if (!loss_start) loss_start = s.time;
      if (s.time - *loss_start > criteria.max_contact_loss) return s.time;
    }
  }
  return std::nullopt;
}

bool detect_drop(std::span<const DropSample> trajectory, double initial_height, const DropCriteria& criteria) {
  require(!trajectory.empty(), ErrorCode::PreconditionFailed, "drop detection needs a non-empty trajectory");
  return find_drop(trajectory, initial_height, criteria).has_value();
}

}  // namespace gripsim::physics
