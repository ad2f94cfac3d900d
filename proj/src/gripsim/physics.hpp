#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gripsim/types.hpp"

namespace gripsim::physics {

struct Disk {
  double radius = 0.0;
};

struct Box {
  double width = 0.0;
  double height = 0.0;
};

struct RegularPolygon {
  int sides = 0;
  double circumradius = 0.0;
};

using Shape = std::variant<Disk, Box, RegularPolygon>;

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
};

struct Twist {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  Vec2 linear() const { return {vx, vy}; }
};

struct Wrench {
  double fx = 0.0;
  double fy = 0.0;
  double torque = 0.0;

  Wrench operator+(const Wrench& o) const { return {fx + o.fx, fy + o.fy, torque + o.torque}; }
  bool operator==(const Wrench&) const = default;
};

struct ObjectSpec {
  std::string name = "object";
  Shape shape = Disk{0.03};
  double mass = 0.1;                     // kg
  std::optional<double> inertia_override;  // kg m^2
  double friction = 0.5;                 // mu, static
  Pose initial_pose;

  double inertia() const;
  // Largest distance from the centre of mass to the outline.
  double bounding_radius() const;
  void validate() const;
};

// Outline vertices in the object frame (counter-clockwise). Empty for disks.
std::vector<Vec2> outline_vertices(const Shape& shape);

struct SurfacePoint {
  double distance = 0.0;  // signed, negative inside the object
  Vec2 point;             // closest point on the outline, world frame
  Vec2 normal;            // outward unit normal at `point`, world frame
};

SurfacePoint closest_surface_point(const ObjectSpec& object, const Pose& pose, Vec2 p);

// Point where a ray from the object centre at `angle` (world frame) leaves the
// outline, with the outward normal of the face it crosses.
SurfacePoint surface_along_ray(const ObjectSpec& object, const Pose& pose, double angle);

enum class ContactMode : std::uint8_t { Stick, Slip, Free };

std::string_view to_string(ContactMode m);

struct FingertipState {
  Vec2 position;
  Vec2 velocity;
  Vec2 commanded_velocity;
  double radius = 0.01;
};

struct ContactState {
  bool in_contact = false;
  double penetration = 0.0;
  Vec2 normal;                // object -> finger
  Vec2 point;                 // contact point on the object outline
  double normal_force = 0.0;  // F_N >= 0
  double tangential_force = 0.0;  // on the finger, along normal.perp()
  ContactMode mode = ContactMode::Free;
  double tangential_velocity = 0.0;  // finger relative to object, along normal.perp()
  double spring_displacement = 0.0;
  double utilization = 0.0;

  Vec2 tangent() const { return normal.perp(); }
  // Total force exerted by the object on the finger.
  Vec2 force_on_finger() const { return normal * normal_force + tangent() * tangential_force; }
};

struct PhysicsConfig {
  double dt = 1e-3;
  double gravity = 9.81;
  double normal_stiffness = 40000.0;    // k_n, N/m
  double normal_damping = 50.0;         // d_n, N s/m
  double tangential_stiffness = 2000.0; // k_t, N/m
  double tangential_damping = 40.0;     // d_t, N s/m
  double static_kinetic_ratio = 1.0;    // mu_s / mu_k
  double slip_velocity = 0.002;         // v_slip, m/s
  // Normal-axis admittance of the velocity-servoed fingertip: a fingertip
  // pressing with force F yields at F / actuator_damping. Infinity makes the
  // fingertip perfectly kinematic.
  double actuator_damping = 1000.0;     // N s/m
  double velocity_cap = 0.5;            // m/s
  int max_substeps = 256;

  void validate() const;
};

struct WorldState {
  double time = 0.0;
  ObjectSpec object;
  Pose pose;
  Twist twist;
  // Fixated object (training support, or the support before release).
  bool object_fixed = false;
  std::vector<FingertipState> fingers;
  std::vector<ContactState> contacts;
  Wrench external_wrench;
  std::uint64_t step_count = 0;
};

WorldState make_world(ObjectSpec object, std::vector<FingertipState> fingers, const PhysicsConfig& config);

struct ContactQuery {
  const FingertipState& finger;
  const ObjectSpec& object;
  const Pose& pose;
  const Twist& twist;
  const ContactState& previous;
  double dt;
};

ContactState compute_contact(const ContactQuery& query, const PhysicsConfig& config);

// Fingertip velocity resulting from its command and the normal-axis admittance.
Vec2 fingertip_velocity(const FingertipState& finger, const ContactState& contact,
                        const PhysicsConfig& config);

// Number of internal integration substeps used for one dt.
int substep_count(const WorldState& world, const PhysicsConfig& config);

// Advances the world by exactly config.dt. Throws Error(SimulationDiverged)
// when any state becomes non-finite.
void step_physics_in_place(WorldState& world, const PhysicsConfig& config);
WorldState step_physics(WorldState world, const PhysicsConfig& config);

ContactClass ground_truth_contact_class(const ContactState& contact, const PhysicsConfig& config);

double kinetic_energy(const WorldState& world);

struct ScheduledWrench {
  double start = 0.0;
  double duration = 0.0;
  Wrench wrench;

  bool active(double t) const { return t >= start && t < start + duration; }
};

// Overlapping entries are summed.
class WrenchSchedule {
 public:
  const ScheduledWrench& add(const Wrench& wrench, double start, double duration);
  Wrench at(double t) const;
  std::span<const ScheduledWrench> entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<ScheduledWrench> entries_;
};

// Schedules `wrench` on the object starting at the world's current time.
const ScheduledWrench& apply_external_wrench(const WorldState& world, WrenchSchedule& schedule,
                                             const Wrench& wrench, double duration);

struct DropSample {
  double time = 0.0;
  double height = 0.0;  // object COM y
  bool any_contact = false;
};

struct DropCriteria {
  double max_fall = 0.05;          // m below the initial height
  double max_contact_loss = 0.1;   // s of consecutive total contact loss
};

// Time of the first sample at which the object counts as dropped.
std::optional<double> find_drop(std::span<const DropSample> trajectory, double initial_height,
                                const DropCriteria& criteria = {});

bool detect_drop(std::span<const DropSample> trajectory, double initial_height,
                 const DropCriteria& criteria = {});

}  // namespace gripsim::physics
