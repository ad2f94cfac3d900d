#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gripsim/harness/grasp.hpp"

namespace gripsim::harness {

inline constexpr int kProtocolVersion = 1;

struct SessionOptions {
  physics::ObjectSpec object = heavy_box();
  int fingers = 3;
  std::uint64_t seed = 1;
};

namespace command {
struct Wrench {
  physics::Wrench wrench;
  double duration = 0.0;
};
struct Override {
  int finger = 0;
  Vec2 velocity;
};
struct Release {
  int finger = 0;
};
struct Pause {};
struct Resume {};
struct Reset {
  std::optional<std::uint64_t> seed;
};
}  // namespace command

using Command = std::variant<command::Wrench, command::Override, command::Release, command::Pause, command::Resume,
                             command::Reset>;

// Throws Error(Parse / InvalidArgument) on malformed messages.
Command parse_command(const nlohmann::json& message, int finger_count);

// One live grasp driven tick by tick. Commands are validated on receipt,
// queued, and applied together at the start of the next tick.
class Session {
 public:
  Session(SimConfig config, std::shared_ptr<const slip::Classifier> classifier, SessionOptions options);

  nlohmann::ordered_json hello() const;

  // Returns an ack (with the tick the command takes effect at) or an error
  // message; never throws for bad input.
  nlohmann::ordered_json submit(std::string_view text);

  // Applies queued commands, then steps one control tick unless paused.
  // Returns true when the simulation advanced.
  bool advance();

  nlohmann::ordered_json snapshot() const;

  bool paused() const { return paused_; }
  std::int64_t tick() const { return ticks_; }
  const GraspEngine& engine() const { return *engine_; }
  // Applied commands with their tick stamps.
  const std::vector<nlohmann::ordered_json>& log() const { return log_; }

 private:
  void restart(std::uint64_t seed);
  void apply(const Command& c);

  SimConfig config_;
  std::shared_ptr<const slip::Classifier> classifier_;
  SessionOptions options_;
  std::unique_ptr<GraspEngine> engine_;
  std::optional<TickRecord> last_;
  std::deque<std::pair<Command, nlohmann::ordered_json>> queue_;
  std::vector<nlohmann::ordered_json> log_;
  std::int64_t ticks_ = 0;
  bool paused_ = false;
};

}  // namespace gripsim::harness
