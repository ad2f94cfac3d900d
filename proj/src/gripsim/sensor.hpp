#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>

#include "gripsim/physics.hpp"

namespace gripsim::sensor {

inline constexpr int kChannels = 44;
inline constexpr int kPacSamples = 22;
inline constexpr int kElectrodes = 19;

// Fixed channel order: P_dc, P_ac[0..22), E[0..19), T_dc, T_ac.
inline constexpr int kPdc = 0;
inline constexpr int kPac = 1;
inline constexpr int kElectrode = kPac + kPacSamples;
inline constexpr int kTdc = kElectrode + kElectrodes;
inline constexpr int kTac = kTdc + 1;
static_assert(kTac + 1 == kChannels);

using Channels = std::array<double, kChannels>;
using Rng = std::mt19937_64;

struct SensorFrame {
  Channels values{};
  std::int64_t tick = 0;

  double p_dc() const { return values[kPdc]; }
  std::span<const double, kPacSamples> p_ac() const {
    return std::span<const double, kPacSamples>(values.data() + kPac, kPacSamples);
  }
  std::span<const double, kElectrodes> electrodes() const {
    return std::span<const double, kElectrodes>(values.data() + kElectrode, kElectrodes);
  }
  double t_dc() const { return values[kTdc]; }
  double t_ac() const { return values[kTac]; }
};

struct SensorConfig {
  double pressure_gain = 100.0;  // s.p.u. per N
  double noise_pdc = 0.5;
  double noise_pac = 0.3;
  double noise_electrode = 0.2;
  double noise_temperature = 0.05;
  double electrode_kappa = 8.0;
  // Incipient-slip vibration: amplitude rises linearly from zero at
  // utilization `vibration_onset` to `vibration_amplitude` at utilization 1.
  double vibration_onset = 0.85;
  double vibration_amplitude = 20.0;
  double slip_burst_amplitude = 60.0;
  // Spread of the randomized per-finger offsets around the nominal levels.
  double baseline_spread = 40.0;
  std::array<double, kElectrodes> electrode_angles = default_electrode_angles();

  static constexpr std::array<double, kElectrodes> default_electrode_angles() {
    std::array<double, kElectrodes> a{};
    for (int i = 0; i < kElectrodes; ++i) a[i] = -1.35 + 2.7 * i / (kElectrodes - 1);
    return a;
  }

  // a(u)
  double vibration(double utilization) const;
  void validate() const;
};

// Nominal per-channel offsets around which finger baselines are randomized.
Channels nominal_offsets();

// Per-finger offsets drawn once at construction from their own stream.
Channels random_offsets(const SensorConfig& config, std::uint64_t seed);

// One 10 ms sample. Always consumes the same number of draws from `rng`.
SensorFrame sample_sensor(const physics::ContactState& contact, double contact_angle, const SensorConfig& config,
                          const Channels& offsets, Rng& rng, std::int64_t tick);

class SensorModel {
 public:
  SensorModel(SensorConfig config, Channels offsets, std::uint64_t noise_seed);
  SensorModel(SensorConfig config, std::uint64_t offset_seed, std::uint64_t noise_seed);

  SensorFrame sample(const physics::ContactState& contact, double contact_angle, std::int64_t tick);
  const Channels& offsets() const { return offsets_; }
  const SensorConfig& config() const { return config_; }

 private:
  SensorConfig config_;
  Channels offsets_;
  Rng rng_;
};

struct Baseline {
  Channels offsets{};
  std::int64_t first_tick = 0;
  std::int64_t last_tick = 0;
};

inline constexpr std::size_t kMinBaselineFrames = 10;

// Mean over a no-contact window; rejects windows with any loaded frame or
// fewer than kMinBaselineFrames frames.
Baseline capture_baseline(std::span<const SensorFrame> frames, std::span<const double> normal_forces);

SensorFrame ground_frame(const SensorFrame& frame, const Baseline& baseline);

// Angle of the contact point on the fingertip arc, measured from the
// fingertip's pointing axis.
double contact_point_angle(Vec2 pointing_axis, Vec2 contact_normal);

}  // namespace gripsim::sensor
