#include "gripsim/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gripsim::sensor {

double SensorConfig::vibration(double utilization) const {
  return vibration_amplitude * std::max(0.0, (utilization - vibration_onset) / (1.0 - vibration_onset));
}

void SensorConfig::validate() const {
  require(pressure_gain > 0.0, ErrorCode::InvalidArgument, "pressure gain must be > 0");
  require(noise_pdc >= 0.0 && noise_pac >= 0.0 && noise_electrode >= 0.0 && noise_temperature >= 0.0,
          ErrorCode::InvalidArgument, "noise levels must be >= 0");
  require(vibration_onset > 0.0 && vibration_onset < 1.0, ErrorCode::InvalidArgument,
          "vibration onset must lie in (0, 1)");
  require(vibration_amplitude >= 0.0 && slip_burst_amplitude >= 0.0, ErrorCode::InvalidArgument,
          "vibration amplitudes must be >= 0");
  require(electrode_kappa > 0.0, ErrorCode::InvalidArgument, "electrode kappa must be > 0");
}

Channels nominal_offsets() {
  Channels c{};
  c[kPdc] = 1800.0;
  for (int k = 0; k < kPacSamples; ++k) c[kPac + k] = 2000.0;
  for (int i = 0; i < kElectrodes; ++i) c[kElectrode + i] = 3000.0;
  c[kTdc] = 2500.0;
  c[kTac] = 2000.0;
  return c;
}

Channels random_offsets(const SensorConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Channels c = nominal_offsets();
  for (double& v : c) v += config.baseline_spread * normal(rng);
  return c;
}

SensorFrame sample_sensor(const physics::ContactState& contact, double contact_angle, const SensorConfig& config,
                          const Channels& offsets, Rng& rng, std::int64_t tick) {
  std::normal_distribution<double> normal(0.0, 1.0);
  SensorFrame f;
  f.tick = tick;
  const double fn = contact.in_contact ? contact.normal_force : 0.0;
  const double load = config.pressure_gain * fn;

  f.values[kPdc] = offsets[kPdc] + load + config.noise_pdc * normal(rng);

  // Band-limited carrier: two-tap moving average of white noise, unit variance.
  std::array<double, kPacSamples + 1> white{};
  std::array<double, kPacSamples + 1> burst_white{};
  for (double& w : white) w = normal(rng);
  for (double& w : burst_white) w = normal(rng);
  const double amplitude = fn > 0.0 ? config.vibration(contact.utilization) : 0.0;
  const bool slipping = fn > 0.0 && contact.mode == physics::ContactMode::Slip;
  for (int k = 0; k < kPacSamples; ++k) {
    const double carrier = (white[k] + white[k + 1]) * std::numbers::sqrt2 / 2.0;
    double v = offsets[kPac + k] + amplitude * carrier + config.noise_pac * normal(rng);
    if (slipping) {
      const double b = (burst_white[k] + burst_white[k + 1]) * std::numbers::sqrt2 / 2.0;
      v += config.slip_burst_amplitude * std::exp(-k / 8.0) * b;
    }
    f.values[kPac + k] = v;
  }

  for (int i = 0; i < kElectrodes; ++i) {
    const double d = config.electrode_angles[i] - contact_angle;
    f.values[kElectrode + i] =
        offsets[kElectrode + i] + load * std::exp(-config.electrode_kappa * d * d) + config.noise_electrode * normal(rng);
  }
  f.values[kTdc] = offsets[kTdc] + config.noise_temperature * normal(rng);
  f.values[kTac] = offsets[kTac] + config.noise_temperature * normal(rng);
  return f;
}

SensorModel::SensorModel(SensorConfig config, Channels offsets, std::uint64_t noise_seed)
    : config_(config), offsets_(offsets), rng_(noise_seed) {
  config_.validate();
}

SensorModel::SensorModel(SensorConfig config, std::uint64_t offset_seed, std::uint64_t noise_seed)
    : SensorModel(config, random_offsets(config, offset_seed), noise_seed) {}

SensorFrame SensorModel::sample(const physics::ContactState& contact, double contact_angle, std::int64_t tick) {
  return sample_sensor(contact, contact_angle, config_, offsets_, rng_, tick);
}

Baseline capture_baseline(std::span<const SensorFrame> frames, std::span<const double> normal_forces) {
  require(frames.size() == normal_forces.size(), ErrorCode::InvalidArgument,
          "baseline window needs one normal force per frame");
  require(frames.size() >= kMinBaselineFrames, ErrorCode::PreconditionFailed,
          "baseline window needs at least 10 no-contact frames");
  for (double fn : normal_forces) {
    require(fn == 0.0, ErrorCode::PreconditionFailed, "baseline window contains an in-contact frame");
  }
  Baseline b;
  for (const auto& f : frames) {
    for (int c = 0; c < kChannels; ++c) b.offsets[c] += f.values[c];
  }
  for (double& v : b.offsets) v /= static_cast<double>(frames.size());
  b.first_tick = frames.front().tick;
  b.last_tick = frames.back().tick;
  return b;
}

SensorFrame ground_frame(const SensorFrame& frame, const Baseline& baseline) {
  SensorFrame g;
  g.tick = frame.tick;
  for (int c = 0; c < kChannels; ++c) g.values[c] = frame.values[c] - baseline.offsets[c];
  return g;
}

double contact_point_angle(Vec2 pointing_axis, Vec2 contact_normal) {
  const Vec2 toward = -contact_normal;
  return std::atan2(pointing_axis.cross(toward), pointing_axis.dot(toward));
}

}  // namespace gripsim::sensor
