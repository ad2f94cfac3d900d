#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gripsim/sensor.hpp"
#include "gripsim/types.hpp"
#include "json.hpp"

namespace gripsim::slip {

// Per-tick representation: P_dc, P_ac mean, P_ac peak-to-peak, E[19], T_dc, T_ac.
inline constexpr int kTickFeatures = 24;
// [x_t, x_t - x_{t-1}]
inline constexpr int kFeatureDim = 2 * kTickFeatures;

using TickFeatures = std::array<double, kTickFeatures>;
using FeatureValues = std::array<double, kFeatureDim>;

struct FeatureVector {
  FeatureValues values{};
  std::int64_t tick = 0;
};

TickFeatures tick_features(const sensor::SensorFrame& grounded);

// Both frames grounded; `current.tick` must equal `previous.tick + 1`.
FeatureVector extract_features(const sensor::SensorFrame& previous, const sensor::SensorFrame& current);

struct LabelThresholds {
  double contact = 10.0;    // T_Contact, s.p.u. (grounded P_dc)
  double movement = 0.01;   // T_Movement, m/s
  double tick_seconds = 0.01;
};

// Ground-truth labels from grounded P_dc and fingertip positions. Velocity is
// the backward difference of consecutive positions; tick 0 uses the forward
// difference.
std::vector<ContactClass> auto_label(std::span<const double> p_dc, std::span<const Vec2> positions,
                                     const LabelThresholds& thresholds);

// One finger's grounded stream from one trial, labelled per tick.
struct TrialRecord {
  int trial_id = 0;
  int finger_id = 0;
  std::vector<sensor::SensorFrame> grounded;
  std::vector<ContactClass> labels;
};

struct LabeledSample {
  FeatureVector features;   // at tick t
  ContactClass label = ContactClass::NoContact;  // at tick t + horizon
  int trial_id = 0;
  int finger_id = 0;
};

inline constexpr int kDefaultHorizon = 10;

std::vector<LabeledSample> build_dataset(std::span<const TrialRecord> trials, int horizon = kDefaultHorizon,
                                         std::vector<std::string>* warnings = nullptr);

struct Standardizer {
  FeatureValues mean{};
  FeatureValues stddev{};

  static Standardizer fit(std::span<const LabeledSample> samples);
  FeatureValues apply(const FeatureValues& x) const;
  FeatureValues invert(const FeatureValues& z) const;
};

enum class ModelKind { Linear, Knn };

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

struct TrainConfig {
  ModelKind kind = ModelKind::Linear;
  double learning_rate = 0.05;
  int epochs = 60;
  // 1 means full-batch gradients.
  int batches_per_epoch = 10;
  double l2 = 1e-4;
  bool class_weighting = true;
  std::uint64_t seed = 1;
  int knn_k = 5;
  std::size_t knn_max_exemplars = 4000;
};

class Classifier {
 public:
  static constexpr int kFormatVersion = 1;
  using Weights = std::array<std::array<double, kFeatureDim + 1>, kNumClasses>;

  Classifier() = default;
  static Classifier linear(Standardizer standardizer, const Weights& weights);
  static Classifier knn(Standardizer standardizer, std::vector<FeatureValues> exemplars,
                        std::vector<ContactClass> labels, int k);

  ModelKind kind() const { return kind_; }
  const Standardizer& standardizer() const { return standardizer_; }
  const Weights& weights() const { return weights_; }
  Weights& mutable_weights() { return weights_; }

  // Linear: class scores. k-NN: neighbour votes.
  std::array<double, kNumClasses> scores(std::span<const double> features) const;
  // Argmax; exact ties go to the lowest class index (slip first).
  ContactClass predict(std::span<const double> features) const;
  ContactClass predict(const FeatureVector& f) const { return predict(f.values); }

  nlohmann::ordered_json to_json() const;
  static Classifier from_json(const nlohmann::json& j);

 private:
  ModelKind kind_ = ModelKind::Linear;
  Standardizer standardizer_;
  Weights weights_{};
  std::vector<FeatureValues> exemplars_;
  std::vector<ContactClass> exemplar_labels_;
  int k_ = 5;
};

ContactClass argmax_class(const std::array<double, kNumClasses>& scores);

Classifier train(std::span<const LabeledSample> dataset, const TrainConfig& config);

struct EvalReport {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> confusion{};  // [truth][prediction]
  std::array<double, kNumClasses> precision{};
  std::array<double, kNumClasses> recall{};
  double balanced_accuracy = 0.0;
  double accuracy = 0.0;
  // One entry per ground-truth slip onset; -1 when slip was not predicted at
  // the onset at all.
  std::vector<int> lead_times;

  std::int64_t count(ContactClass truth) const;
  double median_lead() const;
  double fraction_with_lead_at_least(int ticks) const;
};

using Predictor = std::function<ContactClass(const LabeledSample&)>;

EvalReport evaluate(std::span<const LabeledSample> samples, const Predictor& predictor, int horizon = kDefaultHorizon);
EvalReport evaluate(const Classifier& classifier, std::span<const LabeledSample> samples,
                    int horizon = kDefaultHorizon);

nlohmann::ordered_json to_json(const EvalReport& report);

// Dataset file: one JSON object per line.
nlohmann::ordered_json sample_to_json(const LabeledSample& s);
LabeledSample sample_from_json(const nlohmann::json& j);

}  // namespace gripsim::slip
