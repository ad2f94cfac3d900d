#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gripsim/slip.hpp"

using namespace gripsim;
using namespace gripsim::slip;

namespace {

sensor::SensorFrame filled(std::int64_t tick, double v) {
  sensor::SensorFrame f;
  f.tick = tick;
  f.values.fill(v);
  return f;
}

// Three well separated clusters in feature space.
std::vector<LabeledSample> clusters(std::uint64_t seed, int per_class) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  std::vector<LabeledSample> out;
  for (int i = 0; i < per_class; ++i) {
    for (int c = 0; c < kNumClasses; ++c) {
      LabeledSample s;
      for (int k = 0; k < kFeatureDim; ++k) s.features.values[k] = n(rng);
      s.features.values[c] += 5.0;
      s.features.values[10 + c] -= 3.0;
      s.label = class_from_index(c);
      s.trial_id = i;
      s.features.tick = i;
      out.push_back(s);
    }
  }
  return out;
}

double accuracy(const Classifier& clf, const std::vector<LabeledSample>& data) {
  int ok = 0;
  for (const auto& s : data) ok += clf.predict(s.features) == s.label ? 1 : 0;
  return static_cast<double>(ok) / data.size();
}

TrainConfig full_batch() {
  TrainConfig c;
  c.batches_per_epoch = 1;
  c.epochs = 40;
  return c;
}

}  // namespace

TEST(Features, Dimension) {
  EXPECT_EQ(kFeatureDim, 48);
  const auto f = extract_features(filled(0, 1.0), filled(1, 1.0));
  EXPECT_EQ(f.values.size(), 48u);
  EXPECT_EQ(f.tick, 1);
}

TEST(Features, ConstantStreamHasZeroDelta) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  sensor::SensorFrame a;
  for (double& v : a.values) v = u(rng);
  auto b = a;
  b.tick = 1;
  const auto f = extract_features(a, b);
  for (int i = kTickFeatures; i < kFeatureDim; ++i) EXPECT_EQ(f.values[i], 0.0);
}

TEST(Features, HandBuiltDelta) {
  const auto f = extract_features(filled(4, 1.0), filled(5, 3.0));
  for (int i = 0; i < kTickFeatures; ++i) {
    // peak-to-peak of a flat batch is 0 on both ticks
    const double expect = i == 2 ? 0.0 : 2.0;
    EXPECT_EQ(f.values[kTickFeatures + i], expect) << i;
    EXPECT_EQ(f.values[i], i == 2 ? 0.0 : 3.0) << i;
  }
}

TEST(Features, PacSummary) {
  sensor::SensorFrame f;
  for (int k = 0; k < sensor::kPacSamples; ++k) f.values[sensor::kPac + k] = k;
  const auto x = tick_features(f);
  EXPECT_DOUBLE_EQ(x[1], 10.5);
  EXPECT_EQ(x[2], 21.0);
}

TEST(Features, RejectsNonConsecutiveTicks) {
  try {
    extract_features(filled(3, 0.0), filled(5, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionFailed);
  }
}

TEST(Labeler, AllZeroIsNoContact) {
  std::vector<double> p(50, 0.0);
  std::vector<Vec2> x(50);
  for (auto l : auto_label(p, x, {})) EXPECT_EQ(l, ContactClass::NoContact);
}

TEST(Labeler, StationaryPressIsContact) {
  LabelThresholds t;
  std::vector<double> p(50, 2.0 * t.contact);
  std::vector<Vec2> x(50, Vec2{0.01, 0.02});
  for (auto l : auto_label(p, x, t)) EXPECT_EQ(l, ContactClass::Contact);
}

TEST(Labeler, CraftedTraceTickForTick) {
  const LabelThresholds t;
  const int n = 400;
  const double step = 3.0 * t.movement * t.tick_seconds;
  std::vector<double> p(n);
  std::vector<Vec2> x(n);
  double pos = 0.0;
  for (int k = 0; k < n; ++k) {
    p[k] = k >= 100 ? 50.0 : 0.0;
    if (k >= 200 && k <= 300) pos += step;
    x[k] = {pos, 0.0};
  }
  std::vector<ContactClass> expected(n, ContactClass::Contact);
  for (int k = 0; k < 100; ++k) expected[k] = ContactClass::NoContact;
  for (int k = 200; k <= 300; ++k) expected[k] = ContactClass::Slip;
  EXPECT_EQ(auto_label(p, x, t), expected);
}

TEST(Labeler, PartitionProperty) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  std::normal_distribution<double> step(0.0, 0.0002);
  const LabelThresholds t;
  std::vector<double> p(1000);
  std::vector<Vec2> x(1000);
  Vec2 pos;
  for (int k = 0; k < 1000; ++k) {
    p[k] = u(rng);
    pos += Vec2{step(rng), step(rng)};
    x[k] = pos;
  }
  const auto labels = auto_label(p, x, t);
  for (int k = 0; k < 1000; ++k) EXPECT_EQ(labels[k] == ContactClass::NoContact, p[k] <= t.contact);
}

TEST(Labeler, ZeroVelocityNeverSlips) {
  std::vector<double> p(100, 80.0);
  std::vector<Vec2> x(100, Vec2{0.1, -0.2});
  const auto l = auto_label(p, x, {});
  EXPECT_EQ(std::count(l.begin(), l.end(), ContactClass::Slip), 0);
  EXPECT_THROW(auto_label(p, std::vector<Vec2>(99), {}), Error);
}

TEST(Dataset, BoundaryCounts) {
  TrialRecord r;
  for (int k = 0; k < kDefaultHorizon + 2; ++k) {
    r.grounded.push_back(filled(k, k));
    r.labels.push_back(k % 2 ? ContactClass::Slip : ContactClass::Contact);
  }
  std::vector<TrialRecord> one{r};
  const auto s = build_dataset(one);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].label, r.labels[1 + kDefaultHorizon]);

  r.grounded.pop_back();
  r.labels.pop_back();
  std::vector<std::string> warnings;
  std::vector<TrialRecord> short_trial{r};
  EXPECT_TRUE(build_dataset(short_trial, kDefaultHorizon, &warnings).empty());
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Dataset, HorizonAlignment) {
  std::vector<TrialRecord> trials;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> cls(0, 2);
  for (int f = 0; f < 3; ++f) {
    TrialRecord r;
    r.trial_id = 7;
    r.finger_id = f;
    for (int k = 0; k < 1000; ++k) {
      r.grounded.push_back(filled(k, 0.5 * k + f));
      r.labels.push_back(class_from_index(cls(rng)));
    }
    trials.push_back(r);
  }
  const auto s = build_dataset(trials);
  ASSERT_EQ(s.size(), 3u * (1000 - kDefaultHorizon - 1));
  for (const auto& x : s) {
    const auto& r = trials[x.finger_id];
    EXPECT_EQ(x.label, r.labels[x.features.tick + kDefaultHorizon]);
    EXPECT_EQ(x.trial_id, 7);
  }
}

TEST(Dataset, GroundingShiftChangesNothing) {
  // Raw streams shifted by a constant and grounded against their own baselines.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 5.0);
  std::vector<sensor::SensorFrame> raw;
  for (int k = 0; k < 60; ++k) {
    sensor::SensorFrame f;
    f.tick = k;
    for (double& v : f.values) v = 2000.0 + n(rng) + (k > 20 ? 3.0 * k : 0.0);
    raw.push_back(f);
  }
  auto ground = [&](double shift) {
    std::vector<sensor::SensorFrame> shifted = raw;
    for (auto& f : shifted) {
      for (double& v : f.values) v += shift;
    }
    const auto b = sensor::capture_baseline(std::span(shifted).first(20), std::vector<double>(20, 0.0));
    std::vector<sensor::SensorFrame> g;
    for (const auto& f : shifted) g.push_back(sensor::ground_frame(f, b));
    return g;
  };
  const auto a = ground(0.0);
  const auto b = ground(713.0);
  for (int k = 1; k < 60; ++k) {
    const auto fa = extract_features(a[k - 1], a[k]);
    const auto fb = extract_features(b[k - 1], b[k]);
    for (int i = 0; i < kFeatureDim; ++i) ASSERT_NEAR(fa.values[i], fb.values[i], 1e-9);
  }
}

TEST(Standardizer, RoundTripAndZeroVariance) {
  auto data = clusters(3, 50);
  for (auto& s : data) s.features.values[40] = 7.0;
  const auto st = Standardizer::fit(data);
  EXPECT_EQ(st.stddev[40], 1.0);
  for (const auto& s : data) {
    const auto back = st.invert(st.apply(s.features.values));
    for (int i = 0; i < kFeatureDim; ++i) ASSERT_NEAR(back[i], s.features.values[i], 1e-12);
  }
  EXPECT_THROW(Standardizer::fit(std::vector<LabeledSample>{}), Error);
}

TEST(Training, SeparableClustersLinear) {
  const auto data = clusters(1, 60);
  const auto clf = train(data, TrainConfig{});
  EXPECT_EQ(accuracy(clf, data), 1.0);
  EXPECT_EQ(clf.kind(), ModelKind::Linear);
}

TEST(Training, SeparableClustersKnn) {
  const auto data = clusters(1, 60);
  TrainConfig c;
  c.kind = ModelKind::Knn;
  const auto clf = train(data, c);
  EXPECT_EQ(accuracy(clf, data), 1.0);
  EXPECT_EQ(accuracy(clf, clusters(2, 20)), 1.0);
}

TEST(Training, ClusterCentreGetsItsClass) {
  const auto data = clusters(1, 60);
  const auto clf = train(data, TrainConfig{});
  for (int c = 0; c < kNumClasses; ++c) {
    FeatureValues x{};
    x[c] = 5.0;
    x[10 + c] = -3.0;
    EXPECT_EQ(clf.predict(x), class_from_index(c));
  }
}

TEST(Training, SeededRunsIdentical) {
  const auto data = clusters(5, 80);
  const auto a = train(data, TrainConfig{});
  const auto b = train(data, TrainConfig{});
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(Training, DuplicationInvariant) {
  const auto data = clusters(6, 40);
  auto doubled = data;
  doubled.insert(doubled.end(), data.begin(), data.end());
  const auto a = train(data, full_batch());
  const auto b = train(doubled, full_batch());
  for (int c = 0; c < kNumClasses; ++c) {
    for (int k = 0; k <= kFeatureDim; ++k) EXPECT_NEAR(a.weights()[c][k], b.weights()[c][k], 1e-9);
  }
}

TEST(Training, MissingClassIsNamed) {
  auto data = clusters(1, 10);
  std::erase_if(data, [](const LabeledSample& s) { return s.label == ContactClass::Slip; });
  try {
    train(data, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingClass);
    EXPECT_NE(std::string(e.what()).find("slip"), std::string::npos);
  }
}

TEST(Classifier, TieGoesToSlip) {
  EXPECT_EQ(argmax_class({1.0, 1.0, 0.0}), ContactClass::Slip);
  EXPECT_EQ(argmax_class({0.0, 2.0, 2.0}), ContactClass::Contact);
  EXPECT_EQ(argmax_class({0.0, 0.0, 0.0}), ContactClass::Slip);
  Standardizer s;
  s.stddev.fill(1.0);
  const auto clf = Classifier::linear(s, Classifier::Weights{});
  EXPECT_EQ(clf.predict(FeatureValues{}), ContactClass::Slip);
}

TEST(Classifier, ScalingWeightsKeepsArgmax) {
  const auto data = clusters(9, 30);
  auto clf = train(data, TrainConfig{});
  std::vector<ContactClass> before;
  for (const auto& s : data) before.push_back(clf.predict(s.features));
  for (auto& row : clf.mutable_weights()) {
    for (double& w : row) w *= 2.0;
  }
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_EQ(clf.predict(data[i].features), before[i]);
}

TEST(Classifier, DimensionMismatch) {
  const auto clf = train(clusters(1, 10), TrainConfig{});
  std::vector<double> wrong(47, 0.0);
  try {
    clf.predict(wrong);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Classifier, JsonRoundTrip) {
  const auto data = clusters(2, 30);
  for (auto kind : {ModelKind::Linear, ModelKind::Knn}) {
    TrainConfig c;
    c.kind = kind;
    const auto clf = train(data, c);
    const auto back = Classifier::from_json(nlohmann::json::parse(clf.to_json().dump()));
    EXPECT_EQ(back.to_json().dump(), clf.to_json().dump());
    for (const auto& s : data) EXPECT_EQ(back.predict(s.features), clf.predict(s.features));
  }
  auto j = nlohmann::json::parse(train(data, TrainConfig{}).to_json().dump());
  j["version"] = 99;
  EXPECT_THROW(Classifier::from_json(j), Error);
  EXPECT_THROW(Classifier::from_json(nlohmann::json::object()), Error);
}

TEST(Dataset, SampleJsonRoundTrip) {
  const auto data = clusters(4, 3);
  for (const auto& s : data) {
    const auto back = sample_from_json(nlohmann::json::parse(sample_to_json(s).dump()));
    EXPECT_EQ(back.features.values, s.features.values);
    EXPECT_EQ(back.label, s.label);
    EXPECT_EQ(back.trial_id, s.trial_id);
    EXPECT_EQ(back.features.tick, s.features.tick);
  }
  EXPECT_THROW(sample_from_json(nlohmann::json{{"trial_id", 1}}), Error);
}

namespace {

// One finger's samples with slip runs of the given lengths separated by contact.
std::vector<LabeledSample> run_sequence(const std::vector<int>& slip_runs, int gap) {
  std::vector<LabeledSample> out;
  std::int64_t tick = 1;
  for (int len : slip_runs) {
    for (int k = 0; k < gap; ++k) {
      LabeledSample s;
      s.features.tick = tick++;
      s.label = ContactClass::Contact;
      out.push_back(s);
    }
    for (int k = 0; k < len; ++k) {
      LabeledSample s;
      s.features.tick = tick++;
      s.label = ContactClass::Slip;
      out.push_back(s);
    }
  }
  for (int k = 0; k < gap; ++k) {
    LabeledSample s;
    s.features.tick = tick++;
    s.label = ContactClass::NoContact;
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Evaluate, OraclePredictor) {
  const auto data = run_sequence({15, 30, 12}, 25);
  const auto r = evaluate(data, [](const LabeledSample& s) { return s.label; });
  EXPECT_EQ(r.balanced_accuracy, 1.0);
  ASSERT_EQ(r.lead_times.size(), 3u);
  for (int l : r.lead_times) EXPECT_GE(l, kDefaultHorizon);
}

TEST(Evaluate, ConstantContactOnBalancedData) {
  std::vector<LabeledSample> data;
  for (int i = 0; i < 300; ++i) {
    LabeledSample s;
    s.trial_id = i;
    s.label = class_from_index(i % 3);
    data.push_back(s);
  }
  const auto r = evaluate(data, [](const LabeledSample&) { return ContactClass::Contact; });
  EXPECT_NEAR(r.balanced_accuracy, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.accuracy, 1.0 / 3.0, 1e-15);
  for (int c = 0; c < kNumClasses; ++c) EXPECT_EQ(r.count(class_from_index(c)), 100);
}

TEST(Evaluate, LeadTimeDefinition) {
  // Onset labels at feature ticks 26..40 -> onset label tick 26 + h.
  const auto data = run_sequence({15}, 25);
  const std::int64_t onset = 26 + kDefaultHorizon;
  for (std::int64_t u : {onset, onset - 3, onset - 7, onset - 12}) {
    const auto r = evaluate(data, [&](const LabeledSample& s) {
      return s.features.tick >= u && s.features.tick <= onset ? ContactClass::Slip : ContactClass::Contact;
    });
    ASSERT_EQ(r.lead_times.size(), 1u);
    EXPECT_EQ(r.lead_times[0], onset - u);
  }
  const auto missed = evaluate(data, [](const LabeledSample&) { return ContactClass::Contact; });
  EXPECT_EQ(missed.lead_times, std::vector<int>{-1});
  EXPECT_EQ(missed.fraction_with_lead_at_least(5), 0.0);
}

TEST(Evaluate, ConfusionRowsMatchCounts) {
  const auto data = clusters(3, 40);
  const auto clf = train(data, TrainConfig{});
  const auto r = evaluate(clf, data);
  for (int c = 0; c < kNumClasses; ++c) {
    const auto n = std::count_if(data.begin(), data.end(), [&](const auto& s) { return class_index(s.label) == c; });
    EXPECT_EQ(r.count(class_from_index(c)), n);
  }
  EXPECT_THROW(evaluate(std::vector<LabeledSample>{}, [](const LabeledSample& s) { return s.label; }), Error);
}

TEST(Evaluate, MedianLead) {
  EvalReport r;
  r.lead_times = {3, 9, 5, -1};
  EXPECT_EQ(r.median_lead(), 4.0);
  EXPECT_EQ(r.fraction_with_lead_at_least(5), 0.5);
}
