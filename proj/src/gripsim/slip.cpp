#include "gripsim/slip.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace gripsim::slip {

TickFeatures tick_features(const sensor::SensorFrame& grounded) {
  TickFeatures x{};
  const auto pac = grounded.p_ac();
  const auto [lo, hi] = std::minmax_element(pac.begin(), pac.end());
  x[0] = grounded.p_dc();
  x[1] = std::accumulate(pac.begin(), pac.end(), 0.0) / static_cast<double>(pac.size());
  x[2] = *hi - *lo;
  const auto e = grounded.electrodes();
  std::copy(e.begin(), e.end(), x.begin() + 3);
  x[3 + sensor::kElectrodes] = grounded.t_dc();
  x[4 + sensor::kElectrodes] = grounded.t_ac();
  return x;
}

FeatureVector extract_features(const sensor::SensorFrame& previous, const sensor::SensorFrame& current) {
  if (current.tick != previous.tick + 1) {
    fail(ErrorCode::PreconditionFailed, "feature window needs consecutive ticks, got " +
                                            std::to_string(previous.tick) + " and " + std::to_string(current.tick));
  }
  const TickFeatures prev = tick_features(previous);
  const TickFeatures cur = tick_features(current);
  FeatureVector f;
  f.tick = current.tick;
  for (int i = 0; i < kTickFeatures; ++i) {
    f.values[i] = cur[i];
    f.values[kTickFeatures + i] = cur[i] - prev[i];
  }
  return f;
}

std::vector<ContactClass> auto_label(std::span<const double> p_dc, std::span<const Vec2> positions,
                                     const LabelThresholds& thresholds) {
  require(p_dc.size() == positions.size(), ErrorCode::InvalidArgument,
          "labeling needs a fingertip position for every tick");
  const std::size_t n = p_dc.size();
  std::vector<ContactClass> labels(n, ContactClass::NoContact);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(p_dc[k] > thresholds.contact)) continue;
    double speed = 0.0;
    if (k > 0) {
      speed = (positions[k] - positions[k - 1]).norm() / thresholds.tick_seconds;
    } else if (n > 1) {
      speed = (positions[1] - positions[0]).norm() / thresholds.tick_seconds;
    }
    labels[k] = speed > thresholds.movement ? ContactClass::Slip : ContactClass::Contact;
  }
  return labels;
}

std::vector<LabeledSample> build_dataset(std::span<const TrialRecord> trials, int horizon,
                                         std::vector<std::string>* warnings) {
  require(horizon >= 1, ErrorCode::InvalidArgument, "prediction horizon must be >= 1");
  std::vector<LabeledSample> out;
  for (const auto& trial : trials) {
    require(trial.grounded.size() == trial.labels.size(), ErrorCode::InvalidArgument,
            "trial record needs one label per frame");
    const auto n = static_cast<std::int64_t>(trial.grounded.size());
    if (n < horizon + 2) {
      if (warnings) {
        warnings->push_back("trial " + std::to_string(trial.trial_id) + " finger " +
                            std::to_string(trial.finger_id) + " has " + std::to_string(n) +
                            " ticks, fewer than horizon+2; skipped");
      }
      continue;
    }
    for (std::int64_t t = 1; t + horizon < n; ++t) {
      LabeledSample s;
      s.features = extract_features(trial.grounded[t - 1], trial.grounded[t]);
      s.label = trial.labels[t + horizon];
      s.trial_id = trial.trial_id;
      s.finger_id = trial.finger_id;
      out.push_back(s);
    }
  }
  return out;
}

Standardizer Standardizer::fit(std::span<const LabeledSample> samples) {
  require(!samples.empty(), ErrorCode::PreconditionFailed, "cannot standardize an empty dataset");
  Standardizer s;
  const double n = static_cast<double>(samples.size());
  for (const auto& x : samples) {
    for (int i = 0; i < kFeatureDim; ++i) s.mean[i] += x.features.values[i];
  }
  for (double& m : s.mean) m /= n;
  for (const auto& x : samples) {
    for (int i = 0; i < kFeatureDim; ++i) {
      const double d = x.features.values[i] - s.mean[i];
      s.stddev[i] += d * d;
    }
  }
  for (double& v : s.stddev) {
    v = std::sqrt(v / n);
    if (!(v > 1e-12) || !std::isfinite(v)) v = 1.0;
  }
  return s;
}

FeatureValues Standardizer::apply(const FeatureValues& x) const {
  FeatureValues z{};
  for (int i = 0; i < kFeatureDim; ++i) z[i] = (x[i] - mean[i]) / stddev[i];
  return z;
}

FeatureValues Standardizer::invert(const FeatureValues& z) const {
  FeatureValues x{};
  for (int i = 0; i < kFeatureDim; ++i) x[i] = z[i] * stddev[i] + mean[i];
  return x;
}

std::string_view to_string(ModelKind k) { return k == ModelKind::Linear ? "multinomial-linear" : "k-nearest-neighbor"; }

ModelKind parse_model_kind(std::string_view s) {
  if (s == "multinomial-linear" || s == "linear") return ModelKind::Linear;
  if (s == "k-nearest-neighbor" || s == "knn") return ModelKind::Knn;
  fail(ErrorCode::Parse, "unknown model kind '" + std::string(s) + "'");
}

ContactClass argmax_class(const std::array<double, kNumClasses>& scores) {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return class_from_index(best);
}

Classifier Classifier::linear(Standardizer standardizer, const Weights& weights) {
  Classifier c;
  c.kind_ = ModelKind::Linear;
  c.standardizer_ = standardizer;
  c.weights_ = weights;
  return c;
}

Classifier Classifier::knn(Standardizer standardizer, std::vector<FeatureValues> exemplars,
                           std::vector<ContactClass> labels, int k) {
  require(exemplars.size() == labels.size() && !exemplars.empty(), ErrorCode::InvalidArgument,
          "k-NN needs one label per exemplar");
  require(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
  Classifier c;
  c.kind_ = ModelKind::Knn;
  c.standardizer_ = standardizer;
  c.exemplars_ = std::move(exemplars);
  c.exemplar_labels_ = std::move(labels);
  c.k_ = k;
  return c;
}

std::array<double, kNumClasses> Classifier::scores(std::span<const double> features) const {
  if (features.size() != static_cast<std::size_t>(kFeatureDim)) {
    fail(ErrorCode::DimensionMismatch, "feature dimension " + std::to_string(features.size()) + " != " +
                                           std::to_string(kFeatureDim));
  }
  FeatureValues x{};
  std::copy(features.begin(), features.end(), x.begin());
  const FeatureValues z = standardizer_.apply(x);
  std::array<double, kNumClasses> s{};
  if (kind_ == ModelKind::Linear) {
    for (int c = 0; c < kNumClasses; ++c) {
      double acc = weights_[c][kFeatureDim];
      for (int i = 0; i < kFeatureDim; ++i) acc += weights_[c][i] * z[i];
      s[c] = acc;
    }
    return s;
  }
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(exemplars_.size());
  for (std::size_t j = 0; j < exemplars_.size(); ++j) {
    double d = 0.0;
    for (int i = 0; i < kFeatureDim; ++i) {
      const double diff = exemplars_[j][i] - z[i];
      d += diff * diff;
    }
    dist.emplace_back(d, j);
  }
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(k_), dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  for (std::size_t j = 0; j < k; ++j) s[class_index(exemplar_labels_[dist[j].second])] += 1.0;
  return s;
}

ContactClass Classifier::predict(std::span<const double> features) const { return argmax_class(scores(features)); }

namespace {

nlohmann::ordered_json array_json(std::span<const double> v) { return nlohmann::ordered_json(std::vector<double>(v.begin(), v.end())); }

template <std::size_t N>
std::array<double, N> array_from(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != N) fail(ErrorCode::Parse, std::string("model field '") + what + "' has wrong size");
  std::array<double, N> a{};
  for (std::size_t i = 0; i < N; ++i) a[i] = j[i].get<double>();
  return a;
}

}  // namespace

nlohmann::ordered_json Classifier::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "gripsim-slip-model";
  j["version"] = kFormatVersion;
  j["kind"] = std::string(to_string(kind_));
  j["feature_dim"] = kFeatureDim;
  j["class_order"] = {"slip", "contact", "no-contact"};
  j["standardization"] = {{"mean", array_json(standardizer_.mean)}, {"std", array_json(standardizer_.stddev)}};
  if (kind_ == ModelKind::Linear) {
    auto w = nlohmann::ordered_json::array();
    for (const auto& row : weights_) w.push_back(array_json(row));
    j["weights"] = w;
  } else {
    j["k"] = k_;
    auto ex = nlohmann::ordered_json::array();
    for (const auto& e : exemplars_) ex.push_back(array_json(e));
    j["exemplars"] = ex;
    auto labels = nlohmann::ordered_json::array();
    for (auto l : exemplar_labels_) labels.push_back(std::string(gripsim::to_string(l)));
    j["labels"] = labels;
  }
  return j;
}

Classifier Classifier::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "gripsim-slip-model") fail(ErrorCode::Parse, "not a slip model file");
    const int version = j.at("version").get<int>();
    if (version != kFormatVersion) fail(ErrorCode::Parse, "unsupported model version " + std::to_string(version));
    if (j.at("feature_dim").get<int>() != kFeatureDim) fail(ErrorCode::DimensionMismatch, "model feature dimension mismatch");
    const auto order = j.at("class_order").get<std::vector<std::string>>();
    if (order != std::vector<std::string>{"slip", "contact", "no-contact"}) fail(ErrorCode::Parse, "unexpected class order");
    Standardizer s;
    s.mean = array_from<kFeatureDim>(j.at("standardization").at("mean"), "mean");
    s.stddev = array_from<kFeatureDim>(j.at("standardization").at("std"), "std");
    const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    if (kind == ModelKind::Linear) {
      Weights w{};
      const auto& rows = j.at("weights");
      if (!rows.is_array() || rows.size() != kNumClasses) fail(ErrorCode::Parse, "model weights need 3 rows");
      for (int c = 0; c < kNumClasses; ++c) w[c] = array_from<kFeatureDim + 1>(rows[c], "weights");
      return linear(s, w);
    }
    std::vector<FeatureValues> ex;
    for (const auto& e : j.at("exemplars")) ex.push_back(array_from<kFeatureDim>(e, "exemplars"));
    std::vector<ContactClass> labels;
    for (const auto& l : j.at("labels")) labels.push_back(parse_contact_class(l.get<std::string>()));
    return knn(s, std::move(ex), std::move(labels), j.at("k").get<int>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("malformed model file: ") + e.what());
  }
}

namespace {

Classifier train_linear(std::span<const LabeledSample> data, const Standardizer& standardizer,
                        const std::array<double, kNumClasses>& class_weight, const TrainConfig& config) {
  constexpr int kCols = kFeatureDim + 1;
  const std::size_t n = data.size();
  std::vector<double> z(n * kCols);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FeatureValues zi = standardizer.apply(data[i].features.values);
    std::copy(zi.begin(), zi.end(), z.begin() + static_cast<std::ptrdiff_t>(i * kCols));
    z[i * kCols + kFeatureDim] = 1.0;
    y[i] = class_index(data[i].label);
  }

  Classifier::Weights w{};
  Classifier::Weights m{};
  Classifier::Weights v{};
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  const auto batches = static_cast<std::size_t>(std::max(1, config.batches_per_epoch));
  const std::size_t batch_size = (n + batches - 1) / batches;
  long step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (batches > 1) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t stop = std::min(n, start + batch_size);
      Classifier::Weights grad{};
      double total_weight = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = batches > 1 ? order[b] : b;
        const double* zi = &z[i * kCols];
        std::array<double, kNumClasses> logit{};
        for (int c = 0; c < kNumClasses; ++c) {
          double acc = 0.0;
          for (int k = 0; k < kCols; ++k) acc += w[c][k] * zi[k];
          logit[c] = acc;
        }
        const double mx = *std::max_element(logit.begin(), logit.end());
        double denom = 0.0;
        for (double& l : logit) {
          l = std::exp(l - mx);
          denom += l;
        }
        const double wi = class_weight[y[i]];
        total_weight += wi;
        for (int c = 0; c < kNumClasses; ++c) {
          const double g = wi * (logit[c] / denom - (c == y[i] ? 1.0 : 0.0));
          for (int k = 0; k < kCols; ++k) grad[c][k] += g * zi[k];
        }
      }
      ++step;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (int c = 0; c < kNumClasses; ++c) {
        for (int k = 0; k < kCols; ++k) {
          double g = grad[c][k] / total_weight;
          if (k < kFeatureDim) g += config.l2 * w[c][k];
          m[c][k] = beta1 * m[c][k] + (1.0 - beta1) * g;
          v[c][k] = beta2 * v[c][k] + (1.0 - beta2) * g * g;
          w[c][k] -= config.learning_rate * (m[c][k] / bc1) / (std::sqrt(v[c][k] / bc2) + eps);
        }
      }
    }
  }
  return Classifier::linear(standardizer, w);
}

Classifier train_knn(std::span<const LabeledSample> data, const Standardizer& standardizer, const TrainConfig& config) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (order.size() > config.knn_max_exemplars) {
    std::mt19937_64 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(config.knn_max_exemplars);
    std::sort(order.begin(), order.end());
  }
  std::vector<FeatureValues> ex;
  std::vector<ContactClass> labels;
  for (auto i : order) {
    ex.push_back(standardizer.apply(data[i].features.values));
    labels.push_back(data[i].label);
  }
  return Classifier::knn(standardizer, std::move(ex), std::move(labels), config.knn_k);
}

}  // namespace

Classifier train(std::span<const LabeledSample> dataset, const TrainConfig& config) {
  require(config.epochs >= 1 && config.learning_rate > 0.0 && config.l2 >= 0.0, ErrorCode::InvalidArgument,
          "invalid training configuration");
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& s : dataset) ++counts[class_index(s.label)];
  for (int c = 0; c < kNumClasses; ++c) {
    if (counts[c] == 0) {
      fail(ErrorCode::MissingClass,
           "training data contains no samples of class '" + std::string(to_string(class_from_index(c))) + "'");
    }
  }
  const Standardizer standardizer = Standardizer::fit(dataset);
  std::array<double, kNumClasses> class_weight{1.0, 1.0, 1.0};
  if (config.class_weighting) {
    for (int c = 0; c < kNumClasses; ++c) {
      class_weight[c] = static_cast<double>(dataset.size()) / (kNumClasses * static_cast<double>(counts[c]));
    }
  }
  if (config.kind == ModelKind::Knn) return train_knn(dataset, standardizer, config);
  return train_linear(dataset, standardizer, class_weight, config);
}

std::int64_t EvalReport::count(ContactClass truth) const {
  const auto& row = confusion[class_index(truth)];
  return std::accumulate(row.begin(), row.end(), std::int64_t{0});
}

double EvalReport::median_lead() const {
  if (lead_times.empty()) return 0.0;
  std::vector<int> v = lead_times;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double EvalReport::fraction_with_lead_at_least(int ticks) const {
  if (lead_times.empty()) return 0.0;
  const auto hits = std::count_if(lead_times.begin(), lead_times.end(), [&](int l) { return l >= ticks; });
  return static_cast<double>(hits) / static_cast<double>(lead_times.size());
}

EvalReport evaluate(std::span<const LabeledSample> samples, const Predictor& predictor, int horizon) {
  require(!samples.empty(), ErrorCode::PreconditionFailed, "evaluation needs a non-empty dataset");
  EvalReport r;
  std::map<std::pair<int, int>, std::vector<std::pair<std::int64_t, std::pair<ContactClass, ContactClass>>>> groups;
  for (const auto& s : samples) {
    const ContactClass p = predictor(s);
    ++r.confusion[class_index(s.label)][class_index(p)];
    groups[{s.trial_id, s.finger_id}].push_back({s.features.tick, {s.label, p}});
  }

  std::int64_t correct = 0;
  std::int64_t total = 0;
  double recall_sum = 0.0;
  int present = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    std::int64_t row = 0;
    std::int64_t col = 0;
    for (int k = 0; k < kNumClasses; ++k) {
      row += r.confusion[c][k];
      col += r.confusion[k][c];
    }
    correct += r.confusion[c][c];
    total += row;
    r.recall[c] = row > 0 ? static_cast<double>(r.confusion[c][c]) / static_cast<double>(row) : 0.0;
    r.precision[c] = col > 0 ? static_cast<double>(r.confusion[c][c]) / static_cast<double>(col) : 0.0;
    if (row > 0) {
      recall_sum += r.recall[c];
      ++present;
    }
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  r.balanced_accuracy = present > 0 ? recall_sum / present : 0.0;

  // Lead time: onset at label tick s = t + horizon; find the earliest feature
  // tick u <= s from which slip is predicted at every tick through s.
  for (auto& [key, seq] : groups) {
    std::sort(seq.begin(), seq.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::map<std::int64_t, ContactClass> pred_at;
    for (const auto& [tick, lp] : seq) pred_at[tick] = lp.second;
    for (std::size_t j = 1; j < seq.size(); ++j) {
      const bool consecutive = seq[j].first == seq[j - 1].first + 1;
      if (!consecutive || seq[j].second.first != ContactClass::Slip || seq[j - 1].second.first == ContactClass::Slip) {
        continue;
      }
      const std::int64_t onset = seq[j].first + horizon;
      std::int64_t t = std::min(onset, seq.back().first);
      auto it = pred_at.find(t);
      if (it == pred_at.end() || it->second != ContactClass::Slip) {
        r.lead_times.push_back(-1);
        continue;
      }
      std::int64_t u = t;
      while (true) {
        auto prev = pred_at.find(u - 1);
        if (prev == pred_at.end() || prev->second != ContactClass::Slip) break;
        --u;
      }
      r.lead_times.push_back(static_cast<int>(onset - u));
    }
  }
  return r;
}

EvalReport evaluate(const Classifier& classifier, std::span<const LabeledSample> samples, int horizon) {
  return evaluate(samples, [&](const LabeledSample& s) { return classifier.predict(s.features); }, horizon);
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["class_order"] = {"slip", "contact", "no-contact"};
  auto cm = nlohmann::ordered_json::array();
  for (const auto& row : r.confusion) cm.push_back(std::vector<std::int64_t>(row.begin(), row.end()));
  j["confusion"] = cm;
  j["precision"] = std::vector<double>(r.precision.begin(), r.precision.end());
  j["recall"] = std::vector<double>(r.recall.begin(), r.recall.end());
  j["accuracy"] = r.accuracy;
  j["balanced_accuracy"] = r.balanced_accuracy;
  j["onsets"] = r.lead_times.size();
  j["median_lead_ticks"] = r.median_lead();
  j["fraction_lead_ge_5"] = r.fraction_with_lead_at_least(5);
  j["lead_times"] = r.lead_times;
  return j;
}

nlohmann::ordered_json sample_to_json(const LabeledSample& s) {
  nlohmann::ordered_json j;
  j["trial_id"] = s.trial_id;
  j["finger_id"] = s.finger_id;
  j["tick"] = s.features.tick;
  j["features"] = std::vector<double>(s.features.values.begin(), s.features.values.end());
  j["label"] = std::string(to_string(s.label));
  return j;
}

LabeledSample sample_from_json(const nlohmann::json& j) {
  try {
    LabeledSample s;
    s.trial_id = j.at("trial_id").get<int>();
    s.finger_id = j.at("finger_id").get<int>();
    s.features.tick = j.at("tick").get<std::int64_t>();
    s.features.values = array_from<kFeatureDim>(j.at("features"), "features");
    s.label = parse_contact_class(j.at("label").get<std::string>());
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("malformed dataset record: ") + e.what());
  }
}

}  // namespace gripsim::slip
