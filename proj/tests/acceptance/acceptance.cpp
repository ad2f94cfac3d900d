// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gripsim/harness/experiments.hpp"

using namespace gripsim;
using namespace gripsim::harness;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s  %-34s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const double kG = 9.81;

Outcome integrator_laws() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  int bad = 0;
  for (int run = 0; run < 500; ++run) {
    const double a = 0.01 + 0.98 * u(rng);
    double y = u(rng);
    for (int k = 0; k < 200; ++k) {
      y = control::update_integrator(y, coin(rng) ? 1.0 : 0.0, a);
      bad += (y < 0.0 || y > 1.0) ? 1 : 0;
    }
    bad += control::update_integrator(0.0, 0.0, a) != 0.0;
    bad += control::update_integrator(1.0, 1.0, a) != 1.0;
  }
  double y = 1.0;
  for (int k = 1; k <= 60; ++k) {
    y = control::update_integrator(y, 0.0, 0.5);
    bad += y != std::ldexp(1.0, -k);
  }
  y = 0.5;
  double oracle = 0.5;
  for (int k = 0; k < 200; ++k) {
    y = control::update_integrator(y, 0.0, 0.95);
    oracle *= 0.95;
    bad += y != oracle;
  }
  for (int run = 0; run < 200; ++run) {
    control::ControllerState s;
    s.seen_stable_period = true;
    std::optional<ContactClass> prev;
    std::optional<double> first;
    for (int k = 0; k < 200; ++k) {
      const auto c = class_from_index(static_cast<int>(rng() % 3));
      s = control::update_y_min(s, prev, c, u(rng));
      if (s.y_min && !first) first = s.y_min;
      if (first) bad += *s.y_min != *first;
      prev = c;
    }
  }
  return {bad == 0, fmt("%d violations", bad)};
}

Outcome minimum_force(const SimConfig& cfg, std::shared_ptr<const slip::Classifier> clf) {
  const auto disk = pinch_disk();
  const double fmin = disk.mass * kG / (2.0 * disk.friction);
  GraspExperiment e;
  e.objects = {disk};
  e.fingers = {2};
  e.trials = 5;
  e.duration = 10.0;
  const auto rs = run_grasp_experiment(cfg, clf, e, 11);
  int ok = 0;
  std::string ratios;
  for (const auto& r : rs) {
    const double ratio = r.steady_normal_force / fmin;
    ok += (r.stable && ratio >= 1.0 && ratio <= 1.6) ? 1 : 0;
    ratios += fmt(" %.2f", ratio);
  }
  return {ok >= 4, fmt("%d/5 in [1.0,1.6]x of %.3f N; ratios%s", ok, fmin, ratios.c_str())};
}

Outcome multi_finger(const SimConfig& cfg, std::shared_ptr<const slip::Classifier> clf) {
  GraspExperiment e;  // generated objects, 2 and 3 fingers, 5 x 10 s
  auto rs = run_grasp_experiment(cfg, clf, e, 12);
  int stable = 0;
  for (const auto& r : rs) stable += r.stable ? 1 : 0;
  const double rate = static_cast<double>(stable) / rs.size();
  return {rate >= 0.9, fmt("%d/%zu stable (%.3f)", stable, rs.size(), rate)};
}

Outcome light_vs_heavy(const SimConfig& cfg, std::shared_ptr<const slip::Classifier> clf) {
  const auto objects = generate_test_objects(kTestObjectSeed);
  const auto [light, heavy] = std::minmax_element(objects.begin(), objects.end(),
                                                  [](const auto& a, const auto& b) { return a.mass < b.mass; });
  int ok = 0;
  std::string pairs;
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    const auto a = run_grasp_trial(cfg, *light, 2, clf, derive_seed(13, s, 0));
    const auto b = run_grasp_trial(cfg, *heavy, 2, clf, derive_seed(13, s, 1));
    ok += a.steady_normal_force < b.steady_normal_force ? 1 : 0;
    pairs += fmt(" %.2f<%.2f", a.steady_normal_force, b.steady_normal_force);
  }
  return {ok == seeds, fmt("%d/%d seeds ordered (%.2f vs %.2f kg):%s", ok, seeds, light->mass, heavy->mass,
                           pairs.c_str())};
}

Outcome perturbation(const SimConfig& cfg, std::shared_ptr<const slip::Classifier> clf) {
  PerturbationExperiment e;
  const auto rs = run_perturbation_experiment(cfg, clf, e, 14);
  int pass = 0;
  int drops = 0;
  std::string per;
  for (const auto& r : rs) {
    const auto v = judge_perturbation(r, cfg.perturbation);
    pass += v.pass() ? 1 : 0;
    drops += v.no_drop ? 0 : 1;
    per += fmt(" [rise %d/%d, differ %d/%d]", v.pulses_with_rise, v.pulses, v.differing_pairs, v.repeated_pairs);
  }
  return {pass == static_cast<int>(rs.size()),
          fmt("%d/%zu trials pass, %d drops;%s", pass, rs.size(), drops, per.c_str())};
}

Outcome master_slave(const SimConfig& cfg, std::shared_ptr<const slip::Classifier> clf) {
  MasterSlaveExperiment e;
  const auto rs = run_master_slave_experiment(cfg, clf, e, 15);
  int ok = 0;
  double worst = 0.0;
  for (const auto& r : rs) {
    ok += (r.stable && r.max_displacement < kMaxMasterSlaveDisplacement) ? 1 : 0;
    worst = std::max(worst, r.max_displacement);
  }
  return {ok == static_cast<int>(rs.size()), fmt("%d/%zu held, max displacement %.4f m", ok, rs.size(), worst)};
}

Outcome labeler() {
  const slip::LabelThresholds t;
  const double fast = 3.0 * t.movement * t.tick_seconds;
  int bad = 0;
  // Trace 1: approach, press, slide, press, release.
  {
    std::vector<double> p(400);
    std::vector<Vec2> x(400);
    double pos = 0.0;
    std::vector<ContactClass> expected(400, ContactClass::Contact);
    for (int k = 0; k < 400; ++k) {
      p[k] = (k >= 100 && k < 350) ? 50.0 : 0.0;
      if (k >= 200 && k <= 300) pos += fast;
      x[k] = {0.0, pos};
      if (k < 100 || k >= 350) expected[k] = ContactClass::NoContact;
      if (k >= 200 && k <= 300) expected[k] = ContactClass::Slip;
    }
    bad += slip::auto_label(p, x, t) != expected;
  }
  // Trace 2: thresholds are strict.
  {
    const std::vector<double> p{t.contact, t.contact + 1e-9, 20.0, 20.0, 20.0};
    const double at = t.movement * t.tick_seconds;
    const std::vector<Vec2> x{{0, 0}, {0, 0}, {at * 0.5, 0}, {at * 0.5 + at * 2.0, 0}, {at * 2.5, 0}};
    const std::vector<ContactClass> expected{ContactClass::NoContact, ContactClass::Contact, ContactClass::Contact,
                                             ContactClass::Slip, ContactClass::Contact};
    bad += slip::auto_label(p, x, t) != expected;
  }
  return {bad == 0, fmt("%d trace mismatches", bad)};
}

Outcome classifier(const SimConfig& cfg, const CollectionResult& data, std::shared_ptr<const slip::Classifier>& out) {
  const auto samples = slip::build_dataset(data.records, cfg.horizon);
  const auto split = split_by_trial(samples, cfg.holdout, cfg.split_seed);
  auto training = cfg.training;
  training.seed = 1;
  auto clf = std::make_shared<const slip::Classifier>(slip::train(split.train, training));
  const auto r = slip::evaluate(*clf, split.test, cfg.horizon);
  out = clf;
  const double frac = r.fraction_with_lead_at_least(5);
  const bool counts = data.trials.size() == 108 && data.records.size() == 324 && data.failed_trials() == 0;
  const bool pass = counts && r.balanced_accuracy >= 0.85 && frac >= 0.70;
  return {pass, fmt("%zu trials, %zu records; held-out bacc %.3f; lead>=5 on %.3f of %zu onsets (median %.1f)",
                    data.trials.size(), data.records.size(), r.balanced_accuracy, frac, r.lead_times.size(),
                    r.median_lead())};
}

bool same_commands(const TrialResult& a, const TrialResult& b) {
  if (a.ticks.size() != b.ticks.size()) return false;
  for (std::size_t i = 0; i < a.ticks.size(); ++i) {
    const auto& x = a.ticks[i];
    const auto& y = b.ticks[i];
    if (x.pose.x != y.pose.x || x.pose.y != y.pose.y || x.pose.theta != y.pose.theta) return false;
    for (std::size_t k = 0; k < x.fingers.size(); ++k) {
      if (x.fingers[k].command != y.fingers[k].command || x.fingers[k].control.y != y.fingers[k].control.y) {
        return false;
      }
    }
  }
  return true;
}

Outcome independence(const SimConfig& cfg, std::shared_ptr<const slip::Classifier> clf,
                     const CollectionResult& data) {
  int bad = 0;
  TrialOptions o;
  o.duration = 10.0;
  o.schedule.push_back({3.0, 0.3, physics::Wrench{1.5, -1.0, 0.0}});
  const auto base = run_trial(cfg, heavy_box(), 3, clf, 16, o);
  std::vector<int> order{0, 1, 2};
  while (std::next_permutation(order.begin(), order.end())) {
    auto p = o;
    p.update_order = order;
    bad += !same_commands(base, run_trial(cfg, heavy_box(), 3, clf, 16, p));
  }
  bad += !same_commands(base, run_trial(cfg, heavy_box(), 3, clf, 16, o));

  // Collection and training twice from the same seeds.
  const auto again = collect_training_data(cfg);
  const auto a = slip::build_dataset(data.records, cfg.horizon);
  const auto b = slip::build_dataset(again.records, cfg.horizon);
  bool same_data = a.size() == b.size();
  for (std::size_t i = 0; same_data && i < a.size(); ++i) {
    same_data = a[i].features.values == b[i].features.values && a[i].label == b[i].label;
  }
  bad += !same_data;
  auto training = cfg.training;
  training.seed = 1;
  const auto split = split_by_trial(b, cfg.holdout, cfg.split_seed);
  bad += slip::train(split.train, training).to_json().dump() != clf->to_json().dump();
  return {bad == 0, fmt("%d mismatches over 6 update orders, repeat trial, collection and training", bad)};
}

}  // namespace

int main() {
  SimConfig cfg;
  std::printf("gripsim acceptance\n");

  criterion("integrator laws", integrator_laws);
  criterion("labeler exactness", labeler);

  const auto data = collect_training_data(cfg);
  std::shared_ptr<const slip::Classifier> clf;
  criterion("classifier quality", [&] { return classifier(cfg, data, clf); });
  if (!clf) {
    std::printf("no classifier; remaining criteria skipped\n");
    return 1;
  }

  criterion("minimum-force convergence", [&] { return minimum_force(cfg, clf); });
  criterion("multi-finger stability", [&] { return multi_finger(cfg, clf); });
  criterion("light-vs-heavy ordering", [&] { return light_vs_heavy(cfg, clf); });
  criterion("perturbation recovery", [&] { return perturbation(cfg, clf); });
  criterion("master-slave re-stabilization", [&] { return master_slave(cfg, clf); });
  criterion("independence", [&] { return independence(cfg, clf, data); });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
