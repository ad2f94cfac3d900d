#include "gripsim/harness/experiments.hpp"

#include <charconv>
#include <cmath>
#include <string>

namespace gripsim::harness {

physics::ObjectSpec named_object(std::string_view name) {
  if (name == "pinch") return pinch_disk();
  if (name == "heavy-box") return heavy_box();
  constexpr std::string_view prefix = "generated:";
  if (name.starts_with(prefix)) {
    const auto digits = name.substr(prefix.size());
    int index = -1;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    const auto objects = generate_test_objects(kTestObjectSeed);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && index >= 0 &&
        index < static_cast<int>(objects.size())) {
      return objects[index];
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown object '" + std::string(name) + "'");
}

std::vector<TrialResult> run_grasp_experiment(const SimConfig& config, std::shared_ptr<const slip::Classifier> classifier,
                                              const GraspExperiment& experiment, std::uint64_t seed) {
  require(experiment.trials >= 1, ErrorCode::InvalidArgument, "need at least one trial");
  require(!experiment.fingers.empty(), ErrorCode::InvalidArgument, "need at least one finger count");
  const auto objects = experiment.objects.empty() ? generate_test_objects(kTestObjectSeed) : experiment.objects;
  std::vector<TrialResult> results;
  int id = 0;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (int n : experiment.fingers) {
      for (int rep = 0; rep < experiment.trials; ++rep) {
        auto r = run_grasp_trial(config, objects[i], n, classifier, derive_seed(seed, i, n, rep), experiment.duration);
        r.trial_id = id++;
        results.push_back(std::move(r));
      }
    }
  }
  return results;
}

std::vector<TrialResult> run_perturbation_experiment(const SimConfig& config,
                                                     std::shared_ptr<const slip::Classifier> classifier,
                                                     const PerturbationExperiment& experiment, std::uint64_t seed) {
  require(experiment.trials >= 1, ErrorCode::InvalidArgument, "need at least one trial");
  std::vector<TrialResult> results;
  for (int i = 0; i < experiment.trials; ++i) {
    const auto schedule = irregular_schedule(config.perturbation, derive_seed(seed, 1, i));
    auto r = run_perturbation_trial(config, experiment.object, experiment.fingers, classifier, derive_seed(seed, 2, i),
                                    schedule, config.perturbation.total);
    r.trial_id = i;
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<TrialResult> run_master_slave_experiment(const SimConfig& config,
                                                     std::shared_ptr<const slip::Classifier> classifier,
                                                     const MasterSlaveExperiment& experiment, std::uint64_t seed) {
  require(experiment.trials >= 1, ErrorCode::InvalidArgument, "need at least one trial");
  const auto script = experiment.script.empty()
                          ? retraction_script(experiment.fingers, 3.0, 0.05, 0.02, experiment.duration)
                          : experiment.script;
  std::vector<TrialResult> results;
  for (int i = 0; i < experiment.trials; ++i) {
    auto r = run_master_slave(config, experiment.object, experiment.fingers, classifier, derive_seed(seed, 3, i), script,
                              experiment.duration);
    r.trial_id = i;
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<double> force_shares(const std::vector<double>& forces) {
  double total = 0.0;
  for (double f : forces) total += f;
  std::vector<double> shares(forces.size(), 0.0);
  if (total <= 0.0) return shares;
  for (std::size_t k = 0; k < forces.size(); ++k) shares[k] = forces[k] / total;
  return shares;
}

bool distributions_differ(const std::vector<double>& a, const std::vector<double>& b, double tolerance) {
  require(a.size() == b.size(), ErrorCode::DimensionMismatch, "force distributions differ in finger count");
  const auto sa = force_shares(a);
  const auto sb = force_shares(b);
  double l1 = 0.0;
  for (std::size_t k = 0; k < sa.size(); ++k) l1 += std::abs(sa[k] - sb[k]);
  return l1 > tolerance;
}

PerturbationVerdict judge_perturbation(const TrialResult& result, const PerturbationConfig& config) {
  PerturbationVerdict v;
  v.no_drop = result.valid && result.stable;
  const auto pulses = analyze_pulses(result, config.response_window);
  v.pulses = static_cast<int>(pulses.size());
  for (const auto& p : pulses) v.pulses_with_rise += p.integrator_rise ? 1 : 0;
  const auto& rep = config.repeated;
  for (std::size_t i = 0; i < rep.size(); ++i) {
    for (std::size_t j = i + 1; j < rep.size(); ++j) {
      if (rep[i] >= v.pulses || rep[j] >= v.pulses) continue;
      ++v.repeated_pairs;
      if (distributions_differ(pulses[rep[i]].settled_forces, pulses[rep[j]].settled_forces)) ++v.differing_pairs;
    }
  }
  return v;
}

}  // namespace gripsim::harness
