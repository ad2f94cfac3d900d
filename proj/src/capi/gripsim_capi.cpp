#include "gripsim/gripsim.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "gripsim/harness/experiments.hpp"
#include "gripsim/harness/report.hpp"
#include "gripsim/harness/serve.hpp"
#include "gripsim/harness/session.hpp"

using namespace gripsim;
using namespace gripsim::harness;
using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

struct gs_config {
  SimConfig value;
};

struct gs_model {
  std::shared_ptr<const slip::Classifier> value;
};

struct gs_session {
  std::unique_ptr<Session> value;
};

namespace {

thread_local std::string last_error;

gs_status to_status(ErrorCode c) { return static_cast<gs_status>(static_cast<int>(c)); }

template <class F>
gs_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return GS_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GS_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GS_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void give(char** out, const ordered_json& j) {
  if (out != nullptr) *out = dup(j.dump(2));
}

json parse_options(const char* options) {
  if (options == nullptr || *options == '\0') return json::object();
  try {
    json j = json::parse(options);
    if (!j.is_object()) fail(ErrorCode::Parse, "options must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("malformed options: ") + e.what());
  }
}

template <class T>
T option(const json& o, const char* key, T fallback) {
  auto it = o.find(key);
  if (it == o.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("option '") + key + "': " + e.what());
  }
}

physics::ObjectSpec object_option(const json& j) {
  if (j.is_string()) return named_object(j.get<std::string>());
  return object_from_json(j);
}

void check_keys(const json& o, std::initializer_list<const char*> known) {
  for (auto it = o.begin(); it != o.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) fail(ErrorCode::Parse, "unknown option '" + it.key() + "'");
  }
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create '" + dir + "': " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write '" + p.string() + "'");
  return out;
}

std::vector<slip::LabeledSample> read_dataset(const std::string& dir) {
  const fs::path p = fs::path(dir) / "dataset.jsonl";
  std::ifstream in(p);
  if (!in) fail(ErrorCode::Io, "cannot open '" + p.string() + "'");
  std::vector<slip::LabeledSample> samples;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::Parse, p.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    samples.push_back(slip::sample_from_json(j));
  }
  if (samples.empty()) fail(ErrorCode::PreconditionFailed, "dataset '" + p.string() + "' is empty");
  return samples;
}

ordered_json label_counts(const std::vector<slip::LabeledSample>& samples) {
  std::array<std::int64_t, kNumClasses> counts{};
  for (const auto& s : samples) ++counts[class_index(s.label)];
  ordered_json j;
  for (int c = 0; c < kNumClasses; ++c) j[std::string(to_string(class_from_index(c)))] = counts[c];
  return j;
}

slip::Classifier train_split(const SimConfig& config, const std::vector<slip::LabeledSample>& samples,
                             std::uint64_t seed, slip::EvalReport* heldout) {
  auto split = split_by_trial(samples, config.holdout, config.split_seed);
  auto training = config.training;
  training.seed = seed;
  auto clf = slip::train(split.train, training);
  if (heldout != nullptr && !split.test.empty()) *heldout = slip::evaluate(clf, split.test, config.horizon);
  return clf;
}

void drop_traces(std::vector<TrialResult>& results, const json& o) {
  if (option(o, "traces", true)) return;
  for (auto& r : results) r.ticks.clear();
}

}  // namespace

extern "C" {

const char* gs_version(void) { return "1.0.0"; }

int gs_protocol_version(void) { return kProtocolVersion; }

const char* gs_status_name(gs_status status) {
  switch (status) {
    case GS_OK: return "ok";
    case GS_INVALID_ARGUMENT: return "invalid-argument";
    case GS_SIMULATION_DIVERGED: return "simulation-diverged";
    case GS_PRECONDITION_FAILED: return "precondition-failed";
    case GS_DIMENSION_MISMATCH: return "dimension-mismatch";
    case GS_MISSING_CLASS: return "missing-class";
    case GS_IO: return "io";
    case GS_PARSE: return "parse";
    case GS_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* gs_last_error(void) { return last_error.c_str(); }

void gs_string_free(char* s) { std::free(s); }

gs_status gs_config_default(gs_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new gs_config{};
  });
}

gs_status gs_config_load(const char* path, gs_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new gs_config{load_config(path)};
  });
}

gs_status gs_config_parse(const char* text, gs_config** out) {
  return guarded([&] {
    need(text, "json");
    need(out, "out");
    json j;
    try {
      j = json::parse(text, nullptr, true, true);
    } catch (const json::exception& e) {
      fail(ErrorCode::Parse, std::string("malformed config: ") + e.what());
    }
    *out = new gs_config{config_from_json(j)};
  });
}

gs_status gs_config_to_json(const gs_config* config, char** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    give(out, to_json(config->value));
  });
}

void gs_config_free(gs_config* config) { delete config; }

gs_status gs_collect(const gs_config* config, uint64_t seed, const char* out_dir, int write_sensor_log,
                     char** summary) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    SimConfig cfg = config->value;
    cfg.protocol.seed = seed;
    const auto result = collect_training_data(cfg);
    std::vector<std::string> warnings = result.warnings;
    const auto samples = slip::build_dataset(result.records, cfg.horizon, &warnings);

    make_dir(out_dir);
    {
      auto out = open_out(fs::path(out_dir) / "dataset.jsonl");
      for (const auto& s : samples) out << slip::sample_to_json(s).dump() << '\n';
    }
    if (write_sensor_log != 0) {
      auto out = open_out(fs::path(out_dir) / "sensor.jsonl");
      for (const auto& t : result.trials) {
        if (t.failed) continue;
        for (std::size_t k = 0; k < t.fingers.size(); ++k) {
          const auto& f = t.fingers[k];
          const std::size_t offset = f.raw.size() - f.grounded.size();
          for (std::size_t i = 0; i < f.raw.size(); ++i) {
            ordered_json j;
            j["trial_id"] = t.trial_id;
            j["finger_id"] = k;
            j["tick"] = f.raw[i].tick;
            j["raw"] = f.raw[i].values;
            j["grounded"] = i >= offset ? ordered_json(f.grounded[i - offset].values) : ordered_json(nullptr);
            j["label"] = i < f.labels.size() ? ordered_json(std::string(to_string(f.labels[i]))) : ordered_json(nullptr);
            out << j.dump() << '\n';
          }
        }
      }
    }
    ordered_json s;
    s["trials"] = result.trials.size();
    s["failed_trials"] = result.failed_trials();
    s["records"] = result.records.size();
    s["samples"] = samples.size();
    s["labels"] = label_counts(samples);
    s["horizon"] = cfg.horizon;
    s["seed"] = seed;
    s["warnings"] = warnings;
    ordered_json trials = ordered_json::array();
    for (const auto& t : result.trials) {
      trials.push_back({{"trial_id", t.trial_id},
                        {"object", t.object_name},
                        {"target_pressure", t.target_pressure},
                        {"survey_speed", t.survey_speed},
                        {"failed", t.failed}});
    }
    ordered_json file = s;
    file["trial_list"] = std::move(trials);
    open_out(fs::path(out_dir) / "collection.json") << file.dump(2) << '\n';
    give(summary, s);
  });
}

gs_status gs_train(const gs_config* config, const char* data_dir, uint64_t seed, const char* model_path,
                   char** summary) {
  return guarded([&] {
    need(config, "config");
    need(data_dir, "data_dir");
    need(model_path, "model_path");
    const auto samples = read_dataset(data_dir);
    slip::EvalReport heldout;
    const auto clf = train_split(config->value, samples, seed, &heldout);
    const fs::path path(model_path);
    if (path.has_parent_path()) make_dir(path.parent_path().string());
    open_out(path) << clf.to_json().dump(2) << '\n';
    ordered_json s;
    s["model"] = model_path;
    s["kind"] = std::string(slip::to_string(clf.kind()));
    s["samples"] = samples.size();
    s["seed"] = seed;
    s["heldout"] = slip::to_json(heldout);
    give(summary, s);
  });
}

gs_status gs_model_load(const char* path, gs_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, std::string("cannot open model '") + path + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      fail(ErrorCode::Parse, std::string("model '") + path + "': " + e.what());
    }
    *out = new gs_model{std::make_shared<const slip::Classifier>(slip::Classifier::from_json(j))};
  });
}

gs_status gs_model_train_default(const gs_config* config, uint64_t seed, gs_model** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    const auto& cfg = config->value;
    const auto result = collect_training_data(cfg);
    const auto samples = slip::build_dataset(result.records, cfg.horizon);
    *out = new gs_model{std::make_shared<const slip::Classifier>(train_split(cfg, samples, seed, nullptr))};
  });
}

gs_status gs_model_save(const gs_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    open_out(path) << model->value->to_json().dump(2) << '\n';
  });
}

void gs_model_free(gs_model* model) { delete model; }

gs_status gs_eval(const gs_config* config, const gs_model* model, const char* data_dir, const char* split,
                  const char* out_dir, char** summary) {
  return guarded([&] {
    need(config, "config");
    need(model, "model");
    need(data_dir, "data_dir");
    const std::string which = split == nullptr ? "heldout" : split;
    if (which != "heldout" && which != "all") fail(ErrorCode::InvalidArgument, "split must be 'heldout' or 'all'");
    const auto samples = read_dataset(data_dir);
    const auto& cfg = config->value;
    std::vector<slip::LabeledSample> chosen =
        which == "all" ? samples : split_by_trial(samples, cfg.holdout, cfg.split_seed).test;
    if (chosen.empty()) fail(ErrorCode::PreconditionFailed, "evaluation split is empty");
    const auto report = slip::evaluate(*model->value, chosen, cfg.horizon);
    ordered_json s = slip::to_json(report);
    s["split"] = which;
    s["samples"] = chosen.size();
    if (out_dir != nullptr) {
      make_dir(out_dir);
      open_out(fs::path(out_dir) / "eval.json") << s.dump(2) << '\n';
    }
    give(summary, s);
  });
}

gs_status gs_grasp(const gs_config* config, const gs_model* model, const char* options, uint64_t seed,
                   const char* out_dir, char** summary) {
  return guarded([&] {
    need(config, "config");
    need(model, "model");
    need(out_dir, "out_dir");
    const json o = parse_options(options);
    check_keys(o, {"objects", "fingers", "trials", "duration", "traces"});
    GraspExperiment ex;
    if (auto it = o.find("objects"); it != o.end()) {
      if (!it->is_array()) fail(ErrorCode::Parse, "option 'objects' must be an array");
      for (const auto& j : *it) ex.objects.push_back(object_option(j));
    }
    ex.fingers = option(o, "fingers", ex.fingers);
    ex.trials = option(o, "trials", ex.trials);
    ex.duration = option(o, "duration", ex.duration);
    auto results = run_grasp_experiment(config->value, model->value, ex, seed);
    drop_traces(results, o);
    give(summary, export_report(results, out_dir));
  });
}

gs_status gs_perturb(const gs_config* config, const gs_model* model, const char* options, uint64_t seed,
                     const char* out_dir, char** summary) {
  return guarded([&] {
    need(config, "config");
    need(model, "model");
    need(out_dir, "out_dir");
    const json o = parse_options(options);
    check_keys(o, {"object", "fingers", "trials", "traces"});
    PerturbationExperiment ex;
    if (auto it = o.find("object"); it != o.end()) ex.object = object_option(*it);
    ex.fingers = option(o, "fingers", ex.fingers);
    ex.trials = option(o, "trials", ex.trials);
    auto results = run_perturbation_experiment(config->value, model->value, ex, seed);
    ordered_json verdicts = ordered_json::array();
    for (const auto& r : results) {
      const auto v = judge_perturbation(r, config->value.perturbation);
      verdicts.push_back({{"trial_id", r.trial_id},
                          {"no_drop", v.no_drop},
                          {"pulses", v.pulses},
                          {"pulses_with_rise", v.pulses_with_rise},
                          {"differing_repeat_pairs", v.differing_pairs},
                          {"pass", v.pass()}});
    }
    drop_traces(results, o);
    auto s = export_report(results, out_dir);
    s["perturbation"] = verdicts;
    open_out(fs::path(out_dir) / "summary.json") << s.dump(2) << '\n';
    give(summary, s);
  });
}

gs_status gs_master_slave(const gs_config* config, const gs_model* model, const char* options, uint64_t seed,
                          const char* out_dir, char** summary) {
  return guarded([&] {
    need(config, "config");
    need(model, "model");
    need(out_dir, "out_dir");
    const json o = parse_options(options);
    check_keys(o, {"object", "fingers", "trials", "duration", "traces"});
    MasterSlaveExperiment ex;
    if (auto it = o.find("object"); it != o.end()) ex.object = object_option(*it);
    ex.fingers = option(o, "fingers", ex.fingers);
    ex.trials = option(o, "trials", ex.trials);
    ex.duration = option(o, "duration", ex.duration);
    auto results = run_master_slave_experiment(config->value, model->value, ex, seed);
    drop_traces(results, o);
    auto s = export_report(results, out_dir);
    int within = 0;
    for (const auto& r : results) within += r.stable && r.max_displacement < kMaxMasterSlaveDisplacement ? 1 : 0;
    s["within_displacement_limit"] = within;
    open_out(fs::path(out_dir) / "summary.json") << s.dump(2) << '\n';
    give(summary, s);
  });
}

gs_status gs_session_create(const gs_config* config, const gs_model* model, const char* options, uint64_t seed,
                            gs_session** out) {
  return guarded([&] {
    need(config, "config");
    need(model, "model");
    need(out, "out");
    const json o = parse_options(options);
    check_keys(o, {"object", "fingers"});
    SessionOptions so;
    if (auto it = o.find("object"); it != o.end()) so.object = object_option(*it);
    so.fingers = option(o, "fingers", so.fingers);
    so.seed = seed;
    *out = new gs_session{std::make_unique<Session>(config->value, model->value, so)};
  });
}

gs_status gs_session_hello(const gs_session* session, char** out) {
  return guarded([&] {
    need(session, "session");
    need(out, "out");
    *out = dup(session->value->hello().dump());
  });
}

gs_status gs_session_submit(gs_session* session, const char* message, char** reply) {
  return guarded([&] {
    need(session, "session");
    need(message, "message");
    need(reply, "reply");
    *reply = dup(session->value->submit(message).dump());
  });
}

gs_status gs_session_advance(gs_session* session, int* stepped) {
  return guarded([&] {
    need(session, "session");
    const bool s = session->value->advance();
    if (stepped != nullptr) *stepped = s ? 1 : 0;
  });
}

gs_status gs_session_snapshot(const gs_session* session, char** out) {
  return guarded([&] {
    need(session, "session");
    need(out, "out");
    *out = dup(session->value->snapshot().dump());
  });
}

void gs_session_free(gs_session* session) { delete session; }

gs_status gs_serve(const gs_config* config, const gs_model* model, const char* options, uint64_t seed) {
  return guarded([&] {
    need(config, "config");
    need(model, "model");
    const json o = parse_options(options);
    check_keys(o, {"address", "port", "object", "fingers", "snapshot_rate", "realtime", "max_connections"});
    ServeOptions so;
    so.address = option(o, "address", so.address);
    so.port = option(o, "port", so.port);
    so.snapshot_rate = option(o, "snapshot_rate", so.snapshot_rate);
    so.realtime = option(o, "realtime", so.realtime);
    so.max_connections = option(o, "max_connections", so.max_connections);
    if (so.snapshot_rate <= 0.0) fail(ErrorCode::InvalidArgument, "snapshot rate must be > 0");
    SessionOptions session;
    if (auto it = o.find("object"); it != o.end()) session.object = object_option(*it);
    session.fingers = option(o, "fingers", session.fingers);
    session.seed = seed;
    const SimConfig cfg = config->value;
    const auto clf = model->value;
    SessionServer server(so, [cfg, clf, session] { return std::make_unique<Session>(cfg, clf, session); });
    std::printf("{\"event\":\"listening\",\"address\":\"%s\",\"port\":%u,\"protocol_version\":%d}\n",
                so.address.c_str(), static_cast<unsigned>(server.port()), kProtocolVersion);
    std::fflush(stdout);
    server.run();
  });
}

}  // extern "C"
