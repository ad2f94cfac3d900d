#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gripsim/gripsim.h"

namespace {

struct Failure {
  gs_status status;
};

void check(gs_status s) {
  if (s != GS_OK) throw Failure{s};
}

// Owns a string handed out by the library.
struct Text {
  char* p = nullptr;
  ~Text() { gs_string_free(p); }
};

struct Config {
  gs_config* p = nullptr;
  ~Config() { gs_config_free(p); }
};

struct Model {
  gs_model* p = nullptr;
  ~Model() { gs_model_free(p); }
};

void print(const Text& t) {
  if (t.p != nullptr) std::printf("%s\n", t.p);
}

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
};

void common(CLI::App* app, Common& c, bool out_required = true) {
  app->add_option("--config", c.config, "JSON config file (defaults when omitted)")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Base seed");
  auto* o = app->add_option("--out", c.out, "Output directory");
  if (out_required) o->required();
}

void load(const Common& c, Config& cfg) {
  if (c.config.empty()) {
    check(gs_config_default(&cfg.p));
  } else {
    check(gs_config_load(c.config.c_str(), &cfg.p));
  }
}

void model_for(const std::string& path, const Config& cfg, std::uint64_t seed, Model& model) {
  if (!path.empty()) {
    check(gs_model_load(path.c_str(), &model.p));
    return;
  }
  std::fprintf(stderr, "no --model given; collecting and training the default classifier\n");
  check(gs_model_train_default(cfg.p, seed, &model.p));
}

nlohmann::json object_arg(const std::string& s) {
  // Inline JSON object or a name.
  if (!s.empty() && s.front() == '{') return nlohmann::json::parse(s);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tactile grasp simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gs_version()));

  Common c;
  std::string data, model_path, split = "heldout", address = "127.0.0.1";
  std::vector<std::string> objects;
  std::vector<int> fingers;
  int trials = -1;
  double duration = -1.0;
  bool no_traces = false, sensor_log = false, fast = false;
  int port = 8765, max_connections = 0;
  double snapshot_rate = 30.0;

  auto* collect = app.add_subcommand("collect", "Run the data collection protocol");
  common(collect, c);
  collect->add_flag("--sensor-log", sensor_log, "Also write raw and grounded sensor frames");

  auto* train = app.add_subcommand("train", "Train the slip classifier");
  common(train, c);
  train->add_option("--data", data, "Directory written by collect")->required();
  train->get_option("--out")->description("Model file to write");

  auto* eval = app.add_subcommand("eval", "Evaluate a model on a dataset");
  common(eval, c, false);
  eval->add_option("--model", model_path, "Model file")->required();
  eval->add_option("--data", data, "Directory written by collect")->required();
  eval->add_option("--split", split, "heldout or all")->check(CLI::IsMember({"heldout", "all"}));

  auto* grasp = app.add_subcommand("grasp", "Reactive grasp trials");
  common(grasp, c);
  grasp->add_option("--model", model_path, "Model file");
  grasp->add_option("--object", objects, "pinch, heavy-box, generated:<i> or inline JSON (repeatable)");
  grasp->add_option("--fingers", fingers, "Finger counts");
  grasp->add_option("--trials", trials, "Trials per object and finger count");
  grasp->add_option("--duration", duration, "Trial length in seconds");
  grasp->add_flag("--no-traces", no_traces, "Skip per-trial traces");

  auto* perturb = app.add_subcommand("perturb", "Irregular wrench perturbations");
  common(perturb, c);
  perturb->add_option("--model", model_path, "Model file");
  perturb->add_option("--object", objects, "Object name or inline JSON")->expected(1);
  perturb->add_option("--fingers", fingers, "Finger count")->expected(1);
  perturb->add_option("--trials", trials, "Trials");
  perturb->add_flag("--no-traces", no_traces, "Skip per-trial traces");

  auto* ms = app.add_subcommand("master-slave", "Scripted finger retraction");
  common(ms, c);
  ms->add_option("--model", model_path, "Model file");
  ms->add_option("--object", objects, "Object name or inline JSON")->expected(1);
  ms->add_option("--fingers", fingers, "Finger count")->expected(1);
  ms->add_option("--trials", trials, "Trials");
  ms->add_option("--duration", duration, "Trial length in seconds");
  ms->add_flag("--no-traces", no_traces, "Skip per-trial traces");

  auto* serve = app.add_subcommand("serve", "WebSocket session server");
  common(serve, c, false);
  serve->add_option("--model", model_path, "Model file");
  serve->add_option("--address", address, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--object", objects, "Object name or inline JSON")->expected(1);
  serve->add_option("--fingers", fingers, "Finger count")->expected(1);
  serve->add_option("--snapshot-rate", snapshot_rate, "Snapshots per second")->check(CLI::PositiveNumber);
  serve->add_option("--max-connections", max_connections, "Exit after this many sessions (0 = never)");
  serve->add_flag("--fast", fast, "Step as fast as possible instead of in real time");

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg;
    load(c, cfg);
    Text summary;
    nlohmann::json opts = nlohmann::json::object();
    if (!no_traces) opts["traces"] = true; else opts["traces"] = false;
    if (trials >= 0) opts["trials"] = trials;
    if (duration > 0.0) opts["duration"] = duration;

    if (collect->parsed()) {
      check(gs_collect(cfg.p, c.seed, c.out.c_str(), sensor_log ? 1 : 0, &summary.p));
    } else if (train->parsed()) {
      check(gs_train(cfg.p, data.c_str(), c.seed, c.out.c_str(), &summary.p));
    } else if (eval->parsed()) {
      Model m;
      check(gs_model_load(model_path.c_str(), &m.p));
      check(gs_eval(cfg.p, m.p, data.c_str(), split.c_str(), c.out.empty() ? nullptr : c.out.c_str(), &summary.p));
    } else if (grasp->parsed()) {
      if (!objects.empty()) {
        opts["objects"] = nlohmann::json::array();
        for (const auto& o : objects) opts["objects"].push_back(object_arg(o));
      }
      if (!fingers.empty()) opts["fingers"] = fingers;
      Model m;
      model_for(model_path, cfg, c.seed, m);
      check(gs_grasp(cfg.p, m.p, opts.dump().c_str(), c.seed, c.out.c_str(), &summary.p));
    } else if (perturb->parsed() || ms->parsed()) {
      if (!objects.empty()) opts["object"] = object_arg(objects.front());
      if (!fingers.empty()) opts["fingers"] = fingers.front();
      if (perturb->parsed()) opts.erase("duration");
      Model m;
      model_for(model_path, cfg, c.seed, m);
      const auto text = opts.dump();
      if (perturb->parsed()) {
        check(gs_perturb(cfg.p, m.p, text.c_str(), c.seed, c.out.c_str(), &summary.p));
      } else {
        check(gs_master_slave(cfg.p, m.p, text.c_str(), c.seed, c.out.c_str(), &summary.p));
      }
    } else if (serve->parsed()) {
      nlohmann::json so{{"address", address},
                        {"port", port},
                        {"snapshot_rate", snapshot_rate},
                        {"realtime", !fast},
                        {"max_connections", max_connections}};
      if (!objects.empty()) so["object"] = object_arg(objects.front());
      if (!fingers.empty()) so["fingers"] = fingers.front();
      Model m;
      model_for(model_path, cfg, c.seed, m);
      check(gs_serve(cfg.p, m.p, so.dump().c_str(), c.seed));
    }
    print(summary);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error (%s): %s\n", gs_status_name(f.status), gs_last_error());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: bad --object: %s\n", e.what());
    return 2;
  }
  return 0;
}
