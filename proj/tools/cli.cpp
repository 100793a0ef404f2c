#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "oms/controller.hpp"
#include "oms/engine.hpp"
#include "oms/error.hpp"
#include "oms/evalkit.hpp"
#include "oms/manifest.hpp"
#include "oms/qlearner.hpp"
#include "oms/results_io.hpp"
#include "oms/synthetic.hpp"

namespace oms::cli {

namespace {

namespace fs = std::filesystem;

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string percent(const std::optional<double>& x) {
  return x ? fixed(100.0 * *x, 2) : std::string("n/a");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& token : split(text, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw InvalidInput(std::string("bad number \"") + token + "\" in " + what);
    }
  }
  return out;
}

std::array<double, kModalityCount> triple(const std::string& text, const char* what) {
  const auto values = parse_doubles(text, what);
  if (values.size() == 1) return {values[0], values[0], values[0]};
  if (values.size() == 3) return {values[0], values[1], values[2]};
  throw InvalidInput(std::string(what) + " takes one value or three (face,body,audio)");
}

ModalityMask parse_modalities(const std::string& text) {
  ModalityMask mask{{false, false, false}};
  for (const auto& token : split(text, ',')) {
    bool known = false;
    for (Modality m : kModalities) {
      if (token == modality_name(m)) {
        mask.enabled[index_of(m)] = true;
        known = true;
      }
    }
    if (!known) throw InvalidInput("unknown modality \"" + token + "\"");
  }
  return mask;
}

/// Options shared by run, train and sweep that shape the engine and gates.
struct EngineOptions {
  std::string controller = "manual";
  std::string config_path;
  std::string checkpoint;
  std::optional<double> alpha, beta, gamma, tau;
  std::string state_mode;
  double mu = 0.01;
  bool no_first_write = false;
  bool no_cache = false;
  bool face_only = false;
  std::string modalities = "face,body,audio";
};

void add_engine_options(CLI::App* cmd, EngineOptions& o, bool with_controller,
                        bool with_tau = true) {
  if (with_controller) {
    cmd->add_option("--controller", o.controller, "Gate controller")
        ->check(CLI::IsMember({"manual", "learned"}));
    cmd->add_option("--config", o.config_path,
                    "Controller JSON block (kind, alpha, beta, gamma, tau, state_mode, checkpoint)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--checkpoint", o.checkpoint,
                    "Directory holding g1.json and g2.json (learned controller)");
    cmd->add_option("--alpha", o.alpha, "Update threshold (manual G1)");
    cmd->add_option("--beta", o.beta, "Cache threshold (manual G2)");
  }
  cmd->add_option("--gamma", o.gamma, "Release threshold (G3)");
  if (with_tau) cmd->add_option("--tau", o.tau, "Cache aging weight (G3)");
  cmd->add_option("--state-mode", o.state_mode, "Q-network state encoding")
      ->check(CLI::IsMember({"summary", "raw"}));
  cmd->add_option("--mu", o.mu, "Memory updating factor")->capture_default_str();
  cmd->add_flag("--no-first-write", o.no_first_write,
                "Blend into void memory slots instead of writing them directly");
  cmd->add_flag("--no-cache", o.no_cache, "Disable the uncertain-instance cache");
  cmd->add_flag("--face-only", o.face_only, "Use face features only");
  cmd->add_option("--modalities", o.modalities, "Comma-separated subset of face,body,audio")
      ->capture_default_str();
}

ControllerConfig controller_config(const EngineOptions& o) {
  ControllerConfig cfg;
  if (!o.config_path.empty()) {
    cfg = parse_controller_config(read_text_file(o.config_path));
  } else if (o.controller == "learned") {
    cfg.kind = ControllerKind::kLearned;
  }
  if (o.controller == "learned") cfg.kind = ControllerKind::kLearned;
  if (!o.checkpoint.empty()) cfg.checkpoint = o.checkpoint;
  if (o.alpha) cfg.manual.alpha = *o.alpha;
  if (o.beta) cfg.manual.beta = *o.beta;
  if (o.gamma) cfg.manual.gamma = *o.gamma;
  if (o.tau) cfg.manual.tau = *o.tau;
  if (!o.state_mode.empty()) cfg.state_mode = *parse_state_mode(o.state_mode);
  if (cfg.kind == ControllerKind::kLearned && cfg.checkpoint.empty()) {
    throw InvalidInput("learned controller needs --checkpoint or a config with \"checkpoint\"");
  }
  return cfg;
}

EngineConfig engine_config(const EngineOptions& o) {
  EngineConfig cfg;
  cfg.memory.mu = o.mu;
  cfg.memory.first_write = !o.no_first_write;
  cfg.cache_enabled = !o.no_cache;
  cfg.modalities = o.face_only ? ModalityMask::face_only() : parse_modalities(o.modalities);
  return cfg;
}

/// OMS, OMS-R, OMS-RM, OMS-RMQ ... after which parts are switched on.
std::string method_label(ControllerKind kind, const EngineConfig& engine) {
  std::string suffix;
  if (kind == ControllerKind::kLearned) suffix += 'R';
  if (engine.modalities.allows(Modality::kBody) || engine.modalities.allows(Modality::kAudio)) {
    suffix += 'M';
  }
  if (engine.cache_enabled) suffix += 'Q';
  return suffix.empty() ? "OMS" : "OMS-" + suffix;
}

std::vector<MovieResult> run_engine(const std::vector<MovieStream>& movies,
                                    const GatePolicy& policy, const EngineConfig& engine,
                                    const std::string& label) {
  std::vector<MovieResult> results;
  results.reserve(movies.size());
  for (const auto& movie : movies) results.push_back(run_movie(movie, policy, engine, label));
  return results;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  SyntheticParams params;
  std::string sigma = "0.35";
  std::string presence = "1.0,0.9,0.4";
  std::string out;
};

int do_simulate(const SimulateOptions& o, std::ostream& out) {
  SyntheticParams params = o.params;
  params.sigma = triple(o.sigma, "--sigma");
  params.presence = triple(o.presence, "--presence");
  const auto movies = generate_synthetic(params);
  fs::create_directories(o.out);
  std::size_t instances = 0;
  for (const auto& movie : movies) {
    save_manifest(fs::path(o.out) / (movie.movie_id + ".jsonl"), movie);
    instances += movie.instances.size();
  }
  out << "wrote " << movies.size() << " manifests (" << instances << " instances) to " << o.out
      << '\n';
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string data;
  std::string out;
  TrainConfig config;
  EngineOptions engine;
};

int do_train(const TrainOptions& o, std::ostream& out) {
  const auto movies = load_movies(o.data);
  TrainConfig cfg = o.config;
  cfg.engine = engine_config(o.engine);
  if (o.engine.gamma) cfg.release.gamma = *o.engine.gamma;
  if (o.engine.tau) cfg.release.tau = *o.engine.tau;
  if (!o.engine.state_mode.empty()) cfg.state_mode = *parse_state_mode(o.engine.state_mode);

  const TrainResult result = train_agents(movies, cfg);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  save_checkpoint(dir / kUpdateCheckpointName, result.update);
  save_checkpoint(dir / kCacheCheckpointName, result.cache);

  std::string log = "epoch,epsilon,mean_return_g1,mean_return_g2,loss_g1,loss_g2,steps_g1,steps_g2\n";
  for (const auto& e : result.log) {
    log += std::to_string(e.epoch) + ',' + fixed(e.epsilon, 6) + ',' +
           fixed(e.mean_return_update, 6) + ',' + fixed(e.mean_return_cache, 6) + ',' +
           fixed(e.mean_loss_update, 6) + ',' + fixed(e.mean_loss_cache, 6) + ',' +
           std::to_string(e.steps_update) + ',' + std::to_string(e.steps_cache) + '\n';
    out << "epoch " << e.epoch << "  eps " << fixed(e.epsilon, 3) << "  return g1 "
        << fixed(e.mean_return_update, 3) << " g2 " << fixed(e.mean_return_cache, 3)
        << "  loss g1 " << fixed(e.mean_loss_update, 4) << " g2 " << fixed(e.mean_loss_cache, 4)
        << '\n';
  }
  write_text_file(dir / "train_log.csv", log);

  ControllerConfig controller;
  controller.kind = ControllerKind::kLearned;
  controller.state_mode = cfg.state_mode;
  controller.manual.gamma = cfg.release.gamma;
  controller.manual.tau = cfg.release.tau;
  controller.checkpoint = fs::absolute(dir);
  write_text_file(dir / "controller.json", controller_config_to_json(controller) + "\n");
  out << "wrote " << (dir / kUpdateCheckpointName).string() << ", "
      << (dir / kCacheCheckpointName).string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- run

struct RunOptions {
  std::string data;
  std::string out;
  std::string baseline;
  std::string label;
  TwoStepConfig two_step;
  EngineOptions engine;
};

int do_run(const RunOptions& o, std::ostream& out) {
  const auto movies = load_movies(o.data);
  std::vector<MovieResult> results;
  if (!o.baseline.empty()) {
    for (const auto& movie : movies) {
      if (o.baseline == "face-match") {
        results.push_back(face_match(movie));
      } else {
        TwoStepConfig cfg = o.two_step;
        cfg.use_audio = o.baseline == "two-step-audio";
        results.push_back(two_step(movie, cfg));
      }
      for (const auto& note : results.back().notes) out << movie.movie_id << ": " << note << '\n';
    }
  } else {
    const ControllerConfig controller = controller_config(o.engine);
    const EngineConfig engine = engine_config(o.engine);
    const auto policy = make_policy(controller);
    results = run_engine(movies, *policy, engine, method_label(controller.kind, engine));
  }
  if (!o.label.empty()) {
    for (auto& r : results) r.method = o.label;
  }
  const fs::path dir(o.out);
  for (const auto& r : results) write_movie_result(dir, r);
  write_run_manifest(dir, results);
  out << "method " << results.front().method << ": wrote " << results.size()
      << " movie results to " << o.out << '\n';
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string results;
  std::string out;
  std::string curves;
  std::string label;
};

int do_eval(const EvalOptions& o, std::ostream& out) {
  const fs::path dir(o.results);
  const auto results = read_run(dir);
  EvalReport report = evaluate(results);
  if (!o.label.empty()) report.method = o.label;
  const fs::path report_path = o.out.empty() ? dir / "eval.json" : fs::path(o.out);
  const fs::path curves_path = o.curves.empty() ? dir / "recall_curves.csv" : fs::path(o.curves);
  if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
  write_text_file(report_path, eval_report_json(report));
  write_text_file(curves_path, recall_curves_csv(report));
  for (const auto& m : report.movies) {
    out << m.movie_id << "  mAP " << percent(m.map) << "  mean cache "
        << fixed(m.mean_cache_size, 1) << '\n';
  }
  out << report.method << "  mean mAP " << percent(report.mean_map) << " over "
      << report.movies.size() << " movies -> " << report_path.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  std::string data;
  std::string taus = "0,0.04,0.08,0.12,0.16,0.20";
  std::string grid = "both";
  std::string out;
  EngineOptions engine;
};

int do_sweep(const SweepOptions& o, std::ostream& out) {
  const auto movies = load_movies(o.data);
  ControllerConfig controller = controller_config(o.engine);
  const EngineConfig base = engine_config(o.engine);
  std::string csv = "grid,setting,map,mean_cache_size\n";

  if (o.grid == "tau" || o.grid == "both") {
    const EngineConfig engine = [&] {
      EngineConfig e = base;
      e.cache_enabled = true;
      return e;
    }();
    out << "cache aging weight sweep (" << movies.size() << " movies)\n";
    out << "  tau      mAP(%)   mean cache size\n";
    for (double tau : parse_doubles(o.taus, "--tau")) {
      controller.manual.tau = tau;
      const auto policy = make_policy(controller);
      const auto results = run_engine(movies, *policy, engine, "sweep");
      const auto report = evaluate(results);
      out << "  " << fixed(tau, 2) << "     " << percent(report.mean_map) << "    "
          << fixed(report.mean_cache_size, 2) << '\n';
      csv += "tau," + fixed(tau, 4) + ',' +
             (report.mean_map ? fixed(*report.mean_map, 6) : std::string()) + ',' +
             fixed(report.mean_cache_size, 6) + '\n';
    }
  }
  if (o.grid == "modalities" || o.grid == "both") {
    const auto policy = make_policy(controller);
    out << "modality ablation (" << movies.size() << " movies)\n";
    out << "  modalities          mAP(%)\n";
    for (const char* setting : {"face", "face,body", "face,audio", "face,body,audio"}) {
      EngineConfig engine = base;
      engine.modalities = parse_modalities(setting);
      const auto report = evaluate(run_engine(movies, *policy, engine, "sweep"));
      char row[96];
      std::snprintf(row, sizeof row, "  %-18s  %s\n", setting, percent(report.mean_map).c_str());
      out << row;
      std::string name = setting;
      for (char& c : name) c = c == ',' ? '+' : c;
      csv += "modalities," + name + ',' +
             (report.mean_map ? fixed(*report.mean_map, 6) : std::string()) + ',' +
             fixed(report.mean_cache_size, 6) + '\n';
    }
  }
  if (!o.out.empty()) write_text_file(o.out, csv);
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportOptions {
  std::vector<std::string> reports;
  std::string out;
};

std::string complexity(const ReportSummary& s) {
  if (s.mean_cache_size > 0.0) return "O(NC + kNC), k=" + fixed(s.mean_cache_size, 1);
  return "O(NC)";
}

int do_report(const ReportOptions& o, std::ostream& out) {
  std::ostringstream table;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %-7s %9s  %-24s %s\n", "Method", "online", "mAP (%)",
                "complexity", "movies");
  table << line;
  table << std::string(80, '-') << '\n';
  for (const auto& path : o.reports) {
    const auto s = read_report_summary(path);
    std::snprintf(line, sizeof line, "%-28s %-7s %9s  %-24s %zu\n", s.method.c_str(),
                  s.online ? "yes" : "no", percent(s.mean_map).c_str(), complexity(s).c_str(),
                  s.movies);
    table << line;
  }
  out << table.str();
  if (!o.out.empty()) write_text_file(o.out, table.str());
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online multi-modal cast search: simulate, train, run, evaluate"};
  app.name("oms");
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic movie manifests");
  simulate->add_option("--movies", sim.params.movies, "Number of movies")->capture_default_str();
  simulate->add_option("--cast", sim.params.casts, "Cast members per movie")->capture_default_str();
  simulate->add_option("--instances", sim.params.instances, "Instances per movie")
      ->capture_default_str();
  simulate->add_option("--dim", sim.params.dim, "Feature dimension d per modality")
      ->capture_default_str();
  simulate->add_option("--sigma", sim.sigma, "Noise std: one value or face,body,audio")
      ->capture_default_str();
  simulate->add_option("--presence", sim.presence, "Modality presence probabilities face,body,audio")
      ->capture_default_str();
  simulate->add_option("--drift", sim.params.drift, "Prototype random-walk step std")
      ->capture_default_str();
  simulate->add_option("--distractors", sim.params.distractor_fraction,
                       "Fraction of instances outside the cast list")
      ->capture_default_str();
  simulate->add_option("--seed", sim.params.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory")->required();

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train the G1/G2 Q-network controllers");
  train->add_option("--data", tr.data, "Manifest file or directory")->required();
  train->add_option("--out", tr.out, "Checkpoint output directory")->required();
  train->add_option("--epochs", tr.config.epochs, "Passes over the movie list")
      ->capture_default_str();
  train->add_option("--iterations", tr.config.iterations_per_movie,
                    "Q-learning iterations per movie")
      ->capture_default_str();
  train->add_option("--horizon", tr.config.horizon, "Return horizon T")->capture_default_str();
  train->add_option("--lr", tr.config.learning_rate, "SGD learning rate")->capture_default_str();
  train->add_option("--batch", tr.config.batch_size, "Minibatch size")->capture_default_str();
  train->add_option("--hidden", tr.config.hidden, "Hidden layer width")->capture_default_str();
  train->add_option("--epsilon-start", tr.config.epsilon_start, "Initial exploration rate")
      ->capture_default_str();
  train->add_option("--epsilon-end", tr.config.epsilon_end, "Final exploration rate")
      ->capture_default_str();
  train->add_option("--seed", tr.config.seed, "Random seed")->capture_default_str();
  add_engine_options(train, tr.engine, false);

  RunOptions rn;
  auto* run_cmd = app.add_subcommand("run", "Run a controller or baseline over manifests");
  run_cmd->add_option("--data", rn.data, "Manifest file or directory")->required();
  run_cmd->add_option("--out", rn.out, "Result directory")->required();
  run_cmd->add_option("--baseline", rn.baseline, "Run a baseline instead of the engine")
      ->check(CLI::IsMember({"face-match", "two-step", "two-step-audio"}));
  run_cmd->add_option("--theta1", rn.two_step.theta1, "Two-step label threshold")
      ->capture_default_str();
  run_cmd->add_option("--label", rn.label, "Method label written to the results");
  add_engine_options(run_cmd, rn.engine, true);

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a result directory");
  eval->add_option("--results", ev.results, "Result directory written by run")->required();
  eval->add_option("--out", ev.out, "Report JSON path (default <results>/eval.json)");
  eval->add_option("--curves", ev.curves, "R@k CSV path (default <results>/recall_curves.csv)");
  eval->add_option("--label", ev.label, "Override the method label");

  SweepOptions sw;
  auto* sweep = app.add_subcommand("sweep", "Cache-weight and modality sweeps");
  sweep->add_option("--data", sw.data, "Manifest file or directory")->required();
  sweep->add_option("--tau", sw.taus, "Comma-separated aging weights")->capture_default_str();
  sweep->add_option("--grid", sw.grid, "Which grid to run")
      ->check(CLI::IsMember({"tau", "modalities", "both"}))
      ->capture_default_str();
  sweep->add_option("--out", sw.out, "CSV output path");
  add_engine_options(sweep, sw.engine, true, false);

  ReportOptions rp;
  auto* report = app.add_subcommand("report", "Collate eval reports into one table");
  report->add_option("reports", rp.reports, "eval.json files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", rp.out, "Also write the table to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return 0;
    }
    err << "oms: error: " << e.what() << '\n';
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (simulate->parsed()) return do_simulate(sim, out);
    if (train->parsed()) return do_train(tr, out);
    if (run_cmd->parsed()) return do_run(rn, out);
    if (eval->parsed()) return do_eval(ev, out);
    if (sweep->parsed()) return do_sweep(sw, out);
    if (report->parsed()) return do_report(rp, out);
  } catch (const std::exception& e) {
    std::string message = e.what();
    for (char& c : message) c = c == '\n' ? ' ' : c;
    err << "oms: error: " << message << '\n';
    return 1;
  }
  return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("oms");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace oms::cli
