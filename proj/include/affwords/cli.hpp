#pragma once

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "affwords/io.hpp"
#include "affwords/pipeline.hpp"

namespace affwords::cli {

namespace fs = std::filesystem;

inline constexpr int config_format_version = 1;

// Everything a command needs besides its own flags. Loaded from a JSON
// document (see config/default.json); missing keys keep these defaults.
struct RunConfig {
  std::uint64_t seed = 2018;
  std::size_t trials = 10000;
  std::size_t trajectory_trials = 300;
  BnTrainOptions bn;
  HmmTrainOptions hmm;
  std::string grammar_path;  // empty: built-in grammar
  std::size_t n = 10000;
  std::size_t k = 10;
  std::size_t sweep_points = 100;
  WorldConfig world = default_world_config();
};

inline RunConfig load_run_config(const std::string& path) {
  RunConfig c;
  if (path.empty()) return c;
  const auto j = parse_json(read_text_file(path), path);
  if (!j.is_object() || j.value("format", "") != "affwords.config")
    fail(ErrorKind::parse, path + ": expected an 'affwords.config' document");
  if (j.value("version", 0) != config_format_version)
    fail(ErrorKind::parse, path + ": unsupported config version");
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("simulate")) {
      const auto& s = j.at("simulate");
      c.trials = s.value("trials", c.trials);
      c.trajectory_trials = s.value("trajectory_trials", c.trajectory_trials);
    }
    if (j.contains("bn")) {
      const auto& b = j.at("bn");
      c.bn.alpha = b.value("alpha", c.bn.alpha);
      c.bn.max_parents = b.value("max_parents", c.bn.max_parents);
    }
    if (j.contains("hmm")) {
      const auto& h = j.at("hmm");
      c.hmm.states = h.value("states", c.hmm.states);
      c.hmm.mixtures = h.value("mixtures", c.hmm.mixtures);
      c.hmm.max_iterations = h.value("max_iterations", c.hmm.max_iterations);
      c.hmm.tolerance = h.value("tolerance", c.hmm.tolerance);
      c.hmm.variance_floor = h.value("variance_floor", c.hmm.variance_floor);
    }
    if (j.contains("language")) {
      const auto& l = j.at("language");
      c.grammar_path = l.value("grammar", c.grammar_path);
      c.n = l.value("n", c.n);
      c.k = l.value("k", c.k);
      if (!c.grammar_path.empty() && fs::path(c.grammar_path).is_relative())
        c.grammar_path = (fs::path(path).parent_path() / c.grammar_path).string();
    }
    if (j.contains("sweep")) c.sweep_points = j.at("sweep").value("points", c.sweep_points);
    if (j.contains("world")) c.world = world_config_from_json(j.at("world"));
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, path + ": " + e.what());
  }
  return c;
}

inline Grammar load_grammar_for(const RunConfig& c) {
  if (c.grammar_path.empty()) return default_grammar();
  return load_grammar(read_text_file(c.grammar_path));
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& p : split(s, ','))
    if (!trim(p).empty()) out.push_back(trim(p));
  return out;
}

inline std::string trajectory_name(std::size_t id) {
  std::ostringstream ss;
  ss << std::setw(6) << std::setfill('0') << id << ".csv";
  return ss.str();
}

inline std::string label_header(const WorldSchema& schema, std::size_t var, std::size_t value) {
  return schema.var(var).name + "=" + schema.var(var).labels[value];
}

// ---------------------------------------------------------------------------
// Commands. Each returns the paths it wrote.

inline std::vector<fs::path> cmd_simulate(const RunConfig& c, const fs::path& out_dir, std::ostream& log) {
  const auto schema = affordance_schema();
  const auto grammar = load_grammar_for(c);
  const auto trials = sample_trials(c.world, schema, grammar, c.trials, c.seed, c.trajectory_trials);
  const auto dataset_dir = out_dir / "dataset";
  std::ostringstream ss;
  write_dataset(ss, schema, to_dataset(trials, "synthworld seed=" + std::to_string(c.seed)));
  std::vector<fs::path> written{dataset_dir / "trials.txt"};
  write_text_file(written[0], ss.str());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!trials[i].trajectory) continue;
    written.push_back(dataset_dir / "traj" / trajectory_name(i));
    write_text_file(written.back(), trajectory_to_csv(*trials[i].trajectory));
  }
  log << "simulated " << trials.size() << " trials (" << written.size() - 1 << " with trajectories) into "
      << dataset_dir.string() << "\n";
  return written;
}

inline Dataset read_dataset_dir(const fs::path& dataset_dir, const WorldSchema& schema) {
  std::istringstream is(read_text_file(dataset_dir / "trials.txt"));
  return read_dataset(is, schema);
}

inline std::vector<fs::path> cmd_train_bn(const RunConfig& c, const fs::path& dataset_dir,
                                          const fs::path& model_path, std::ostream& log) {
  const auto schema = affordance_schema(load_grammar_for(c).vocabulary);
  const auto data = read_dataset_dir(dataset_dir, schema);
  const auto net = train_affordance_net(data, schema, c.bn);
  save_bayes_net(model_path, net);
  std::size_t edges = 0;
  for (const auto& p : net.parents()) edges += p.size();
  log << "trained BN on " << data.rows.size() << " rows: " << edges << " edges -> " << model_path.string()
      << "\n";
  return {model_path};
}

inline std::vector<fs::path> cmd_train_hmm(const RunConfig& c, const fs::path& dataset_dir,
                                           const fs::path& model_path, std::ostream& log) {
  const auto schema = affordance_schema(load_grammar_for(c).vocabulary);
  const auto data = read_dataset_dir(dataset_dir, schema);
  const auto action = schema.index_of(names::action);
  const auto& labels = schema.var(action).labels;
  std::map<std::string, std::vector<Trajectory>> by_action;
  const auto traj_dir = dataset_dir / "traj";
  if (!fs::is_directory(traj_dir)) fail(ErrorKind::io, "no trajectory directory '" + traj_dir.string() + "'");
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const auto path = traj_dir / trajectory_name(i);
    if (!fs::exists(path)) continue;
    by_action[labels[data.rows[i][action]]].push_back(load_trajectory(path));
  }
  const auto bank = train_gesture_bank(by_action, labels, c.hmm, c.seed);
  save_gesture_bank(model_path, bank);
  log << "trained " << bank.models.size() << " gesture HMMs (";
  for (std::size_t k = 0; k < labels.size(); ++k)
    log << (k ? ", " : "") << labels[k] << ": " << by_action[labels[k]].size();
  log << " trajectories) -> " << model_path.string() << "\n";
  return {model_path};
}

inline std::optional<SoftActionEvidence> gesture_evidence(const BayesNet& net, const std::string& traj_path,
                                                          const std::string& bank_path) {
  if (traj_path.empty()) return std::nullopt;
  const auto bank = load_gesture_bank(bank_path);
  bank.check_labels(net.schema().var(action_variable(net)).labels);
  return action_posterior(bank, load_trajectory(traj_path));
}

inline std::vector<fs::path> cmd_infer(const BayesNet& net, const std::string& evidence,
                                       const std::string& infer, const std::optional<SoftActionEvidence>& soft,
                                       const fs::path& csv_path, std::ostream& log) {
  const auto& schema = net.schema();
  const auto obs = parse_evidence(schema, evidence);
  std::vector<std::size_t> vars;
  for (const auto& name : split_list(infer)) vars.push_back(schema.index_of(name));
  if (vars.empty()) fail(ErrorKind::invalid_argument, "--infer needs at least one variable");
  const auto dist = soft ? fuse_query(net, *soft, {vars, obs}).dist
                         : query(net, std::span<const std::size_t>(vars), obs);

  std::vector<std::string> var_names;
  for (auto v : vars) var_names.push_back(schema.var(v).name);
  auto header = var_names;
  header.push_back("probability");
  CsvTable table(header);
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    const auto values = dist.values_of(i);
    std::vector<std::string> row;
    for (std::size_t j = 0; j < vars.size(); ++j) row.push_back(schema.var(vars[j]).labels[values[j]]);
    row.push_back(format_double(dist.probs[i]));
    table.add(row);
  }
  write_text_file(csv_path, table.str());
  log << "P(" << join(var_names, ",") << " | "
      << (evidence.empty() ? "-" : evidence) << (soft ? ", gesture" : "") << ")\n";
  for (const auto& row : table.rows()) {
    log << "  ";
    for (std::size_t j = 0; j + 1 < row.size(); ++j) log << std::left << std::setw(10) << row[j] << " ";
    log << row.back() << "\n";
  }
  return {csv_path};
}

inline std::vector<fs::path> cmd_anticipate(const BayesNet& net, const GestureBank& bank,
                                            const Trajectory& traj, const std::string& evidence,
                                            const std::string& predict, const fs::path& csv_path,
                                            std::ostream& log) {
  const auto& schema = net.schema();
  bank.check_labels(schema.var(action_variable(net)).labels);
  const auto obs = parse_evidence(schema, evidence);
  const auto target = schema.index_of(predict);
  const auto curve = prefix_curve(bank, traj);

  std::vector<std::string> header{"frame", "time"};
  for (const auto& a : curve.actions) header.push_back("score_" + a);
  for (const auto& a : curve.actions) header.push_back("posterior_" + a);
  for (std::size_t x = 0; x < schema.arity(target); ++x) header.push_back(label_header(schema, target, x));
  CsvTable table(header);
  for (std::size_t t = 0; t < traj.size(); ++t) {
    std::vector<std::string> row{std::to_string(t + 1), format_double(double(t) * traj.frame_period)};
    for (double s : curve.normalized[t]) row.push_back(format_double(s));
    for (double p : curve.posterior[t].weights()) row.push_back(format_double(p));
    const auto pred = fuse_query(net, curve.posterior[t], {{target}, obs}).dist;
    for (double p : pred.probs) row.push_back(format_double(p));
    table.add(row);
  }
  write_text_file(csv_path, table.str());
  const auto last = traj.size() - 1;
  log << "anticipation over " << traj.size() << " frames; final recognized action: "
      << curve.actions[curve.argmax(last)] << "\n";
  return {csv_path};
}

inline std::vector<fs::path> cmd_describe(const BayesNet& net, const Grammar& grammar,
                                          const std::string& evidence,
                                          const std::optional<SoftActionEvidence>& soft, std::size_t n,
                                          std::size_t k, std::uint64_t seed, const fs::path& csv_path,
                                          std::ostream& log) {
  const auto obs = parse_evidence(net.schema(), evidence);
  const auto probs = word_probabilities(net, obs, soft ? &*soft : nullptr);
  for (const auto& w : grammar.vocabulary)
    if (!probs.count(w)) fail(ErrorKind::mismatch, "grammar word '" + w + "' is not a model variable");
  const auto list = nbest(grammar, probs, n, k, seed);
  CsvTable table({"rank", "score", "sentence"});
  for (std::size_t i = 0; i < list.entries.size(); ++i)
    table.add({std::to_string(i + 1), format_double(list.entries[i].score),
               to_text(list.entries[i].sentence)});
  write_text_file(csv_path, table.str());
  log << list.entries.size() << "-best descriptions (" << list.distinct << " distinct of " << list.generated
      << ") for " << (evidence.empty() ? "-" : evidence) << (soft ? " + gesture" : "") << ":\n";
  for (const auto& e : list.entries)
    log << "  " << std::fixed << std::setprecision(5) << e.score << std::defaultfloat << "  \""
        << to_text(e.sentence) << "\"\n";
  return {csv_path};
}

inline std::vector<fs::path> cmd_sweep(const BayesNet& net, const std::string& evidence,
                                       const std::string& target, const std::string& infer,
                                       std::size_t points, const fs::path& csv_path, std::ostream& log) {
  const auto& schema = net.schema();
  const auto obs = parse_evidence(schema, evidence);
  const auto action = action_variable(net);
  const auto target_value = schema.value_of(action, target);
  const auto var = schema.index_of(infer);
  const auto sweep = confidence_sweep(net, obs, target_value, confidence_grid(points), {var});

  std::vector<std::string> header{"p_" + target};
  for (std::size_t x = 0; x < schema.arity(var); ++x) header.push_back(label_header(schema, var, x));
  header.push_back("argmax");
  CsvTable table(header);
  for (const auto& pt : sweep) {
    std::vector<std::string> row{format_double(pt.confidence)};
    for (double p : pt.posterior.probs) row.push_back(format_double(p));
    const auto best = std::size_t(std::max_element(pt.posterior.probs.begin(), pt.posterior.probs.end()) -
                                  pt.posterior.probs.begin());
    row.push_back(schema.var(var).labels[best]);
    table.add(row);
  }
  write_text_file(csv_path, table.str());
  log << "swept P_hmm(" << target << ") over " << points << " points for " << infer << " given "
      << (evidence.empty() ? "-" : evidence) << "\n";
  return {csv_path};
}

inline std::vector<fs::path> cmd_word_delta(const BayesNet& net, const std::string& evidence,
                                            const std::string& target, const fs::path& csv_path,
                                            std::ostream& log) {
  const auto& schema = net.schema();
  const auto action = action_variable(net);
  const auto soft = SoftActionEvidence::point_mass(schema.arity(action), schema.value_of(action, target));
  const auto deltas = word_delta(net, parse_evidence(schema, evidence), soft);
  CsvTable table({"word", "p_bn", "p_comb", "delta"});
  for (const auto& d : deltas)
    table.add({d.word, format_double(d.bn), format_double(d.fused), format_double(d.delta())});
  write_text_file(csv_path, table.str());
  log << "word probability deltas for Action=" << target << " -> " << csv_path.string() << "\n";
  return {csv_path};
}

// simulate -> train-bn -> train-hmm -> every figure-style export.
inline std::vector<fs::path> cmd_pipeline(const RunConfig& c, const fs::path& out_dir, std::ostream& log) {
  std::vector<fs::path> written;
  auto add = [&](const std::vector<fs::path>& p) { written.insert(written.end(), p.begin(), p.end()); };
  add(cmd_simulate(c, out_dir, log));
  add(cmd_train_bn(c, out_dir / "dataset", out_dir / "bn.json", log));
  add(cmd_train_hmm(c, out_dir / "dataset", out_dir / "hmm.json", log));
  const auto net = load_bayes_net(out_dir / "bn.json");
  const auto bank = load_gesture_bank(out_dir / "hmm.json");
  const auto grammar = load_grammar_for(c);
  const auto fig = out_dir / "figures";

  add(cmd_sweep(net, "Size=small,Shape=sphere,ObjVel=slow", "tap", names::action, c.sweep_points,
                fig / "sweep_action.csv", log));
  add(cmd_sweep(net, "Shape=sphere", "tap", names::obj_vel, c.sweep_points, fig / "sweep_objvel_sphere.csv", log));
  add(cmd_sweep(net, "Shape=box", "tap", names::obj_vel, c.sweep_points, fig / "sweep_objvel_box.csv", log));
  add(cmd_word_delta(net, "Size=big,Shape=sphere,ObjVel=fast", "tap", fig / "word_delta.csv", log));

  const auto probe_path = fig / "tap_probe.csv";
  write_text_file(probe_path,
                  trajectory_to_csv(sample_trajectory("tap", c.world.trajectory, mix_seed(c.seed, 0xF16))));
  written.push_back(probe_path);
  const auto probe = load_trajectory(probe_path);
  add(cmd_anticipate(net, bank, probe, "Size=small,Shape=sphere", names::obj_vel, fig / "anticipate_sphere.csv",
                     log));
  add(cmd_anticipate(net, bank, probe, "Size=big,Shape=box", names::obj_vel, fig / "anticipate_box.csv", log));

  add(cmd_describe(net, grammar, "Color=yellow,Size=big,Shape=sphere,ObjVel=fast", std::nullopt, c.n, c.k, c.seed,
                   fig / "describe_yellow_sphere.csv", log));
  add(cmd_describe(net, grammar, "Action=grasp,ObjVel=medium", std::nullopt, c.n, c.k, c.seed,
                   fig / "describe_grasp_medium.csv", log));
  add(cmd_describe(net, grammar, "Action=grasp,ObjVel=slow", std::nullopt, c.n, c.k, c.seed,
                   fig / "describe_grasp_slow.csv", log));
  add(cmd_describe(net, grammar, "Size=small,Shape=sphere", action_posterior(bank, probe), c.n, c.k, c.seed,
                   fig / "describe_tap_probe.csv", log));
  return written;
}

// ---------------------------------------------------------------------------

inline constexpr int usage_exit_code = 2;

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return 3;
    case ErrorKind::io: return 4;
    case ErrorKind::parse: return 5;
    case ErrorKind::mismatch: return 6;
    case ErrorKind::impossible_evidence: return 7;
    case ErrorKind::cycle: return 8;
  }
  return 1;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"affwords: affordance-word Bayesian network, gesture HMMs and grounded descriptions"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = ".";
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "base random seed (overrides the config)");
  app.add_option("--out", out_dir, "working/output directory");

  std::string dataset, bn_path, hmm_path, evidence, infer = names::action, traj, target = "tap",
                                                  predict = names::obj_vel, csv;
  std::optional<std::size_t> n_opt, k_opt, points_opt;

  auto* simulate = app.add_subcommand("simulate", "sample a synthetic dataset into <out>/dataset");
  auto* train_bn = app.add_subcommand("train-bn", "learn BN structure and CPTs -> <out>/bn.json");
  auto* train_hmm = app.add_subcommand("train-hmm", "train one gesture HMM per action -> <out>/hmm.json");
  auto* infer_cmd = app.add_subcommand("infer", "posterior of variables given evidence [and a gesture]");
  auto* anticipate = app.add_subcommand("anticipate", "per-prefix action scores and effect prediction");
  auto* describe = app.add_subcommand("describe", "N-best verbal descriptions for the evidence");
  auto* sweep = app.add_subcommand("sweep", "fused posterior as gesture confidence grows");
  auto* pipeline = app.add_subcommand("pipeline", "simulate, train and export every figure CSV");

  for (auto* sc : {train_bn, train_hmm})
    sc->add_option("--dataset", dataset, "dataset directory (default <out>/dataset)");
  for (auto* sc : {infer_cmd, anticipate, describe, sweep})
    sc->add_option("--bn", bn_path, "BN model (default <out>/bn.json)");
  for (auto* sc : {infer_cmd, anticipate, describe})
    sc->add_option("--hmm", hmm_path, "gesture bank (default <out>/hmm.json)");
  for (auto* sc : {infer_cmd, anticipate, describe, sweep})
    sc->add_option("--evidence,-e", evidence, "comma separated Var=value pairs");
  for (auto* sc : {infer_cmd, describe})
    sc->add_option("--traj", traj, "trajectory CSV providing gesture evidence");
  for (auto* sc : {infer_cmd, anticipate, describe, sweep, train_bn, train_hmm})
    sc->add_option("--csv", csv, "output file (default under <out>)");
  infer_cmd->add_option("--infer,-i", infer, "comma separated variables to infer");
  anticipate->add_option("--traj", traj, "trajectory CSV")->required();
  anticipate->add_option("--predict", predict, "effect variable to predict");
  describe->add_option("-n", n_opt, "sentences to generate");
  describe->add_option("-k", k_opt, "sentences to keep");
  sweep->add_option("--target", target, "action whose confidence is swept");
  sweep->add_option("--infer,-i", infer, "variable to report");
  sweep->add_option("--points", points_opt, "grid points in [1/3, 1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : usage_exit_code;
  }

  try {
    RunConfig c = load_run_config(config_path);
    if (seed) c.seed = *seed;
    if (n_opt) c.n = *n_opt;
    if (k_opt) c.k = *k_opt;
    if (points_opt) c.sweep_points = *points_opt;
    const fs::path out_path(out_dir);
    const fs::path dataset_dir = dataset.empty() ? out_path / "dataset" : fs::path(dataset);
    const std::string bn_file = bn_path.empty() ? (out_path / "bn.json").string() : bn_path;
    const std::string hmm_file = hmm_path.empty() ? (out_path / "hmm.json").string() : hmm_path;
    auto csv_or = [&](const char* name) { return csv.empty() ? out_path / name : fs::path(csv); };
    auto require = [](const std::string& p, const char* what) {
      if (!fs::exists(p)) fail(ErrorKind::io, std::string("missing ") + what + " '" + p + "'");
    };

    if (*simulate) {
      cmd_simulate(c, out_path, out);
    } else if (*train_bn) {
      cmd_train_bn(c, dataset_dir, csv.empty() ? out_path / "bn.json" : fs::path(csv), out);
    } else if (*train_hmm) {
      cmd_train_hmm(c, dataset_dir, csv.empty() ? out_path / "hmm.json" : fs::path(csv), out);
    } else if (*pipeline) {
      cmd_pipeline(c, out_path, out);
    } else {
      require(bn_file, "BN model");
      const auto net = load_bayes_net(bn_file);
      if (!traj.empty()) {
        require(traj, "trajectory");
        require(hmm_file, "gesture bank");
      }
      if (*infer_cmd) {
        cmd_infer(net, evidence, infer, gesture_evidence(net, traj, hmm_file), csv_or("infer.csv"), out);
      } else if (*anticipate) {
        cmd_anticipate(net, load_gesture_bank(hmm_file), load_trajectory(traj), evidence, predict,
                       csv_or("anticipate.csv"), out);
      } else if (*describe) {
        cmd_describe(net, load_grammar_for(c), evidence, gesture_evidence(net, traj, hmm_file), c.n, c.k, c.seed,
                     csv_or("describe.csv"), out);
      } else if (*sweep) {
        cmd_sweep(net, evidence, target, infer, c.sweep_points, csv_or("sweep.csv"), out);
      }
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error (i/o error): " << e.what() << "\n";
    return exit_code(ErrorKind::io);
  }
  return 0;
}

}  // namespace affwords::cli
