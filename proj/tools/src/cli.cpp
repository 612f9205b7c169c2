#include "regnet/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "regnet/verify.hpp"

namespace regnet::cli {
namespace {

constexpr std::size_t kMaxCount = std::numeric_limits<std::uint32_t>::max();

Dataset load_dataset(const std::string& spec, const SynthSpec& synth) {
  if (spec == "synth") return synth_gaussian(synth, "synth");
  return load_csv(spec);
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::filesystem::path checkpoint_path(const RunConfig& config) {
  if (!config.checkpoint.empty()) return config.checkpoint;
  return config.out / "encoder.ckpt";
}

int run_train(const RunConfig& config, std::ostream& out) {
  if (config.out.empty()) throw UsageError("train: --out is required");
  const ExperimentConfig& exp = config.experiment;
  const Dataset data = load_dataset(config.dataset, config.synth);
  const ClassSplit split = split_classes(data, exp.fractions, exp.split_seed);

  const std::filesystem::path history_path = config.out / "history.jsonl";
  std::ofstream history = open_output(history_path);
  const FitResult fitted = fit(split.train, split.val, exp.train, &history);
  history.close();
  if (!history) throw IoError("write failed for " + history_path.string());

  const std::filesystem::path ckpt = checkpoint_path(config);
  if (ckpt.has_parent_path()) std::filesystem::create_directories(ckpt.parent_path());
  save_encoder(fitted.best, ckpt);

  out << "trained " << exp.train.episodes << " episodes on '" << data.name() << "' ("
      << split.train.class_count() << " train / " << split.val.class_count() << " val / "
      << split.test.class_count() << " test classes)\n"
      << "best validation accuracy " << std::fixed << std::setprecision(2)
      << fitted.best_val_accuracy << "% at episode " << fitted.best_episode << '\n'
      << "checkpoint " << ckpt.string() << "\nhistory " << history_path.string() << '\n';
  return kOk;
}

EvalOptions eval_options(const RunConfig& config, const std::string& train_domain) {
  const ExperimentConfig& exp = config.experiment;
  EvalOptions o;
  o.n_way = exp.train.n_way;
  o.k_shot = exp.train.k_shot;
  o.q_query = exp.train.q_query;
  o.episodes = exp.test_episodes;
  o.seed = exp.eval_seed;
  o.threads = exp.train.threads;
  o.head = std::string(head_name(exp.train.head));
  o.train_domain = train_domain;
  o.config_tag = exp.train.canonical();
  return o;
}

void write_reports(const RunConfig& config, const std::string& file,
                   const std::vector<std::string>& lines, std::ostream& out) {
  for (const auto& line : lines) out << line << '\n';
  if (config.out.empty()) return;
  std::ofstream f = open_output(config.out / file);
  for (const auto& line : lines) f << line << '\n';
  if (!f) throw IoError("write failed for " + (config.out / file).string());
}

int run_eval(const RunConfig& config, std::ostream& out) {
  const std::filesystem::path ckpt = checkpoint_path(config);
  if (config.checkpoint.empty() && config.out.empty()) {
    throw UsageError("eval: --checkpoint (or --out holding encoder.ckpt) is required");
  }
  const EncoderParams params = load_encoder(ckpt);
  const ExperimentConfig& exp = config.experiment;
  const Dataset data = load_dataset(config.dataset, config.synth);
  if (params.input_dim() != data.feature_dim()) {
    throw ShapeError("eval: checkpoint expects dimension " + std::to_string(params.input_dim()) +
                     ", dataset '" + data.name() + "' has " + std::to_string(data.feature_dim()));
  }
  const ClassSplit split = split_classes(data, exp.fractions, exp.split_seed);
  const EvalReport report = evaluate(params, exp.train.head, exp.train.hyper(), split.test,
                                     eval_options(config, data.name()));
  write_reports(config, "report.jsonl", {report.to_json()}, out);
  out << format_table(std::span(&report, 1));
  return kOk;
}

int run_ablate(const RunConfig& config, std::ostream& out) {
  const ExperimentConfig& exp = config.experiment;
  const Dataset data = load_dataset(config.dataset, config.synth);
  const ClassSplit split = split_classes(data, exp.fractions, exp.split_seed);
  const AblationResult result =
      ablate_lambda2(split.train, split.val, split.test, exp, config.lambda2_values);

  std::vector<std::string> lines;
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    nlohmann::ordered_json j;
    j["lambda2"] = result.lambda2[i];
    j["baseline_lambda2"] = result.lambda2.front();
    j["mean_paired_delta"] = result.mean_delta[i];
    j["paired_delta"] = result.paired_delta[i];
    j["report"] = nlohmann::ordered_json::parse(result.reports[i].to_json());
    lines.push_back(j.dump());
  }
  write_reports(config, "ablation.jsonl", lines, out);
  out << format_table(result.reports);
  for (std::size_t i = 1; i < result.reports.size(); ++i) {
    out << "lambda2 " << result.lambda2[i] << " vs " << result.lambda2.front()
        << ": mean paired delta " << std::showpos << std::fixed << std::setprecision(2)
        << result.mean_delta[i] << std::noshowpos << " points over "
        << result.paired_delta[i].size() << " shared episodes\n";
  }
  return kOk;
}

int run_shift(const RunConfig& config, std::ostream& out) {
  const Dataset a = load_dataset(config.dataset, config.synth);
  Dataset b;
  if (config.test_dataset == "translated") {
    b = translate(a, Tensor(a.feature_dim(), 1, config.shift_offset), a.name() + "-translated");
  } else {
    b = load_csv(config.test_dataset);
  }
  if (b.name() == a.name()) b.set_name(b.name() + "-b");
  const EvalReport report = domain_shift(a, b, config.experiment);
  write_reports(config, "shift.jsonl", {report.to_json()}, out);
  out << format_table(std::span(&report, 1));
  return kOk;
}

int run_check(const RunConfig& config, std::ostream& out) {
  CheckOptions options;
  options.seed = config.experiment.train.seed;
  const std::vector<CheckResult> results = run_checks(options);
  std::size_t passed = 0;
  for (const auto& r : results) {
    if (r.passed) ++passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " (trials " << r.trials << ", worst "
        << std::scientific << std::setprecision(3) << r.worst << ", tolerance " << r.tolerance
        << ")\n";
  }
  out << passed << "/" << results.size() << " checks passed\n";
  return passed == results.size() ? kOk : kCheckFailed;
}

}  // namespace

RunConfig parse_args(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return parse_args(args);
}

RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig config;
  TrainConfig& train = config.experiment.train;
  ExperimentConfig& exp = config.experiment;
  SynthSpec& synth = config.synth;

  CLI::App app{"Few-shot classification by regression onto class subspaces", "regnet"};
  app.set_config("--config", "", "Flat `key = value` file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("command", config.command, "train | eval | ablate | shift | check")
      ->required()
      ->check(CLI::IsMember({"train", "eval", "ablate", "shift", "check"}));

  app.add_option("--dataset", config.dataset, "\"synth\" or a CSV file (label,f1,...,fD)")
      ->capture_default_str();
  app.add_option("--test-dataset", config.test_dataset,
                 "shift: \"translated\" or a CSV file for domain B")
      ->capture_default_str();
  app.add_option("--shift-offset", config.shift_offset,
                 "shift: per-feature translation of domain B")
      ->capture_default_str();

  app.add_option("--synth-classes", synth.n_classes)->check(CLI::Range(std::size_t{2}, kMaxCount))
      ->capture_default_str();
  app.add_option("--synth-per-class", synth.per_class)
      ->check(CLI::Range(std::size_t{1}, kMaxCount))->capture_default_str();
  app.add_option("--synth-dim", synth.dim)->check(CLI::Range(std::size_t{1}, kMaxCount))
      ->capture_default_str();
  app.add_option("--synth-spread", synth.spread)->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--synth-std", synth.within_std, "within-class noise std")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--synth-nuisance-dims", synth.nuisance_dims,
                 "leading features that get extra class-independent noise")
      ->check(CLI::Range(std::size_t{0}, kMaxCount))->capture_default_str();
  app.add_option("--synth-nuisance-std", synth.nuisance_std)->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--synth-seed", synth.seed)->capture_default_str();

  const auto positive = CLI::Range(std::size_t{1}, kMaxCount);
  app.add_option("--n", train.n_way, "classes per episode")->check(positive)->capture_default_str();
  app.add_option("--k", train.k_shot, "support examples per class")->check(positive)
      ->capture_default_str();
  app.add_option("--q", train.q_query, "queries per class")->check(positive)
      ->capture_default_str();
  app.add_option("--episodes", train.episodes, "training episodes")->check(positive)
      ->capture_default_str();
  app.add_option("--batch", train.batch_tasks, "episodes per update")->check(positive)
      ->capture_default_str();
  app.add_option("--lr", train.learning_rate)->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--lambda1", train.lambda1, "ridge regularizer")->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  double lambda2 = 0.0;
  CLI::Option* lambda2_opt =
      app.add_option("--lambda2", lambda2, "orthogonality weight (default 1e-3 if K=1, else 1e-2)")
          ->check(CLI::NonNegativeNumber);
  app.add_option("--lambda2-values", config.lambda2_values, "ablate: comma-separated values")
      ->delimiter(',')
      ->check(CLI::NonNegativeNumber);
  std::string head = "regression";
  app.add_option("--head", head)->check(CLI::IsMember({"regression", "proto", "cosine"}))
      ->capture_default_str();
  std::string optimizer = "adam";
  app.add_option("--optimizer", optimizer)->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  app.add_option("--hidden", train.hidden, "hidden layer widths, comma-separated")
      ->delimiter(',')
      ->check(positive);
  app.add_option("--embed-dim", train.embed_dim)->check(positive)->capture_default_str();
  std::string activation = "relu";
  app.add_option("--activation", activation)->check(CLI::IsMember({"none", "tanh", "relu"}))
      ->capture_default_str();
  app.add_option("--val-interval", train.val_interval)->check(positive)->capture_default_str();
  app.add_option("--val-episodes", train.val_episodes)
      ->check(CLI::Range(std::size_t{2}, kMaxCount))->capture_default_str();
  app.add_option("--test-episodes", exp.test_episodes)
      ->check(CLI::Range(std::size_t{2}, kMaxCount))->capture_default_str();
  app.add_option("--seed", train.seed, "root seed for init, sampling and validation")
      ->capture_default_str();
  app.add_option("--eval-seed", exp.eval_seed, "root seed of the test episodes")
      ->capture_default_str();
  app.add_option("--split-seed", exp.split_seed, "seed of the class split")
      ->capture_default_str();
  std::vector<double> fractions;
  app.add_option("--split", fractions, "train,val,test class fractions")
      ->delimiter(',')
      ->expected(3)
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--threads", train.threads, "1 is bitwise reproducible")->check(positive)
      ->capture_default_str();
  app.add_option("--out", config.out, "output directory");
  app.add_option("--checkpoint", config.checkpoint, "encoder checkpoint (default <out>/encoder.ckpt)");
  app.add_flag("--timing", train.log_wall_time, "add wall-clock seconds to history records");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    config.command = "help";
    config.help_text = app.help();
    return config;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (lambda2_opt->count() > 0) train.lambda2 = lambda2;
  train.head = parse_head(head);
  train.optimizer = optimizer == "sgd" ? Optimizer::kSgd : Optimizer::kAdam;
  train.activation = parse_activation(activation);
  if (!fractions.empty()) exp.fractions = {fractions[0], fractions[1], fractions[2]};
  if (config.lambda2_values.empty()) throw UsageError("--lambda2-values: no values given");
  try {
    train.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return config;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  (void)err;
  if (config.command == "help") {
    out << config.help_text;
    return kOk;
  }
  if (config.command == "train") return run_train(config, out);
  if (config.command == "eval") return run_eval(config, out);
  if (config.command == "ablate") return run_ablate(config, out);
  if (config.command == "shift") return run_shift(config, out);
  if (config.command == "check") return run_check(config, out);
  throw UsageError("unknown command '" + config.command + "'");
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return run(parse_args(argc, argv), out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for the list of flags.\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const SamplingError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ShapeError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return kIo;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace regnet::cli
