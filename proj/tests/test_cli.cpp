#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "regnet/cli.hpp"

using namespace regnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "regnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("regnet_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::vector<std::string> kQuick = {"--episodes", "40",        "--val-interval", "20",
                                         "--val-episodes", "5",     "--q",            "4",
                                         "--test-episodes", "10",   "--hidden",       "16"};

std::vector<std::string> with_quick(std::vector<std::string> args) {
  args.insert(args.end(), kQuick.begin(), kQuick.end());
  return args;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("flags override defaults") {
  const cli::RunConfig c = cli::parse_args({"train", "--seed", "7", "--k", "5"});
  CHECK(c.command == "train");
  CHECK(c.experiment.train.k_shot == 5);
  CHECK(c.experiment.train.seed == 7);
  const TrainConfig defaults;
  CHECK(c.experiment.train.n_way == defaults.n_way);
  CHECK(c.experiment.train.q_query == defaults.q_query);
  CHECK(c.experiment.train.learning_rate == defaults.learning_rate);
  CHECK_FALSE(c.experiment.train.lambda2.has_value());
  CHECK(c.dataset == "synth");
}

TEST_CASE("all documented flags parse") {
  const cli::RunConfig c = cli::parse_args(
      {"eval", "--dataset", "x.csv", "--n", "3", "--k", "2", "--q", "7", "--episodes", "11",
       "--lr", "0.01", "--lambda1", "0.5", "--lambda2", "0", "--head", "cosine", "--seed", "9",
       "--threads", "3", "--out", "dir"});
  const TrainConfig& t = c.experiment.train;
  CHECK(c.dataset == "x.csv");
  CHECK(t.n_way == 3);
  CHECK(t.k_shot == 2);
  CHECK(t.q_query == 7);
  CHECK(t.episodes == 11);
  CHECK(t.learning_rate == 0.01);
  CHECK(t.lambda1 == 0.5);
  CHECK(t.lambda2 == 0.0);
  CHECK(t.head == HeadKind::kCosine);
  CHECK(t.seed == 9);
  CHECK(t.threads == 3);
  CHECK(c.out == "dir");
}

TEST_CASE("usage errors name the offending token") {
  auto message = [](std::vector<std::string> args) {
    try {
      cli::parse_args(args);
    } catch (const cli::UsageError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message({"train", "--k", "-1"}).find("--k") != std::string::npos);
  CHECK(message({"train", "--bogus", "1"}).find("--bogus") != std::string::npos);
  CHECK(message({"train", "--lr", "fast"}).find("--lr") != std::string::npos);
  CHECK(message({"train", "--head", "relation"}).find("--head") != std::string::npos);
  CHECK(message({"frobnicate"}).find("command") != std::string::npos);
  CHECK(message({}).find("command") != std::string::npos);
  CHECK(invoke({"train", "--k", "-1"}).code == cli::kUsage);
}

TEST_CASE("config file sits between defaults and flags") {
  const fs::path dir = scratch("config");
  const fs::path cfg = dir / "run.cfg";
  std::ofstream(cfg) << "# shots and seed\nk = 1\nseed = 3\nlambda2 = 0.5\nhead = proto\n";
  const cli::RunConfig a = cli::parse_args({"train", "--config", cfg.string()});
  CHECK(a.experiment.train.k_shot == 1);
  CHECK(a.experiment.train.seed == 3);
  CHECK(a.experiment.train.lambda2 == 0.5);
  CHECK(a.experiment.train.head == HeadKind::kProto);
  const cli::RunConfig b = cli::parse_args({"train", "--config", cfg.string(), "--k", "5"});
  CHECK(b.experiment.train.k_shot == 5);
  CHECK(b.experiment.train.seed == 3);

  std::ofstream(cfg) << "shots = 5\n";
  try {
    cli::parse_args({"train", "--config", cfg.string()});
    FAIL("expected UsageError");
  } catch (const cli::UsageError& e) {
    CHECK(std::string(e.what()).find("shots") != std::string::npos);
  }
  CHECK(invoke({"train", "--config", (dir / "missing.cfg").string()}).code == cli::kUsage);
}

TEST_CASE("help exits cleanly") {
  const Outcome o = invoke({"--help"});
  CHECK(o.code == cli::kOk);
  CHECK(o.out.find("--lambda2") != std::string::npos);
}

TEST_CASE("train writes a checkpoint and history that eval consumes") {
  const fs::path dir = scratch("train");
  const Outcome t = invoke(with_quick({"train", "--out", dir.string()}));
  REQUIRE(t.code == cli::kOk);
  CHECK(fs::exists(dir / "encoder.ckpt"));
  const std::string history = read_file(dir / "history.jsonl");
  CHECK(std::count(history.begin(), history.end(), '\n') == 40);

  const Outcome e = invoke(with_quick({"eval", "--checkpoint", (dir / "encoder.ckpt").string(),
                                       "--out", dir.string()}));
  REQUIRE(e.code == cli::kOk);
  CHECK(e.out.find("\"episodes\":10") != std::string::npos);
  CHECK(read_file(dir / "report.jsonl").find("mean_accuracy") != std::string::npos);
}

TEST_CASE("single-threaded runs give byte-identical histories") {
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  REQUIRE(invoke(with_quick({"train", "--threads", "1", "--seed", "5", "--out", a.string()})).code == 0);
  REQUIRE(invoke(with_quick({"train", "--threads", "1", "--seed", "5", "--out", b.string()})).code == 0);
  CHECK(read_file(a / "history.jsonl") == read_file(b / "history.jsonl"));
  CHECK(read_file(a / "encoder.ckpt") == read_file(b / "encoder.ckpt"));
}

TEST_CASE("csv datasets are accepted") {
  const fs::path dir = scratch("csv");
  SynthSpec spec;
  spec.dim = 6;
  save_csv(synth_gaussian(spec), dir / "data.csv");
  const Outcome o = invoke(with_quick({"train", "--dataset", (dir / "data.csv").string(), "--out",
                                       dir.string()}));
  CHECK(o.code == cli::kOk);
  std::ofstream(dir / "bad.csv") << "label,a\n0,1\n1,1,2\n";
  const Outcome bad = invoke(with_quick({"train", "--dataset", (dir / "bad.csv").string(),
                                         "--out", dir.string()}));
  CHECK(bad.code == cli::kIo);
  CHECK(bad.err.find("line 3") != std::string::npos);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  CHECK(invoke({"train"}).code == cli::kUsage);  // no --out
  CHECK(invoke({"eval", "--checkpoint", (dir / "none.ckpt").string()}).code == cli::kIo);
  CHECK(invoke({"train", "--dataset", (dir / "none.csv").string(), "--out", dir.string()}).code ==
        cli::kIo);
  // Huge plain-gradient steps blow the embedding up.
  const Outcome d = invoke(with_quick({"train", "--optimizer", "sgd", "--lr", "1e200", "--head",
                                       "proto", "--out", dir.string()}));
  CHECK(d.code == cli::kDivergence);
}

TEST_CASE("ablate and shift commands") {
  const fs::path dir = scratch("ablate");
  const Outcome a =
      invoke(with_quick({"ablate", "--lambda2-values", "0,0.01", "--out", dir.string()}));
  REQUIRE(a.code == cli::kOk);
  CHECK(a.out.find("mean paired delta") != std::string::npos);
  const std::string lines = read_file(dir / "ablation.jsonl");
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 2);

  const Outcome s = invoke(with_quick({"shift", "--shift-offset", "0.5"}));
  REQUIRE(s.code == cli::kOk);
  CHECK(s.out.find("\"train_domain\":\"synth\"") != std::string::npos);
  CHECK(s.out.find("\"test_domain\":\"synth-translated\"") != std::string::npos);
}

TEST_CASE("check reports every verification") {
  const Outcome o = invoke({"check"});
  CHECK(o.code == cli::kOk);
  CHECK(o.out.find("7/7 checks passed") != std::string::npos);
  CHECK(o.out.find("FAIL") == std::string::npos);
}

}  // TEST_SUITE
