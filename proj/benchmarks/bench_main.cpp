#include <benchmark/benchmark.h>

#include "regnet/trainer.hpp"

using namespace regnet;

namespace {

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = Tensor::random_normal(n, n, rng), b = Tensor::random_normal(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_SolveSpd(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor g = Tensor::random_normal(k, k, rng);
  const Tensor a = matmul_nt(g, g) + Tensor::identity(k);
  const Tensor b = Tensor::random_normal(k, 16, rng);
  for (auto _ : state) benchmark::DoNotOptimize(solve_spd(a, b));
}
BENCHMARK(BM_SolveSpd)->Arg(1)->Arg(5)->Arg(10);

struct Setup {
  ClassSplit split;
  TrainConfig config;
  Episode episode;
};

Setup make_setup(std::size_t k) {
  SynthSpec spec;
  Setup s{split_classes(synth_gaussian(spec), {4.0 / 6, 1.0 / 6, 1.0 / 6}, 0), {}, {}};
  s.config.k_shot = k;
  Rng rng(3);
  s.episode = sample_episode(s.split.train, 5, k, 16, rng);
  return s;
}

void BM_EpisodeGradient(benchmark::State& state) {
  const auto head = static_cast<HeadKind>(state.range(1));
  const Setup s = make_setup(static_cast<std::size_t>(state.range(0)));
  const EncoderParams p = initial_params(s.config, 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(episode_gradient(p, s.episode, head, s.config.hyper()));
  }
}
BENCHMARK(BM_EpisodeGradient)
    ->ArgsProduct({{1, 5}, {static_cast<int>(HeadKind::kRegression),
                            static_cast<int>(HeadKind::kProto),
                            static_cast<int>(HeadKind::kCosine)}})
    ->ArgNames({"k", "head"});

void BM_TrainStep(benchmark::State& state) {
  Setup s = make_setup(5);
  s.config.batch_tasks = static_cast<std::size_t>(state.range(0));
  s.config.threads = static_cast<std::size_t>(state.range(1));
  std::vector<Episode> batch(s.config.batch_tasks, s.episode);
  EncoderParams p = initial_params(s.config, 32);
  AdamState adam;
  for (auto _ : state) benchmark::DoNotOptimize(train_step(p, batch, s.config, adam));
}
BENCHMARK(BM_TrainStep)->Args({1, 1})->Args({4, 1})->Args({4, 4})->ArgNames({"batch", "threads"})
    ->UseRealTime();

}  // namespace
BENCHMARK_MAIN();
