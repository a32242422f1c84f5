#include <algorithm>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "ctxspot/chunking.hpp"
#include "ctxspot/eval.hpp"
#include "ctxspot/network.hpp"
#include "ctxspot/objective.hpp"
#include "ctxspot/seg_loss.hpp"
#include "ctxspot/spot_loss.hpp"
#include "ctxspot/synth.hpp"
#include "ctxspot/tse.hpp"

using namespace ctxspot;

namespace {

SynthVideo bench_video(int frames) {
  SynthSpec spec;
  spec.video_frames = frames;
  spec.min_actions = frames / 120;
  spec.max_actions = frames / 80;
  std::mt19937_64 rng(7);
  return generate_video(spec, rng, "bench");
}

void BM_LossPointClamped(benchmark::State& state) {
  const SlicingParams k{-40, -20, 120, 180};
  const Margins m;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  std::uniform_int_distribution<int> s(-100, 250);
  std::vector<std::pair<double, int>> xs(4096);
  for (auto& x : xs) x = {p(rng), s(rng)};
  for (auto _ : state)
    for (const auto& [pp, ss] : xs) benchmark::DoNotOptimize(loss_point_clamped(pp, ss, k, m));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(xs.size()));
}
BENCHMARK(BM_LossPointClamped);

void BM_SegLossChunk(benchmark::State& state) {
  const SpottingConfig cfg = default_config();
  const SynthVideo v = bench_video(cfg.chunk_frames);
  const TseMap tse = tse_video(v.annotations, cfg);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  Eigen::MatrixXd scores(cfg.chunk_frames, cfg.num_classes);
  for (Eigen::Index i = 0; i < scores.size(); ++i) scores.data()[i] = p(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(seg_loss_chunk(scores, tse.values, cfg));
    benchmark::DoNotOptimize(seg_loss_chunk_grad(scores, tse.values, cfg));
  }
}
BENCHMARK(BM_SegLossChunk);

void BM_TseVideo(benchmark::State& state) {
  const SpottingConfig cfg = default_config();
  const SynthVideo v = bench_video(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tse_video(v.annotations, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TseVideo)->Arg(240)->Arg(5400);

void BM_Forward(benchmark::State& state) {
  const SpottingConfig cfg = default_config();
  const auto params = init_params<float>(NetworkShape::from_config(cfg), 3);
  const SynthVideo v = bench_video(cfg.chunk_frames);
  const Chunk chunk = extract_chunk(v.annotations, v.features, 0, cfg.chunk_frames);
  for (auto _ : state) benchmark::DoNotOptimize(forward<float>(chunk.features, params));
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const SpottingConfig cfg = default_config();
  const auto params = init_params<float>(NetworkShape::from_config(cfg), 3);
  const SynthVideo v = bench_video(cfg.chunk_frames);
  const Chunk chunk = extract_chunk(v.annotations, v.features, 0, cfg.chunk_frames);
  const ChunkTargets targets = make_targets(chunk, v.annotations, cfg);
  AlignedVector<float> grad(params.size());
  for (auto _ : state)
    benchmark::DoNotOptimize(chunk_objective<float>(params, chunk.features, targets, cfg, grad));
}
BENCHMARK(BM_ForwardBackward)->Unit(benchmark::kMillisecond);

void BM_IterativeMatch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> gt(n), pred(n + 2);
  for (auto& x : gt) x = u(rng);
  for (auto& x : pred) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(iterative_match(gt, pred));
}
BENCHMARK(BM_IterativeMatch)->Arg(5)->Arg(64);

void BM_AverageMap(benchmark::State& state) {
  const int num_videos = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> frame(0, 5399), cls(0, 2);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  std::vector<VideoSpots> videos(num_videos);
  for (auto& v : videos) {
    for (int i = 0; i < 40; ++i) v.ground_truth.push_back({cls(rng), frame(rng)});
    std::sort(v.ground_truth.begin(), v.ground_truth.end(), chronological);
    for (int i = 0; i < 60; ++i) v.predictions.push_back({cls(rng), frame(rng), conf(rng)});
  }
  const MetricConfig metric;
  for (auto _ : state) benchmark::DoNotOptimize(average_map(videos, 3, metric));
}
BENCHMARK(BM_AverageMap)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
