// Serial reference kernels against their OpenMP counterparts.
//
//   OMP_NUM_THREADS=4 ./bench_kernels

#include <benchmark/benchmark.h>

#include <random>

#include "mtrans/batch_decode.hpp"
#include "mtrans/training.hpp"
#include "synthetic_grammar.hpp"

using namespace mtrans;

namespace {

struct Setup {
  testing::SplitData data = testing::make_synthetic_grammar(11, 300, 200);
  Model model = make_model(build_vocabs(data.train), {64, 16, 96}, 5);
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_DecodeSerial(benchmark::State& state) {
  const auto& s = setup();
  const std::vector<const Model*> models{&s.model};
  for (auto _ : state)
    benchmark::DoNotOptimize(decode_batch_serial(models, s.data.dev, static_cast<int>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * s.data.dev.size());
}

void BM_DecodeParallel(benchmark::State& state) {
  const auto& s = setup();
  const std::vector<const Model*> models{&s.model};
  for (auto _ : state)
    benchmark::DoNotOptimize(decode_batch_parallel(models, s.data.dev, static_cast<int>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * s.data.dev.size());
}

// Mixed-mode regrets at the first configuration of every training pair.
void regrets(benchmark::State& state, bool parallel) {
  const auto& s = setup();
  std::mt19937_64 rng(1);
  for (auto _ : state) {
    for (std::size_t k = 0; k < 50; ++k) {
      const auto& sample = s.data.train[k];
      const auto enc = encode(s.model, sample.x);
      const Vec fb = feature_block(s.model, encode_features(sample.features, s.model.vocabs.features));
      const Expert expert(sample.x, *sample.y);
      const RolloutContext ctx{s.model, enc, fb, expert, 5};
      const auto step =
          decoder_step(s.model, initial_decoder_step(s.model), kBeginAction, enc, 1, fb);
      benchmark::DoNotOptimize(compute_regrets(ctx, initial_state(sample.x), {}, step,
                                               RolloutMode::Mixed, 0.0, rng, parallel));
    }
  }
}

void BM_RegretsSerial(benchmark::State& state) { regrets(state, false); }
void BM_RegretsParallel(benchmark::State& state) { regrets(state, true); }

}  // namespace

BENCHMARK(BM_DecodeSerial)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecodeParallel)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RegretsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RegretsParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
