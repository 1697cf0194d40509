#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "pcgnet/autodiff.hpp"
#include "pcgnet/features_mel.hpp"
#include "pcgnet/model.hpp"
#include "pcgnet/signal_dsp.hpp"

using namespace pcgnet;

namespace {

Waveform noise_clip(std::size_t n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Waveform w;
  w.samples.resize(n);
  for (auto& v : w.samples) v = g(rng);
  return w;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

static void BM_WaveletDenoise(benchmark::State& state) {
  const auto clip = noise_clip(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dsp::wavelet_denoise(clip, 4));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WaveletDenoise)->Arg(10000)->Arg(30000);

static void BM_ZeroPhaseFilter(benchmark::State& state) {
  const auto clip = noise_clip(static_cast<std::size_t>(state.range(0)));
  const auto spec = dsp::design_butterworth_lowpass(5, 500.0, 2000);
  for (auto _ : state) benchmark::DoNotOptimize(dsp::apply_iir_zero_phase(clip, spec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ZeroPhaseFilter)->Arg(10000)->Arg(30000);

static void BM_LogMel(benchmark::State& state) {
  const auto clip = noise_clip(10000);
  const mel::MelConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(mel::log_mel(clip, cfg));
}
BENCHMARK(BM_LogMel);

static void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const std::size_t cin = 16, cout = 16, h = 64, w = 40;
  ad::Parameter weight("w", {cout, cin, 3, 3});
  ad::Parameter bias("b", {cout});
  weight.value = random_values(weight.value.size(), 1);
  const auto input = random_values(batch * cin * h * w, 2);
  for (auto _ : state) {
    ad::Tape tape;
    auto x = tape.constant({batch, cin, h, w}, input);
    auto y = ad::conv2d_same(x, tape.param(weight), tape.param(bias));
    tape.backward(ad::sum(y));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_ModelTrainStep(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  model::HInfModel net(model::ModelConfig{}, 3);
  const auto& shapes = net.shapes();
  const auto input = random_values(batch * shapes.n_mels * shapes.padded_frames, 4);
  for (auto _ : state) {
    ad::Tape tape;
    auto p = net.forward(tape, input, batch, ad::NormMode::kTrain);
    tape.backward(ad::mean(p));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_ModelTrainStep)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
