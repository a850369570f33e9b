// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "spectralkd/dataset.hpp"
#include "spectralkd/distill.hpp"
#include "spectralkd/fft.hpp"
#include "spectralkd/model.hpp"
#include "spectralkd/spectral.hpp"

using namespace spectralkd;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (auto& x : v) x = dist(gen);
  return v;
}

void BM_Fft1d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto re = noise(n, 1);
  std::vector<Complex> v(re.begin(), re.end());
  for (auto _ : state) benchmark::DoNotOptimize(fft1d(v, false));
  state.SetComplexityN(state.range(0));
}
// powers of two take the radix-2 path, the rest go through Bluestein
BENCHMARK(BM_Fft1d)->Arg(64)->Arg(192)->Arg(256)->Arg(384)->Arg(512)->Arg(768);

void BM_DftNaive(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto re = noise(n, 2);
  std::vector<Complex> v(re.begin(), re.end());
  for (auto _ : state) benchmark::DoNotOptimize(dft_naive(v, false));
}
BENCHMARK(BM_DftNaive)->Arg(64)->Arg(192);

// A DeiT-Tiny-sized layer dump: 192 channels on a 14x14 grid.
void BM_ChannelSpectrum(benchmark::State& state) {
  const FeatureDims d{static_cast<std::size_t>(state.range(0)), 192, 14, 14};
  const FeatureMap x(d, noise(d.size(), 3));
  for (auto _ : state) benchmark::DoNotOptimize(channel_spectrum(x, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}
BENCHMARK(BM_ChannelSpectrum)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_FftLoss(benchmark::State& state) {
  const FeatureMap s({8, 192, 14, 14}, noise(8 * 192 * 196, 4));
  const FeatureMap t({8, 384, 14, 14}, noise(8 * 384 * 196, 5));
  for (auto _ : state) benchmark::DoNotOptimize(fft_loss(s, t));
}
BENCHMARK(BM_FftLoss)->Unit(benchmark::kMillisecond);

void BM_StudentStep(benchmark::State& state) {
  const auto params = init_params(default_student_config());
  const auto data = synth_dataset(6, 64);
  Matrix g(64, 10, 1.0 / 64);
  for (auto _ : state) {
    const auto out = forward(params, data);
    benchmark::DoNotOptimize(backward(params, out.cache, g, {}));
  }
}
BENCHMARK(BM_StudentStep)->Unit(benchmark::kMillisecond);

void BM_TeacherForward(benchmark::State& state) {
  const auto params = init_params(default_teacher_config());
  const auto data = synth_dataset(7, 64);
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, data));
}
BENCHMARK(BM_TeacherForward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
