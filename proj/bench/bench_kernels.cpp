// Serial reference vs OpenMP kernel. Argument 0 runs Exec::serial, 1 runs
// Exec::parallel.

#include <benchmark/benchmark.h>

#include <random>

#include "irs/interference_elimination.hpp"
#include "irs/room_acoustics.hpp"
#include "irs/source_enhancement.hpp"

using namespace irs;

namespace {

dsp::Exec exec_of(const benchmark::State& state) { return state.range(0) ? dsp::Exec::parallel : dsp::Exec::serial; }

Signal noise(int channels, std::size_t n, std::uint64_t seed) {
  Signal x(channels, n, 24000.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  for (double& v : x.data()) v = d(rng);
  return x;
}

void BM_SimulateMicRirs(benchmark::State& state) {
  room::RoomSpec r;
  r.dims = {6, 5, 3};
  r.rt60 = 0.25;
  r.absorption_model = room::AbsorptionModel::sabine;
  room::Placement p;
  p.source_pos = {1.5, 1.8, 1.2};
  p.array_pos = {3.2, 2.6, 1.4};
  const auto arr = array::default_em32();
  room::SynthesisOptions o;
  o.exec = exec_of(state);
  const auto len = room::min_rir_length(r, 24000.0);
  for (auto _ : state) benchmark::DoNotOptimize(room::simulate_mic_rirs(r, p, arr, len, o));
}
BENCHMARK(BM_SimulateMicRirs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SpatialCovariance(benchmark::State& state) {
  const auto spec = dsp::stft(noise(4, 24000 * 10, 1), 480, 240);
  for (auto _ : state) benchmark::DoNotOptimize(dsp::spatial_covariance(spec, 0, spec.frames, exec_of(state)));
}
BENCHMARK(BM_SpatialCovariance)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_OverlapRatio(benchmark::State& state) {
  const auto x = noise(4, 24000 * 5, 2);
  for (auto _ : state) benchmark::DoNotOptimize(elim::overlap_ratio(x, {}, exec_of(state)));
}
BENCHMARK(BM_OverlapRatio)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Cgmm(benchmark::State& state) {
  const auto spec = dsp::stft(noise(4, 24000 * 2, 3), 480, 240);
  for (auto _ : state) benchmark::DoNotOptimize(enhance::cgmm(spec, {}, exec_of(state)));
}
BENCHMARK(BM_Cgmm)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
