// Serial reference vs OpenMP batch node-feature extraction and readout training.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <map>

#include "gks/corpus.hpp"
#include "gks/kernels.hpp"
#include "gks/selector.hpp"

namespace {

struct Workload {
  gks::Corpus corpus;
  std::vector<gks::SelectionQuery> queries;
  std::vector<std::size_t> golden;
};

const Workload& workload(std::size_t candidates) {
  static std::map<std::size_t, Workload> cache;
  auto it = cache.find(candidates);
  if (it != cache.end()) return it->second;
  Workload w;
  gks::SynthParams params;
  params.n_dialogs = 200;
  params.n_candidates = candidates;
  params.vocab_size = std::max<std::size_t>(512, 4 * candidates);
  params.detect_marker_rate = 0.0;
  w.corpus = gks::synth_corpus(42, params);
  auto& stored = cache.emplace(candidates, std::move(w)).first->second;
  for (const auto& inst : gks::selection_instances(stored.corpus)) {
    stored.queries.push_back({inst.question, inst.candidates});
    stored.golden.push_back(inst.golden_index);
  }
  return stored;
}

void BM_NodeFeaturesSerial(benchmark::State& state) {
  const auto& w = workload(static_cast<std::size_t>(state.range(0)));
  const gks::HashedGaussianProvider provider(42, 64);
  const auto bank = gks::KernelBank::standard();
  for (auto _ : state) benchmark::DoNotOptimize(gks::serial::batch_node_features(w.queries, provider, bank));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * w.queries.size()));
}

void BM_NodeFeaturesParallel(benchmark::State& state) {
  const auto& w = workload(static_cast<std::size_t>(state.range(0)));
  const gks::HashedGaussianProvider provider(42, 64);
  const auto bank = gks::KernelBank::standard();
  for (auto _ : state) benchmark::DoNotOptimize(gks::batch_node_features(w.queries, provider, bank));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * w.queries.size()));
}

void BM_FitReadout(benchmark::State& state) {
  const auto& w = workload(8);
  const gks::HashedGaussianProvider provider(42, 64);
  const auto bank = gks::KernelBank::standard();
  const auto features = gks::batch_node_features(w.queries, provider, bank);
  gks::SelectorHyper hyper;
  hyper.attention = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(gks::fit_readout(features, w.golden, bank, hyper));
}

}  // namespace

BENCHMARK(BM_NodeFeaturesSerial)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NodeFeaturesParallel)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitReadout)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
