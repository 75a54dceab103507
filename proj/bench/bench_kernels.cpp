/*
 * Copyright 2026 The FairRank Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Serial reference kernels against their OpenMP counterparts. The trailing
// benchmark argument is the OpenMP thread count.

#include <omp.h>

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "fairrank/adversary.hpp"
#include "fairrank/data.hpp"
#include "fairrank/kernels.hpp"
#include "fairrank/mf_model.hpp"

namespace {

using namespace fairrank;

struct Workload {
  SyntheticData synth;
  InteractionDataset dataset;
  MfParams params;
  AdversaryParams psi;
  std::vector<double> scores;
  std::vector<ItemId> items;
};

const Workload& workload() {
  static const Workload w = [] {
    Workload x;
    SyntheticSpec spec;
    spec.num_items = 1000;
    spec.num_topics = 8;
    spec.personal_fraction = 0.5;
    x.synth = generate_synthetic(spec);
    x.dataset = split(x.synth.interactions, SplitRatios{}, 1);
    x.params = init_params(x.dataset.num_users, x.dataset.num_items, 32, 1);
    Rng rng(2);
    x.psi = init_adversary(4, 50, x.synth.catalog.num_groups(), rng);
    std::normal_distribution<double> n01;
    std::uniform_int_distribution<ItemId> item(0, static_cast<ItemId>(x.dataset.num_items - 1));
    for (int s = 0; s < 20000; ++s) {
      x.scores.push_back(n01(rng));
      x.items.push_back(item(rng));
    }
    return x;
  }();
  return w;
}

void BM_BatchGradientSerial(benchmark::State& state) {
  const auto& w = workload();
  AdversaryParams grad = w.psi.zeros_like();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernels::serial::adversary_batch_gradient(w.psi, w.scores, w.items, w.synth.catalog, grad));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(w.scores.size()));
}

void BM_BatchGradientOmp(benchmark::State& state) {
  const auto& w = workload();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  AdversaryParams grad = w.psi.zeros_like();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernels::adversary_batch_gradient(w.psi, w.scores, w.items, w.synth.catalog, grad));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(w.scores.size()));
}

void BM_InputGradientSerial(benchmark::State& state) {
  const auto& w = workload();
  std::vector<double> loss(w.scores.size()), d(w.scores.size());
  for (auto _ : state) {
    kernels::serial::adversary_input_gradient(w.psi, w.scores, w.items, w.synth.catalog, loss, d);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(w.scores.size()));
}

void BM_InputGradientOmp(benchmark::State& state) {
  const auto& w = workload();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  std::vector<double> loss(w.scores.size()), d(w.scores.size());
  for (auto _ : state) {
    kernels::adversary_input_gradient(w.psi, w.scores, w.items, w.synth.catalog, loss, d);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(w.scores.size()));
}

void BM_TopkSerial(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::serial::topk_lists(w.params, w.dataset, 15, true));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(w.dataset.num_users));
}

void BM_TopkOmp(benchmark::State& state) {
  const auto& w = workload();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::topk_lists(w.params, w.dataset, 15, true));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(w.dataset.num_users));
}

BENCHMARK(BM_BatchGradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientOmp)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_InputGradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_InputGradientOmp)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TopkSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TopkOmp)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
