#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "spre/index.hpp"
#include "spre/inference.hpp"
#include "spre/rng.hpp"
#include "spre/synth.hpp"
#include "spre/types.hpp"

namespace {

std::vector<spre::IndexedSample> make_entries(std::size_t count, int dim) {
  spre::rng::SmallRng gen(404);
  std::vector<spre::IndexedSample> entries;
  entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    spre::EmbeddingVector v;
    v.values.resize(static_cast<std::size_t>(dim));
    for (auto& x : v.values) {
      x = static_cast<float>(gen.next_signed_unit());
    }
    entries.push_back({"s#" + std::to_string(i), "", "r", std::move(v)});
  }
  return entries;
}

void BM_NormalizeEntity(benchmark::State& state) {
  const std::string surface = "  The  Grand   Central Terminal of NEW york ";
  for (auto _ : state) {
    benchmark::DoNotOptimize(spre::normalize_text(surface));
  }
}
BENCHMARK(BM_NormalizeEntity);

void BM_ParseBracketedList(benchmark::State& state) {
  const std::string reply =
      "Sure: [situated at, found within, positioned in, nestled amongst, geographically placed, "
      "lying in, set within, residing at, located near, anchored in]";
  for (auto _ : state) {
    benchmark::DoNotOptimize(spre::parse_bracketed_list(reply));
  }
}
BENCHMARK(BM_ParseBracketedList);

void BM_ParseSampleBlocks(benchmark::State& state) {
  std::string completion;
  for (int i = 0; i < 10; ++i) {
    completion += "Sentence: The harbor office " + std::to_string(i) +
                  " oversees the ferry pier " + std::to_string(i) + ".\n";
    completion += "Relation: [(harbor office " + std::to_string(i) + ", operator, ferry pier " +
                  std::to_string(i) + ")]\n\n";
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(spre::parse_sample_blocks(completion));
  }
}
BENCHMARK(BM_ParseSampleBlocks);

void BM_Cosine(benchmark::State& state) {
  auto entries = make_entries(2, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(spre::cosine(entries[0].vector, entries[1].vector));
  }
}
BENCHMARK(BM_Cosine)->Arg(64)->Arg(1536);

void BM_Retrieve(benchmark::State& state) {
  auto entries = make_entries(static_cast<std::size_t>(state.range(0)), 64);
  spre::EmbeddingVector query = entries.front().vector;
  auto index = spre::DemonstrationIndex::from_entries(std::move(entries));
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.retrieve_by_vector(query, 10));
  }
}
BENCHMARK(BM_Retrieve)->Arg(1000)->Arg(10000);

void BM_ExtractAnswer(benchmark::State& state) {
  std::vector<spre::RelationDef> candidates;
  for (int i = 0; i < 15; ++i) {
    std::string name = "relation variant number " + std::to_string(i);
    candidates.push_back({name, name, "", "bench"});
  }
  const std::string raw =
      "After weighing the context, the best answer is relation variant number 11, because the "
      "sentence strongly implies it.";
  for (auto _ : state) {
    benchmark::DoNotOptimize(spre::extract_answer(raw, candidates, {}));
  }
}
BENCHMARK(BM_ExtractAnswer);

}  // namespace

BENCHMARK_MAIN();
