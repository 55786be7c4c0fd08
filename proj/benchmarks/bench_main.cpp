#include <benchmark/benchmark.h>

#include "provalert/graph_analytics.hpp"
#include "provalert/pipeline.hpp"
#include "provalert/synth.hpp"

namespace {

provalert::ProvenanceGraph scenario_graph(int scale) {
  provalert::Scenario s = provalert::generate_scenario(
      provalert::ScenarioKind::TurlaChain, 7, scale);
  provalert::ProvenanceGraph g = provalert::build_graph(s.events);
  g = provalert::reduce_irrelevant(std::move(g));
  return provalert::to_dag(std::move(g));
}

void BM_PageRank(benchmark::State& state) {
  auto g = scenario_graph(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto pr = provalert::pagerank(g);
    benchmark::DoNotOptimize(pr);
  }
}
BENCHMARK(BM_PageRank)->Arg(200)->Arg(1000);

void BM_Betweenness(benchmark::State& state) {
  auto g = scenario_graph(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto cb = provalert::betweenness_raw(g);
    benchmark::DoNotOptimize(cb);
  }
}
BENCHMARK(BM_Betweenness)->Arg(200)->Arg(1000);

void BM_Pipeline(benchmark::State& state) {
  provalert::Scenario s = provalert::generate_scenario(
      provalert::ScenarioKind::TurlaChain, 7,
      static_cast<int>(state.range(0)));
  std::vector<std::string> lines;
  lines.reserve(s.events.size());
  for (const auto& e : s.events)
    lines.push_back(provalert::render_event_line(e));
  provalert::RuleSet rules =
      provalert::load_rules(RULES_PATH, provalert::RiskScoreTable{});
  for (auto _ : state) {
    auto events = provalert::normalize_stream(lines).events;
    auto result = provalert::run_pipeline(events, rules, provalert::RunConfig{});
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_Pipeline)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
