#include <random>

#include <benchmark/benchmark.h>

#include "foglet/scheduler.hpp"
#include "support.hpp"

using namespace foglet;

namespace {

struct Fixture {
  Topology topo;
  Inventory inventory;
  DeploymentRequest request;
  SchedulerConfig config;

  explicit Fixture(int nodes)
      : topo(make_topology(nodes)),
        inventory(topo),
        request(validate_request(request_doc())) {}

  static json request_doc() {
    json reqs = json::array();
    reqs.push_back({{"compute", {{"vcpus", 1}, {"ram_mib", 512}, {"disk_gib", 5}}}});
    reqs.push_back({{"network", {{"profile", "InteractiveApplication"}, {"endpoint", "ep0"}}}});
    reqs.push_back({{"access_rights", {{"label", "trusted"}}}});
    return {{"component", "bench"}, {"requirements", reqs}};
  }

  static Topology make_topology(int nodes) {
    std::mt19937_64 rng(42);
    return Topology::load(test::random_topology_doc(rng, nodes, nodes / 2));
  }
};

void run(benchmark::State& state, bool parallel) {
  Fixture f(static_cast<int>(state.range(0)));
  f.config.parallel = parallel;
  const auto view = f.inventory.snapshot();
  for (auto _ : state) {
    auto d = parallel ? decide_parallel(f.request, *view, f.topo, f.config)
                      : decide_serial(f.request, *view, f.topo, f.config);
    benchmark::DoNotOptimize(d);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DecideSerial(benchmark::State& state) { run(state, false); }
void BM_DecideParallel(benchmark::State& state) { run(state, true); }

}  // namespace

BENCHMARK(BM_DecideSerial)->Arg(16)->Arg(128)->Arg(512)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DecideParallel)->Arg(16)->Arg(128)->Arg(512)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
