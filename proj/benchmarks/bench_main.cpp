#include <benchmark/benchmark.h>

#include "certdp/bounds.hpp"
#include "certdp/inference.hpp"
#include "certdp/rng.hpp"
#include "certdp/sim.hpp"

using namespace certdp;

namespace {

const ModelSpec kSpec{};

Panel bench_panel(std::size_t T) {
    Panel p;
    for (std::size_t t = 0; t < T; ++t) {
        p.obs.push_back({20.0 * rng::uniform(1, {t, 0}), rng::uniform(1, {t, 1}) < 0.4 ? 1 : 0});
    }
    return p;
}

void BM_BellmanApply(benchmark::State& state) {
    const auto model = make_model(kSpec);
    const auto knots = linspace(0, 20, static_cast<std::size_t>(state.range(0)));
    const DrawSet draws = DrawSet::per_point(1, knots.size(), 2, 100);
    const BellmanPlan plan(*model, knots, draws, knots);
    const auto u = plan.utilities(*model, kSpec.theta);
    ValueTable v(knots, 2);
    std::vector<double> out(knots.size() * 2);
    for (auto _ : state) {
        plan.apply(v, u, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(plan.n_nodes()));
}
BENCHMARK(BM_BellmanApply)->Arg(10)->Arg(100)->Arg(1001);

void BM_Solve(benchmark::State& state) {
    const auto model = make_model(kSpec);
    const auto knots = linspace(0, 20, static_cast<std::size_t>(state.range(0)));
    const BellmanPlan plan(*model, knots, DrawSet::common(1, 100), knots);
    for (auto _ : state) benchmark::DoNotOptimize(solve_value_function(*model, kSpec.theta, plan));
}
BENCHMARK(BM_Solve)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Theorem1Sup(benchmark::State& state) {
    const auto model = make_model(kSpec);
    const auto knots = linspace(0, 20, 10);
    const DrawSet draws = DrawSet::common(1, 100);
    const ValueTable v = solve_value_function(*model, kSpec.theta, BellmanPlan(*model, knots, draws, knots)).table;
    const BellmanPlan plan(*model, linspace(0, 20, 1001), draws, knots);
    for (auto _ : state) benchmark::DoNotOptimize(theorem1_sup(plan, v, plan.utilities(*model, kSpec.theta)));
}
BENCHMARK(BM_Theorem1Sup)->Unit(benchmark::kMillisecond);

void BM_Refine(benchmark::State& state) {
    const auto model = make_model(kSpec);
    const auto knots = linspace(0, 20, 10);
    const DrawSet draws = DrawSet::common(1, 100);
    const ValueTable v = solve_value_function(*model, kSpec.theta, BellmanPlan(*model, knots, draws, knots)).table;
    const double tau = 0.05 * b_bar(v, *model, kSpec.theta);
    for (auto _ : state) benchmark::DoNotOptimize(refine_bound(v, *model, kSpec.theta, tau, draws));
}
BENCHMARK(BM_Refine)->Unit(benchmark::kMillisecond);

void BM_Envelope(benchmark::State& state) {
    const auto model = make_model(kSpec);
    const auto knots = linspace(0, 20, 10);
    const ValueTable v = solve_value_function(*model, kSpec.theta, knots, 100, 1e-9, 1000, 1).table;
    const Panel p = bench_panel(static_cast<std::size_t>(state.range(0)));
    BoundCertificate cert;
    cert.B_upper = 0.1;
    for (auto _ : state) benchmark::DoNotOptimize(loglik_envelope(p, kSpec.theta, *model, v, cert));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Envelope)->Arg(1000)->Arg(5000);

void BM_LikelihoodEvaluate(benchmark::State& state) {
    const auto model = make_model(kSpec);
    EstimationSettings s;
    s.knots = static_cast<std::size_t>(state.range(0));
    const LikelihoodProblem problem(*model, bench_panel(1000), s);
    for (auto _ : state) benchmark::DoNotOptimize(problem.evaluate(kSpec.theta));
}
BENCHMARK(BM_LikelihoodEvaluate)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
