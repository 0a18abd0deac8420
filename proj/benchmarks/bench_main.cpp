#include <geoball/embedding_eval.hpp>
#include <geoball/hard_negatives.hpp>
#include <geoball/nball.hpp>
#include <geoball/projector.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace geoball;

namespace {

struct Balanced {
    Ontology o;
    Ich ich;
    HierarchyStats stats;
    EmbedConfig config;
    BallSpace space;

    explicit Balanced(std::vector<std::size_t> branching, std::size_t dim)
        : o(make_balanced_ontology(branching)), ich(compute_ich(o)), stats(compute_stats(o, ich))
    {
        config.dim = dim;
        config.gamma = -0.05;
        space = init_space(o.concepts(), stats, config);
    }
    EmbeddingProblem view() const { return {ich, o.disjoint_axioms(), stats}; }
};

void BM_LossGradients(benchmark::State& state)
{
    const Balanced b({2, 3, static_cast<std::size_t>(state.range(0))}, 50);
    for (auto _ : state) benchmark::DoNotOptimize(loss_gradients(b.space, b.view(), b.config));
    state.counters["concepts"] = static_cast<double>(b.o.size());
}
BENCHMARK(BM_LossGradients)->Arg(4)->Arg(16)->Arg(64);

void BM_TrainEmbedding(benchmark::State& state)
{
    Balanced b({2, 2, 5}, 16);
    b.config.epochs = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(train_embeddings(b.o, b.ich, b.stats, b.config));
}
BENCHMARK(BM_TrainEmbedding)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_ScoreEmbedding(benchmark::State& state)
{
    const Balanced b({2, 3, static_cast<std::size_t>(state.range(0))}, 50);
    for (auto _ : state) benchmark::DoNotOptimize(score_embedding(b.space, b.ich, b.o.leaves()));
}
BENCHMARK(BM_ScoreEmbedding)->Arg(8)->Arg(32);

void BM_KMeans(benchmark::State& state)
{
    std::mt19937_64 rng(1);
    std::normal_distribution<> n(0, 1);
    std::vector<Vec> pts(static_cast<std::size_t>(state.range(0)), Vec(50));
    for (auto& p : pts)
        for (auto& x : p) x = n(rng);
    const auto k = default_cluster_count(pts.size());
    for (auto _ : state) benchmark::DoNotOptimize(kmeans(pts, k, 42));
}
BENCHMARK(BM_KMeans)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_MlpForward(benchmark::State& state)
{
    const auto width = static_cast<std::size_t>(state.range(0));
    const auto mlp = Mlp::initialized({width, 128, 64, 16}, 3);
    const Vec f(width, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(mlp.forward(f));
}
BENCHMARK(BM_MlpForward)->Arg(256)->Arg(2048);

void BM_MlpBackward(benchmark::State& state)
{
    const auto width = static_cast<std::size_t>(state.range(0));
    const auto mlp = Mlp::initialized({width, 128, 64, 16}, 3);
    const Vec f(width, 0.5), pos(16, 0.1), neg(16, -0.1);
    const std::vector<BallRef> negs = {{neg, 1.0}};
    std::vector<double> grad(mlp.parameters().size());
    for (auto _ : state) {
        benchmark::DoNotOptimize(accumulate_parameter_gradient(mlp, f, {pos, 0.2}, negs, 1.0, 1.0, grad));
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_MlpBackward)->Arg(256)->Arg(2048);

void BM_Classify(benchmark::State& state)
{
    std::mt19937_64 rng(2);
    std::normal_distribution<> n(0, 1);
    const auto k = static_cast<std::size_t>(state.range(0));
    std::vector<Vec> centres(k, Vec(50));
    for (auto& c : centres)
        for (auto& x : c) x = n(rng);
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < k; ++i) cands.push_back({"c" + std::to_string(i), {centres[i], 0.5}});
    const Vec h(50, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(classify(h, cands));
}
BENCHMARK(BM_Classify)->Arg(5)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
