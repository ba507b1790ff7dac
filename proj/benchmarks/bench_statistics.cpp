#include "vlad/detector.hpp"
#include "vlad/evaluation.hpp"
#include "vlad/models.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace vlad;

namespace {

std::vector<double> simplex(std::size_t m, std::mt19937_64& rng)
{
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> p(m);
    double sum = 0.0;
    for (double& v : p) sum += (v = ex(rng));
    for (double& v : p) v /= sum;
    return p;
}

void BM_DetectionScore(benchmark::State& state, ScoreVariant variant)
{
    std::mt19937_64 rng(1);
    const auto m = static_cast<std::size_t>(state.range(0));
    const ClassProbabilities a(simplex(m, rng)), c(simplex(m, rng));
    for (auto _ : state) benchmark::DoNotOptimize(detection_score(a, c, variant));
}
BENCHMARK_CAPTURE(BM_DetectionScore, vlad1, ScoreVariant::vlad1)->Arg(10)->Arg(400);
BENCHMARK_CAPTURE(BM_DetectionScore, vlad2, ScoreVariant::vlad2)->Arg(10)->Arg(400);

// Column means and softmax of an N x M similarity matrix.
void BM_ContextProbabilities(benchmark::State& state)
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    const std::size_t n = 32;
    const auto m = static_cast<std::size_t>(state.range(0));
    std::vector<double> v(n * m);
    for (double& x : v) x = nd(rng);
    const SimilarityMatrix s(n, m, v);
    for (auto _ : state) benchmark::DoNotOptimize(context_probabilities(average_similarity(s)));
}
BENCHMARK(BM_ContextProbabilities)->Arg(10)->Arg(400);

void BM_Calibrate(benchmark::State& state)
{
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
    for (double& x : scores) x = ex(rng);
    for (auto _ : state) benchmark::DoNotOptimize(calibrate_threshold(scores, 90.0));
}
BENCHMARK(BM_Calibrate)->Arg(1000)->Arg(100000);

void BM_MannWhitneyAuc(benchmark::State& state)
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    std::vector<double> clean(static_cast<std::size_t>(state.range(0))), adv(clean.size());
    for (double& x : clean) x = nd(rng);
    for (double& x : adv) x = nd(rng) + 0.5;
    for (auto _ : state) benchmark::DoNotOptimize(mann_whitney_auc(clean, adv));
}
BENCHMARK(BM_MannWhitneyAuc)->Arg(100)->Arg(10000);

}  // namespace

// The packaged benchmark_main archive carries LTO bytecode from another compiler release.
BENCHMARK_MAIN();
