// Serial vs parallel kernels. Thread count comes from OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include <random>

#include "evolab/kernels.hpp"
#include "evolab/operator_calculus.hpp"
#include "evolab/robin_heat.hpp"
#include "evolab/volterra.hpp"

using namespace evolab;

namespace {

NonAutonomousForm robin(int n) {
  RobinProblem p;
  p.n = n;
  return robin_form(p);
}

Mat random_block(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Mat X(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) X(i, j) = cplx(g(rng), g(rng));
  return X;
}

void contour(benchmark::State& st, ExecutionPolicy pol) {
  const auto f = robin(static_cast<int>(st.range(0)));
  const auto nodes = contour_nodes(semigroup_contour(f, 0.3, 0.05));
  std::vector<cplx> fv(nodes.size());
  for (size_t k = 0; k < nodes.size(); ++k) fv[k] = std::exp(-0.05 * nodes[k].lambda);
  const Mat X = random_block(f.dim(), f.dim(), 1);
  const Mat A = f.at(0.3), G = f.triple().gram_H();
  for (auto _ : st) benchmark::DoNotOptimize(contour_sum(A, G, nodes, fv, X, pol));
  st.counters["nodes"] = static_cast<double>(nodes.size());
}

void volterra(benchmark::State& st, ExecutionPolicy pol) {
  const auto f = robin(static_cast<int>(st.range(0)));
  VolterraDiscretization d(f, 0.0, {0.25, 0.5, 0.75, 1.0});
  std::vector<Mat> h;
  for (size_t i = 0; i < d.nodes().size(); ++i) h.push_back(random_block(f.dim(), 4, static_cast<unsigned>(i)));
  for (auto _ : st) benchmark::DoNotOptimize(d.apply(h, pol));
}

} // namespace

BENCHMARK_CAPTURE(contour, serial, ExecutionPolicy::serial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(contour, parallel, ExecutionPolicy::parallel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(volterra, serial, ExecutionPolicy::serial)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(volterra, parallel, ExecutionPolicy::parallel)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
