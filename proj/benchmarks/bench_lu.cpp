#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "vtsim/linalg.hpp"

using namespace vtsim;

namespace {

Matrix random_spd_ish(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = u(rng);
        m(i, i) += n;  // diagonally dominant, never singular
    }
    return m;
}

void BM_lu_factor_solve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Matrix base = random_spd_ish(n, 42);
    std::vector<double> rhs(static_cast<std::size_t>(n), 1.0);
    for (auto _ : state) {
        Matrix m = base;
        std::vector<int> perm;
        benchmark::DoNotOptimize(lu_factor(m, perm));
        std::vector<double> b = rhs;
        lu_solve(m, perm, b);
        benchmark::DoNotOptimize(b.data());
    }
    state.SetComplexityN(n);
}
// MNA systems in this project span roughly 3..30 unknowns.
BENCHMARK(BM_lu_factor_solve)->Arg(4)->Arg(9)->Arg(16)->Arg(32)->Complexity();

}  // namespace

BENCHMARK_MAIN();
