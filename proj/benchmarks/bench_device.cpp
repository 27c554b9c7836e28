#include <benchmark/benchmark.h>

#include "vtsim/device.hpp"

using namespace vtsim;

namespace {

const ModelCard& card() {
    static ModelCard c = ModelCard::load(VTSIM_MODEL_CARD);
    return c;
}

void BM_threshold_voltage(benchmark::State& state) {
    const MosfetParams& p = card().nmos;
    double v = -0.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(threshold_voltage(p, v));
        v = v > 0.3 ? -0.3 : v + 1e-4;
    }
}
BENCHMARK(BM_threshold_voltage);

void BM_mosfet_conductances(benchmark::State& state) {
    const MosfetParams& p = state.range(0) ? card().pmos : card().nmos;
    OperatingPoint op{0.15, 0.12, 0.05};
    for (auto _ : state) {
        benchmark::DoNotOptimize(mosfet_conductances(p, op));
        op.v_gs = op.v_gs > 0.25 ? 0.05 : op.v_gs + 1e-5;
    }
}
BENCHMARK(BM_mosfet_conductances)->Arg(0)->Arg(1);

void BM_diode_current(benchmark::State& state) {
    DiodeParams d{1e-18, 1.0};
    const double ut = thermal_voltage(300.0);
    double v = -0.2;
    for (auto _ : state) {
        benchmark::DoNotOptimize(diode_current(d, v, ut));
        v = v > 0.4 ? -0.2 : v + 1e-5;
    }
}
BENCHMARK(BM_diode_current);

}  // namespace

BENCHMARK_MAIN();
