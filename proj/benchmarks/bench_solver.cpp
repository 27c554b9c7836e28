#include <benchmark/benchmark.h>

#include "vtsim/gates.hpp"
#include "vtsim/solver.hpp"

using namespace vtsim;

namespace {

GateSpec inverter_spec(BodyStyle style, double van) {
    GateSpec g;
    g.gate = GateKind::Inverter;
    g.style = style;
    g.v_an = van;
    g.v_ap = van;
    g.card = ModelCard::load(VTSIM_MODEL_CARD);
    return g;
}

void BM_dc_operating_point(benchmark::State& state) {
    Circuit c = build_gate(inverter_spec(BodyStyle::Vtmos, 0.1));
    for (auto _ : state) {
        Simulator sim(c);
        benchmark::DoNotOptimize(sim.dc_operating_point());
    }
}
BENCHMARK(BM_dc_operating_point);

void BM_vtc_sweep_101(benchmark::State& state) {
    Circuit c = build_gate(inverter_spec(BodyStyle::Cmos, 0.0));
    for (auto _ : state) {
        Simulator sim(c);
        benchmark::DoNotOptimize(sim.dc_sweep("vin", 0.0, 0.2, 0.002));
    }
}
BENCHMARK(BM_vtc_sweep_101);

void BM_transient_one_period(benchmark::State& state) {
    Circuit c = build_gate(inverter_spec(BodyStyle::Vtmos, 0.2));
    std::size_t points = 0;
    for (auto _ : state) {
        Simulator sim(c);
        TransientResult tr = sim.transient(10e-6);
        points += tr.times.size();
        benchmark::DoNotOptimize(tr.times.data());
    }
    state.counters["accepted_points"] =
        benchmark::Counter(static_cast<double>(points), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_transient_one_period);

}  // namespace

BENCHMARK_MAIN();
