#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vtsim/waveform.hpp"

namespace vtsim {

struct Window {
    double t_start = 0.0;
    double t_end = 0.0;
    double span() const { return t_end - t_start; }
};

struct DelayResult {
    double tplh = 0.0;  // s, output low->high
    double tphl = 0.0;  // s, output high->low
    double tp_avg = 0.0;
    int pairs_lh = 0;
    int pairs_hl = 0;
};

// 50%-crossing propagation delay. Each output crossing inside the window is
// paired with the latest input crossing that precedes it (the immediate
// cause; for an inverting gate that is the opposite-direction edge), and
// complete pairs are averaged per direction. Throws NoTransition when the
// output never crosses 50% in one of the directions.
DelayResult propagation_delay(const Waveform& input, const Waveform& output, double v_low,
                              double v_high, Window w);

// P = vdd * mean(i) over the window, trapezoidal quadrature on the recorded
// (possibly non-uniform) samples. Current drawn from the supply is positive.
// Throws WindowTooShort when the window is degenerate or not covered.
double average_power(double vdd, const Waveform& i_vdd, Window w);

struct NoiseMargins {
    double voh = 0, vol = 0, vih = 0, vil = 0, nmh = 0, nml = 0;
};

// Unity-gain-point margins from a monotone non-increasing VTC sampled as
// (v_in, v_out) pairs, >= 20 points. V_IL/V_IH sit where the finite-
// difference slope crosses -1. Throws NotInverting if the slope never
// reaches -1.
NoiseMargins noise_margins(std::span<const std::pair<double, double>> vtc);

struct RiseFall {
    double t_rise = 0.0;  // 10% -> 90%
    double t_fall = 0.0;  // 90% -> 10%
    int rises = 0;
    int falls = 0;
};

RiseFall rise_fall_times(const Waveform& w, double v_low, double v_high, Window win);

struct LogicLevels {
    double voh = 0.0;  // min over expected-high samples
    double vol = 0.0;  // max over expected-low samples
    bool pass = false;  // voh > 0.9 vdd and vol < 0.1 vdd
};

LogicLevels logic_levels(const Waveform& w, std::span<const double> high_times,
                         std::span<const double> low_times, double vdd);

// Full per-simulation record used in experiment tables.
struct MeasurementReport {
    double tplh = 0, tphl = 0, tp_avg = 0;
    double t_rise = 0, t_fall = 0;
    double p_avg = 0;       // total (supply + bias) average power
    double p_supply = 0;
    double p_bias = 0;
    double pdp = 0;         // p_avg * tp_avg
    double voh = 0, vol = 0;
    double nmh = 0, nml = 0;  // filled when a VTC was measured
    bool logic_pass = false;
    Window window;

    std::string to_text() const;
};

}  // namespace vtsim
