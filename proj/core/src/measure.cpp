#include "vtsim/measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vtsim/errors.hpp"
#include "vtsim/util.hpp"

namespace vtsim {

namespace {

struct Crossing {
    double time;
    bool rising;
};

// Interpolated level crossings inside the window, in time order.
std::vector<Crossing> find_crossings(const Waveform& w, double level, Window win) {
    std::vector<Crossing> out;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        double a = w.values[i] - level;
        double b = w.values[i + 1] - level;
        if (a == 0.0 || a * b >= 0.0) continue;
        double frac = a / (a - b);
        double t = w.times[i] + frac * (w.times[i + 1] - w.times[i]);
        if (t < win.t_start || t > win.t_end) continue;
        out.push_back({t, b > a});
    }
    return out;
}

double interpolate_integral(const Waveform& w, Window win) {
    // Trapezoid over recorded samples, with interpolated window endpoints.
    double acc = 0.0;
    double t_prev = win.t_start;
    double v_prev = w.sample(win.t_start);
    for (std::size_t i = 0; i < w.size(); ++i) {
        double t = w.times[i];
        if (t <= win.t_start) continue;
        if (t >= win.t_end) break;
        acc += 0.5 * (w.values[i] + v_prev) * (t - t_prev);
        t_prev = t;
        v_prev = w.values[i];
    }
    acc += 0.5 * (w.sample(win.t_end) + v_prev) * (win.t_end - t_prev);
    return acc;
}

}  // namespace

DelayResult propagation_delay(const Waveform& input, const Waveform& output, double v_low,
                              double v_high, Window w) {
    const double mid = 0.5 * (v_low + v_high);
    // Input crossings may sit slightly before the window (they cause the
    // first in-window output edge), so search the full record for them.
    Window full{-1e300, 1e300};
    auto in_x = find_crossings(input, mid, full);
    auto out_x = find_crossings(output, mid, w);

    if (out_x.empty()) throw NoTransition("output never crosses 50% inside the window");

    DelayResult res;
    for (const auto& oc : out_x) {
        // Latest input crossing strictly before the output crossing.
        const Crossing* cause = nullptr;
        for (const auto& ic : in_x) {
            if (ic.time < oc.time) cause = &ic;
            else break;
        }
        if (!cause) continue;
        double d = oc.time - cause->time;
        if (oc.rising) {
            res.tplh += d;
            res.pairs_lh += 1;
        } else {
            res.tphl += d;
            res.pairs_hl += 1;
        }
    }
    if (res.pairs_lh == 0) throw NoTransition("no complete low->high output transition");
    if (res.pairs_hl == 0) throw NoTransition("no complete high->low output transition");
    res.tplh /= res.pairs_lh;
    res.tphl /= res.pairs_hl;
    res.tp_avg = 0.5 * (res.tplh + res.tphl);
    return res;
}

double average_power(double vdd, const Waveform& i_vdd, Window w) {
    if (!(w.span() > 0)) throw WindowTooShort("measurement window is empty");
    if (i_vdd.size() < 2 || i_vdd.times.front() > w.t_start + 1e-18 ||
        i_vdd.times.back() < w.t_end - 1e-18) {
        throw WindowTooShort("waveform does not cover the measurement window");
    }
    return vdd * interpolate_integral(i_vdd, w) / w.span();
}

NoiseMargins noise_margins(std::span<const std::pair<double, double>> vtc) {
    if (vtc.size() < 20) throw MeasureError("VTC needs at least 20 points");
    for (std::size_t i = 0; i + 1 < vtc.size(); ++i) {
        if (vtc[i + 1].first <= vtc[i].first)
            throw MeasureError("VTC inputs must be strictly increasing");
        if (vtc[i + 1].second > vtc[i].second + 1e-9)
            throw MeasureError("VTC must be monotone non-increasing");
    }

    // Segment slopes attributed to segment midpoints.
    std::vector<double> mids(vtc.size() - 1), slopes(vtc.size() - 1);
    for (std::size_t i = 0; i + 1 < vtc.size(); ++i) {
        mids[i] = 0.5 * (vtc[i].first + vtc[i + 1].first);
        slopes[i] = (vtc[i + 1].second - vtc[i].second) / (vtc[i + 1].first - vtc[i].first);
    }

    auto interp_at = [&](std::size_t i) {
        // Slope crosses -1 between midpoints i and i+1.
        double f = (-1.0 - slopes[i]) / (slopes[i + 1] - slopes[i]);
        return mids[i] + f * (mids[i + 1] - mids[i]);
    };

    NoiseMargins nm;
    bool found_il = false, found_ih = false;
    for (std::size_t i = 0; i + 1 < slopes.size(); ++i) {
        if (!found_il && slopes[i] >= -1.0 && slopes[i + 1] < -1.0) {
            nm.vil = interp_at(i);
            found_il = true;
        }
        if (slopes[i] < -1.0 && slopes[i + 1] >= -1.0) {
            nm.vih = interp_at(i);
            found_ih = true;  // keep the last such crossing
        }
    }
    if (!found_il && slopes.front() < -1.0) {
        nm.vil = mids.front();  // already steep at the first segment
        found_il = true;
    }
    if (!found_ih && slopes.back() < -1.0) {
        nm.vih = mids.back();
        found_ih = true;
    }
    if (!found_il || !found_ih) throw NotInverting("VTC slope never reaches -1");

    nm.voh = vtc.front().second;
    nm.vol = vtc.back().second;
    nm.nmh = nm.voh - nm.vih;
    nm.nml = nm.vil - nm.vol;
    return nm;
}

RiseFall rise_fall_times(const Waveform& w, double v_low, double v_high, Window win) {
    const double span = v_high - v_low;
    const double v10 = v_low + 0.1 * span;
    const double v90 = v_low + 0.9 * span;
    auto x10 = find_crossings(w, v10, win);
    auto x90 = find_crossings(w, v90, win);

    RiseFall rf;
    // Rising: each upward 90% crossing pairs with the latest upward 10%
    // crossing before it; falling mirrors with downward crossings.
    for (const auto& hi : x90) {
        if (!hi.rising) continue;
        const Crossing* start = nullptr;
        for (const auto& lo : x10) {
            if (lo.rising && lo.time < hi.time) start = &lo;
            if (lo.time >= hi.time) break;
        }
        if (start) {
            rf.t_rise += hi.time - start->time;
            rf.rises += 1;
        }
    }
    for (const auto& lo : x10) {
        if (lo.rising) continue;
        const Crossing* start = nullptr;
        for (const auto& hi : x90) {
            if (!hi.rising && hi.time < lo.time) start = &hi;
            if (hi.time >= lo.time) break;
        }
        if (start) {
            rf.t_fall += lo.time - start->time;
            rf.falls += 1;
        }
    }
    if (rf.rises == 0 && rf.falls == 0) throw NoTransition("no full swing inside the window");
    if (rf.rises > 0) rf.t_rise /= rf.rises;
    if (rf.falls > 0) rf.t_fall /= rf.falls;
    return rf;
}

LogicLevels logic_levels(const Waveform& w, std::span<const double> high_times,
                         std::span<const double> low_times, double vdd) {
    if (high_times.empty() || low_times.empty())
        throw MeasureError("logic_levels needs sample times for both levels");
    LogicLevels out;
    out.voh = 1e300;
    out.vol = -1e300;
    for (double t : high_times) out.voh = std::min(out.voh, w.sample(t));
    for (double t : low_times) out.vol = std::max(out.vol, w.sample(t));
    out.pass = out.voh > 0.9 * vdd && out.vol < 0.1 * vdd;
    return out;
}

std::string MeasurementReport::to_text() const {
    std::ostringstream os;
    os << "window      [" << format_table(window.t_start) << ", " << format_table(window.t_end)
       << "] s\n";
    os << "tplh        " << format_table(tplh) << " s\n";
    os << "tphl        " << format_table(tphl) << " s\n";
    os << "tp_avg      " << format_table(tp_avg) << " s\n";
    os << "t_rise      " << format_table(t_rise) << " s\n";
    os << "t_fall      " << format_table(t_fall) << " s\n";
    os << "p_supply    " << format_table(p_supply) << " W\n";
    os << "p_bias      " << format_table(p_bias) << " W\n";
    os << "p_total     " << format_table(p_avg) << " W\n";
    os << "pdp         " << format_table(pdp) << " J\n";
    os << "voh         " << format_table(voh) << " V\n";
    os << "vol         " << format_table(vol) << " V\n";
    if (nmh != 0 || nml != 0) {
        os << "nmh         " << format_table(nmh) << " V\n";
        os << "nml         " << format_table(nml) << " V\n";
    }
    os << "logic       " << (logic_pass ? "pass" : "FAIL") << '\n';
    return os.str();
}

}  // namespace vtsim
