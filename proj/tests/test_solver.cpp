#include <cmath>
#include <string>

#include "doctest.h"
#include "vtsim/errors.hpp"
#include "vtsim/gates.hpp"
#include "vtsim/netlist.hpp"
#include "vtsim/solver.hpp"

using namespace vtsim;

namespace {

std::string fixture(const std::string& name) {
    return std::string(VTSIM_FIXTURE_DIR) + "/" + name;
}

Circuit load_fixture(const std::string& name) {
    ParseResult r = parse_netlist_file(fixture(name));
    REQUIRE(r.ok());
    return r.circuit;
}

ModelCard ref_card() {
    return ModelCard::load(VTSIM_MODEL_CARD);
}

GateSpec inverter_spec(BodyStyle s, double van) {
    GateSpec spec;
    spec.gate = GateKind::Inverter;
    spec.style = s;
    spec.v_an = van;
    spec.v_ap = van;
    spec.card = ref_card();
    return spec;
}

// Series chain of n diodes fed from `volts` through 1 kOhm; hostile to
// Newton from a cold start because of the damping limit.
Circuit diode_chain(int n, double volts) {
    Circuit c;
    c.title = "diode chain";
    ModelDef dj;
    dj.name = "dj";
    dj.kind = ModelDef::Kind::Diode;
    dj.diode = {1e-18, 1.0};
    c.models = {dj};
    c.elements.push_back(VSource{"vs", "n0", "0", DcSpec{volts}});
    c.elements.push_back(Resistor{"r1", "n0", "n1", 1e3});
    for (int k = 1; k <= n; ++k) {
        std::string a = "n" + std::to_string(k);
        std::string b = k == n ? std::string("0") : "n" + std::to_string(k + 1);
        c.elements.push_back(DiodeElem{"d" + std::to_string(k), a, b, "dj"});
    }
    return c;
}

// Scalar bisection on f, assuming f(lo) and f(hi) bracket a root.
template <typename F>
double bisect(F f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("resistor divider: exact midpoint from plain Newton") {
    Simulator sim(load_fixture("divider.sp"));
    SolutionPoint op = sim.dc_operating_point();
    // Exact up to the gmin shunt (1e-12 S against 10k pulls ~1e-9 relative).
    CHECK(std::fabs(op["mid"] - 0.1) < 1e-8);
    CHECK(std::fabs(op["top"] - 0.2) < 1e-12);
    // Supply delivers 10 uA; branch current is negative by the SPICE
    // convention (into the plus terminal).
    CHECK(op["i(vdd)"] == doctest::Approx(-1e-5).epsilon(1e-9));
    CHECK(sim.last_dc_stats().stage == "newton");
    CHECK(sim.last_dc_stats().iterations <= 6);  // linear: one step plus checks
}

TEST_CASE("system dimension: unknowns = non-ground nodes + source branches") {
    // Two non-ground nodes + one source branch.
    Simulator div(load_fixture("divider.sp"));
    CHECK(div.dimension() == 3);

    // VTMOS inverter: in, out, vdd, bn1, bp1 + vdd, vin, vbn1, vbp1.
    Simulator inv(build_gate(inverter_spec(BodyStyle::Vtmos, 0.1)));
    CHECK(inv.dimension() == 9);

    LinearSystem sys = inv.assemble_dc(std::vector<double>(9, 0.0));
    CHECK(sys.jacobian.size() == 9);
    CHECK(sys.residual.size() == 9);
}

TEST_CASE("diode + resistor: node voltage matches the bisection oracle") {
    Circuit c = load_fixture("diode_r.sp");
    SolverOptions opts;
    Simulator sim(c, opts);
    SolutionPoint op = sim.dc_operating_point();

    const double ut = thermal_voltage(300.0);
    const double isat = 1e-18, vs = 0.5, r = 1e6;
    // Same physical system the stamps see: diode + gmin at the node.
    auto f = [&](double v) {
        return (vs - v) / r - isat * std::expm1(v / ut) - opts.gmin * v;
    };
    double v_oracle = bisect(f, 0.0, 0.5);
    CHECK(std::fabs(op["x"] - v_oracle) < 1e-9);
    CHECK(std::fabs(op["x"] - v_oracle) < opts.vntol);

    // Residual at the oracle solution is below abstol.
    std::vector<double> x(sim.dimension(), 0.0);
    const auto& names = sim.unknown_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "x") x[i] = v_oracle;
        if (names[i] == "in") x[i] = vs;
        if (names[i] == "i(vs)") x[i] = -(vs - v_oracle) / r;
    }
    LinearSystem sys = sim.assemble_dc(x);
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == "x") CHECK(std::fabs(sys.residual[k]) < 1e-12);
    }
}

TEST_CASE("dc sweep of a lone source with a resistor tracks the input") {
    Circuit c;
    c.title = "track";
    c.elements = {VSource{"vs", "a", "0", DcSpec{0.0}}, Resistor{"r1", "a", "0", 1e4}};
    Simulator sim(c);
    auto pts = sim.dc_sweep("vs", -0.1, 0.1, 0.05);
    REQUIRE(pts.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(pts[static_cast<std::size_t>(i)]["a"] ==
              doctest::Approx(-0.1 + 0.05 * i).epsilon(1e-12));
    }
}

TEST_CASE("CMOS inverter VTC: rails, monotonicity, no hysteresis") {
    Circuit c = build_gate(inverter_spec(BodyStyle::Cmos, 0.0));
    Simulator sim(c);
    auto up = sim.dc_sweep("vin", 0.0, 0.2, 0.002);
    REQUIRE(up.size() == 101);

    // Output-at-rail oracle: balance the off-device leakage against the on
    // device directly on the compact model (independent of the MNA path).
    ModelCard card = ref_card();
    const double vdd = 0.2, gmin = 1e-12;
    auto node_current = [&](double vout) {
        // Input at 0: NMOS off, PMOS pulls up. Currents into the output node.
        double i_n = mosfet_ids(card.nmos, {0.0, vout, 0.0});
        double i_p = -mosfet_ids(card.pmos, {-vdd, vout - vdd, 0.0});
        DiodeParams j = card.pmos.junction;
        double ut = card.pmos.ut();
        double jn = diode_current(card.nmos.junction, -vout, card.nmos.ut()).current;
        double jp = diode_current(j, vout - vdd, ut).current;
        return i_p - i_n - gmin * vout + jn + jp;
    };
    double voh_oracle = bisect(node_current, 0.1, 0.2);
    CHECK(up.front()["out"] == doctest::Approx(voh_oracle).epsilon(1e-6));
    CHECK(vdd - up.front()["out"] < 1e-3);  // within 1 mV of the rail
    CHECK(up.back()["out"] < 1e-3);

    for (std::size_t i = 0; i + 1 < up.size(); ++i) {
        CHECK(up[i + 1]["out"] <= up[i]["out"] + 1e-9);
    }

    auto down = sim.dc_sweep("vin", 0.2, 0.0, 0.002);
    REQUIRE(down.size() == 101);
    for (std::size_t i = 0; i < up.size(); ++i) {
        CHECK(std::fabs(down[down.size() - 1 - i]["out"] - up[i]["out"]) < 1e-9);
    }
}

TEST_CASE("RC transient matches the analytic exponential") {
    Circuit c = load_fixture("rc.sp");
    SolverOptions o;
    o.max_step = 5e-8;  // keep recorded samples dense enough to interpolate
    Simulator sim(c, o);
    const double rc = 1e6 * 1e-12;
    TransientResult tr = sim.transient(5 * rc);
    Waveform out = tr.waveform("out");

    const double tr_edge = 0.1e-9;  // pulse rise; analytic shifted by tr/2
    auto analytic = [&](double t) { return 0.2 * (1.0 - std::exp(-(t - tr_edge / 2) / rc)); };
    for (double t : {rc, 3 * rc}) {
        double got = out.sample(t);
        CHECK(std::fabs(got - analytic(t)) / analytic(t) < 1e-3);
    }

    // Times strictly increasing, steps bounded by the auto max step.
    for (std::size_t i = 0; i + 1 < tr.times.size(); ++i) {
        CHECK(tr.times[i + 1] > tr.times[i]);
    }
}

TEST_CASE("charge conservation: supply charge equals capacitor charge") {
    Circuit c = load_fixture("rc.sp");
    Simulator sim(c);
    const double rc = 1e-6;
    TransientResult tr = sim.transient(5 * rc);
    Waveform i_src = tr.waveform("i(vin)");
    Waveform v_out = tr.waveform("out");

    double q = 0.0;  // integral of the source branch current (into plus)
    for (std::size_t i = 0; i + 1 < i_src.times.size(); ++i) {
        q += 0.5 * (i_src.values[i] + i_src.values[i + 1]) *
             (i_src.times[i + 1] - i_src.times[i]);
    }
    double dq_cap = 1e-12 * (v_out.values.back() - v_out.values.front());
    CHECK(std::fabs(-q - dq_cap) / dq_cap < 0.005);
}

TEST_CASE("source-free circuit stays identically at zero") {
    Circuit c;
    c.title = "dead";
    c.elements = {Resistor{"r1", "a", "0", 1e4}, Capacitor{"c1", "a", "0", 1e-12}};
    Simulator sim(c);
    TransientResult tr = sim.transient(1e-6);
    for (double v : tr.values[static_cast<std::size_t>(tr.column_index("a"))]) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("transient is deterministic: identical runs bit for bit") {
    Circuit c = build_gate(inverter_spec(BodyStyle::Cmos, 0.0));
    Simulator s1(c), s2(c);
    TransientResult a = s1.transient(20e-6);
    TransientResult b = s2.transient(20e-6);
    REQUIRE(a.times.size() == b.times.size());
    CHECK(a.times == b.times);
    CHECK(a.values == b.values);
}

TEST_CASE("halving lte_tol never worsens the RC analytic error") {
    Circuit c = load_fixture("rc.sp");
    const double rc = 1e-6;
    const double tr_edge = 0.1e-9;
    // Error taken at the accepted points with the step size LTE-controlled
    // (no max_step cap), so the tolerance is what actually limits accuracy.
    auto run_error = [&](double lte) {
        SolverOptions o;
        o.lte_tol = lte;
        Simulator sim(c, o);
        Waveform out = sim.transient(5 * rc).waveform("out");
        double err = 0;
        for (std::size_t i = 0; i < out.times.size(); ++i) {
            if (out.times[i] < 1e-9) continue;  // inside the drive edge
            double ref = 0.2 * (1.0 - std::exp(-(out.times[i] - tr_edge / 2) / rc));
            err = std::max(err, std::fabs(out.values[i] - ref));
        }
        return err;
    };
    double e1 = run_error(1.0);
    double e05 = run_error(0.5);
    double e025 = run_error(0.25);
    CHECK(e05 <= e1);
    CHECK(e025 <= e05);
}

TEST_CASE("trapezoidal and backward Euler agree as the step shrinks") {
    Circuit c = build_gate(inverter_spec(BodyStyle::Cmos, 0.0));
    SolverOptions trap;
    trap.integration = Integration::Trapezoidal;
    trap.max_step = 1e-9;
    SolverOptions be;
    be.integration = Integration::BackwardEuler;
    be.max_step = 0.25e-9;

    Simulator st(c, trap), sb(c, be);
    Waveform wt = st.transient(10e-6).waveform("out");
    Waveform wb = sb.transient(10e-6).waveform("out");
    double worst = 0;
    for (std::size_t i = 0; i < wt.times.size(); i += 7) {
        worst = std::max(worst, std::fabs(wt.values[i] - wb.sample(wt.times[i])));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("inverter transient swings rail to rail; crossings match a fine-step run") {
    Circuit c = build_gate(inverter_spec(BodyStyle::Cmos, 0.0));
    Simulator sim(c);
    TransientResult tr = sim.transient(20e-6);
    Waveform out = tr.waveform("out");

    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < out.times.size(); ++i) {
        if (out.times[i] < 10e-6) continue;  // second period only
        lo = std::min(lo, out.values[i]);
        hi = std::max(hi, out.values[i]);
    }
    CHECK(hi > 0.18);
    CHECK(lo < 0.02);

    auto crossing = [](const Waveform& w, double level, double after, bool rising) {
        for (std::size_t i = 0; i + 1 < w.times.size(); ++i) {
            if (w.times[i] < after) continue;
            double a = w.values[i] - level, b = w.values[i + 1] - level;
            if (a * b < 0 && (b > a) == rising) {
                return w.times[i] + a / (a - b) * (w.times[i + 1] - w.times[i]);
            }
        }
        return -1.0;
    };

    SolverOptions fine;
    fine.max_step = 1e-9;
    fine.lte_tol = 0.05;
    Simulator ref_sim(c, fine);
    Waveform ref = ref_sim.transient(20e-6).waveform("out");

    double t_fall = crossing(out, 0.1, 10e-6, false);
    double t_fall_ref = crossing(ref, 0.1, 10e-6, false);
    double t_rise = crossing(out, 0.1, t_fall, true);
    double t_rise_ref = crossing(ref, 0.1, t_fall_ref, true);
    REQUIRE(t_fall > 0);
    REQUIRE(t_rise > 0);
    CHECK(std::fabs(t_fall - t_fall_ref) < 2e-10);
    CHECK(std::fabs(t_rise - t_rise_ref) < 2e-10);
}

TEST_CASE("continuation fallbacks rescue a cold-start-hostile circuit") {
    // Newton must walk the exponential down the chain one node per
    // iteration, so a 12-diode chain needs ~25 damped iterations from zero.
    Circuit c = diode_chain(12, 6.0);
    SolverOptions tight;
    tight.max_newton_iters = 15;
    Simulator sim(c, tight);
    SolutionPoint op = sim.dc_operating_point();
    CHECK(sim.last_dc_stats().stage != "newton");
    double v1 = op["n1"];
    CHECK(v1 > 0);
    CHECK(v1 <= 6.0);

    SolverOptions loose;
    loose.max_newton_iters = 400;
    Simulator sim2(c, loose);
    SolutionPoint op2 = sim2.dc_operating_point();
    CHECK(sim2.last_dc_stats().stage == "newton");
    CHECK(op2["n1"] == doctest::Approx(op["n1"]).epsilon(1e-6));
}

TEST_CASE("all stages exhausted raises NonConvergence with stage info") {
    Circuit c = diode_chain(12, 6.0);
    SolverOptions tight;
    tight.max_newton_iters = 10;  // below what any stage needs here
    Simulator sim(c, tight);
    CHECK_THROWS_AS(sim.dc_operating_point(), NonConvergence);
    try {
        sim.dc_operating_point();
    } catch (const NonConvergence& e) {
        CHECK(e.stage == "source-step");
        CHECK(e.iteration > 0);
        CHECK(!e.worst_node.empty());
    }
}

TEST_CASE("step underflow reports the time reached") {
    Circuit c = load_fixture("rc.sp");
    SolverOptions o;
    o.min_step = 1e-7;
    o.lte_tol = 1e-9;
    Simulator sim(c, o);
    CHECK_THROWS_AS(sim.transient(5e-6), StepUnderflow);
}

TEST_CASE("unknown sweep source and invalid options are rejected") {
    Simulator sim(load_fixture("divider.sp"));
    CHECK_THROWS_AS(sim.dc_sweep("nosuch", 0, 1, 0.1), SimError);
    CHECK_THROWS_AS(sim.dc_sweep("vdd", 0, 1, 0.0), CardError);

    SolverOptions bad;
    bad.reltol = -1;
    CHECK_THROWS_AS(Simulator(load_fixture("divider.sp"), bad), CardError);
    SolverOptions few;
    few.max_newton_iters = 3;
    CHECK_THROWS_AS(Simulator(load_fixture("divider.sp"), few), CardError);
}

TEST_CASE("simulator refuses circuits with validation diagnostics") {
    ParseResult r = parse_netlist_file(fixture("cap_island.sp"));
    REQUIRE(r.ok());
    CHECK_THROWS_AS(Simulator(r.circuit), CircuitError);
}

TEST_CASE("transient CSV export: time first, full precision round trip") {
    Circuit c = load_fixture("divider.sp");
    Simulator sim(c);
    // A DC circuit under transient: constant waveforms.
    TransientResult tr = sim.transient(1e-6);
    std::string csv = tr.to_csv();
    CHECK(csv.rfind("time,", 0) == 0);
    CHECK(csv.find("mid") != std::string::npos);
    CHECK(csv.find("i(vdd)") != std::string::npos);
}
