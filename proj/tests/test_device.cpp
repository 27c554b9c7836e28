#include <cmath>
#include <random>

#include "doctest.h"
#include "vtsim/device.hpp"
#include "vtsim/errors.hpp"

using namespace vtsim;

namespace {

MosfetParams ref_nmos() {
    return ModelCard::load(VTSIM_MODEL_CARD).nmos;
}
MosfetParams ref_pmos() {
    return ModelCard::load(VTSIM_MODEL_CARD).pmos;
}

// Closed-form oracle for the threshold shift, kept independent of the
// implementation (no clamping; callers stay inside the plain domain).
double vth_oracle(const MosfetParams& p, double v_bs) {
    return p.vth0 + p.gamma * (std::sqrt(p.phi2f - v_bs) - std::sqrt(p.phi2f));
}

// Scalar oracle for the current equation on the forward branch.
double ids_oracle(const MosfetParams& p, double vgs, double vds, double vbs) {
    const double ut = p.ut();
    return p.i_spec * (p.width / p.length) *
           std::exp((vgs - vth_oracle(p, vbs)) / (p.n_slope * ut)) * (1.0 - std::exp(-vds / ut));
}

}  // namespace

TEST_CASE("thermal voltage at 300 K") {
    CHECK(thermal_voltage(300.0) == doctest::Approx(0.025851999786435535).epsilon(1e-12));
}

TEST_CASE("threshold voltage: zero bias and zero gamma") {
    MosfetParams p = ref_nmos();
    CHECK(threshold_voltage(p, 0.0) == doctest::Approx(0.22).epsilon(1e-15));

    p.gamma = 0.0;
    for (double v : {-0.5, -0.1, 0.0, 0.3, 0.9}) {
        CHECK(threshold_voltage(p, v) == 0.22);
    }
}

TEST_CASE("threshold voltage matches the closed form at forward bias") {
    MosfetParams p = ref_nmos();
    // Frozen from the oracle: 0.22 + 0.3*(sqrt(0.6) - sqrt(0.8)).
    const double frozen = 0.18405084347247028;
    CHECK(vth_oracle(p, 0.2) == doctest::Approx(frozen).epsilon(1e-14));
    CHECK(threshold_voltage(p, 0.2) == doctest::Approx(frozen).epsilon(1e-12));
}

TEST_CASE("threshold voltage is strictly decreasing through the clamp region") {
    MosfetParams p = ref_nmos();
    double prev = threshold_voltage(p, -1.0);
    for (double v = -0.95; v < 1.5; v += 0.05) {
        double cur = threshold_voltage(p, v);
        CHECK(cur < prev);
        CHECK(std::isfinite(cur));
        prev = cur;
    }
    // Tangent continuation keeps the slope continuous at the clamp edge.
    const double edge = p.phi2f - 0.1;
    const double h = 1e-7;
    double left = (threshold_voltage(p, edge) - threshold_voltage(p, edge - h)) / h;
    double right = (threshold_voltage(p, edge + h) - threshold_voltage(p, edge)) / h;
    CHECK(left == doctest::Approx(right).epsilon(1e-3));
}

TEST_CASE("ids: zero drain bias gives exactly zero current") {
    MosfetParams p = ref_nmos();
    for (double vgs : {0.0, 0.1, 0.22, 0.4}) {
        for (double vbs : {-0.2, 0.0, 0.2}) {
            CHECK(mosfet_ids(p, {vgs, 0.0, vbs}) == 0.0);
        }
    }
}

TEST_CASE("ids at threshold with vds = 10 UT") {
    MosfetParams p = ref_nmos();
    const double ut = p.ut();
    double vth = threshold_voltage(p, 0.0);
    double expected = p.i_spec * (p.width / p.length) * (1.0 - std::exp(-10.0));
    CHECK(mosfet_ids(p, {vth, 10.0 * ut, 0.0}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ids: forward body bias raises the current (frozen values)") {
    MosfetParams p = ref_nmos();
    double on_biased = mosfet_ids(p, {0.2, 0.2, 0.2});
    double on_zero = mosfet_ids(p, {0.2, 0.2, 0.0});
    // Frozen from the scalar oracle with the reference card.
    CHECK(on_biased == doctest::Approx(2.699957074496074e-07).epsilon(1e-12));
    CHECK(on_zero == doctest::Approx(9.999676884564807e-08).epsilon(1e-12));
    CHECK(on_biased > on_zero);
    CHECK(on_zero == doctest::Approx(ids_oracle(p, 0.2, 0.2, 0.0)).epsilon(1e-13));
    // Calibration targets: ~100 nA on, sub-nA off.
    CHECK(on_zero > 90e-9);
    CHECK(on_zero < 110e-9);
    CHECK(mosfet_ids(p, {0.0, 0.2, 0.0}) < 1e-9);
}

TEST_CASE("conductances vanish where the current does") {
    MosfetParams p = ref_nmos();
    MosfetEval e = mosfet_conductances(p, {0.15, 0.0, 0.1});
    CHECK(e.g_m == 0.0);
    CHECK(e.g_mb == 0.0);
    CHECK(e.g_ds > 0.0);

    p.gamma = 0.0;
    MosfetEval e2 = mosfet_conductances(p, {0.15, 0.1, 0.05});
    CHECK(e2.g_mb == 0.0);
}

TEST_CASE("analytic derivatives match central finite differences at 1000 random points") {
    const double h = 1e-6;
    const double rtol = 1e-4;
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> volt(-0.4, 0.4);

    auto check_point = [&](const MosfetParams& p, OperatingPoint op) {
        MosfetEval an = mosfet_conductances(p, op);
        auto ids = [&](double dg, double dd, double db) {
            return mosfet_ids(p, {op.v_gs + dg, op.v_ds + dd, op.v_bs + db});
        };
        double fd_gm = (ids(h, 0, 0) - ids(-h, 0, 0)) / (2 * h);
        double fd_gds = (ids(0, h, 0) - ids(0, -h, 0)) / (2 * h);
        double fd_gmb = (ids(0, 0, h) - ids(0, 0, -h)) / (2 * h);
        auto close = [&](double a, double b) {
            double scale = std::max({std::fabs(a), std::fabs(b), 1e-30});
            return std::fabs(a - b) <= rtol * scale;
        };
        CHECK(close(an.g_m, fd_gm));
        CHECK(close(an.g_ds, fd_gds));
        CHECK(close(an.g_mb, fd_gmb));
        CHECK(an.ids == mosfet_ids(p, op));
    };

    MosfetParams n = ref_nmos(), pm = ref_pmos();
    for (int i = 0; i < 500; ++i) check_point(n, {volt(rng), volt(rng), volt(rng)});
    for (int i = 0; i < 500; ++i) check_point(pm, {volt(rng), volt(rng), volt(rng)});
}

TEST_CASE("monotonicity in v_gs and v_bs") {
    MosfetParams p = ref_nmos();
    double prev = -1.0;
    for (double vgs = 0.0; vgs <= 0.4001; vgs += 0.02) {
        double i = mosfet_ids(p, {vgs, 0.15, 0.05});
        CHECK(i > prev);
        prev = i;
    }
    prev = -1.0;
    for (double vbs = -0.4; vbs <= 0.4001; vbs += 0.02) {
        double i = mosfet_ids(p, {0.15, 0.15, vbs});
        CHECK(i > prev);
        prev = i;
    }
}

TEST_CASE("VTMOS body offset: current strictly decreasing in V_AN") {
    MosfetParams p = ref_nmos();
    for (double vgs : {0.05, 0.1, 0.15, 0.2}) {
        double prev = 1e300;
        for (double van = 0.0; van <= 0.2001; van += 0.025) {
            double i = mosfet_ids(p, {vgs, 0.2, vgs - van});
            CHECK(i < prev);
            prev = i;
        }
    }
}

TEST_CASE("output conductance at the paper bias point decreases with V_AN") {
    MosfetParams p = ref_nmos();
    double prev = 1e300;
    for (double van = 0.0; van <= 0.2001; van += 0.05) {
        MosfetEval e = mosfet_conductances(p, {0.2, 0.2, 0.2 - van});
        CHECK(e.g_ds < prev);
        prev = e.g_ds;
    }
}

TEST_CASE("drain/source swap: sign symmetry for negative vds") {
    MosfetParams p = ref_nmos();
    // I(vgs, -vds, vbs) with swapped terminals equals -I evaluated from the
    // other side: the swap convention mirrors gate/body to the new source.
    double fwd = mosfet_ids(p, {0.18, 0.12, 0.03});
    double rev = mosfet_ids(p, {0.18 - 0.12, -0.12, 0.03 - 0.12});
    CHECK(rev == doctest::Approx(-fwd).epsilon(1e-12));
    // Continuity across vds = 0.
    double eps = 1e-9;
    double below = mosfet_ids(p, {0.2, -eps, 0.1});
    double above = mosfet_ids(p, {0.2, +eps, 0.1});
    CHECK(below == doctest::Approx(-above).epsilon(1e-3));
}

TEST_CASE("PMOS/NMOS duality at reflected voltages") {
    MosfetParams n = ref_nmos();
    MosfetParams p = n;
    p.kind = MosKind::Pmos;
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> volt(-0.4, 0.4);
    for (int i = 0; i < 200; ++i) {
        OperatingPoint op{volt(rng), volt(rng), volt(rng)};
        MosfetEval en = mosfet_conductances(n, op);
        MosfetEval ep = mosfet_conductances(p, {-op.v_gs, -op.v_ds, -op.v_bs});
        CHECK(ep.ids == doctest::Approx(-en.ids).epsilon(1e-14));
        CHECK(ep.g_m == doctest::Approx(en.g_m).epsilon(1e-14));
        CHECK(ep.g_ds == doctest::Approx(en.g_ds).epsilon(1e-14));
        CHECK(ep.g_mb == doctest::Approx(en.g_mb).epsilon(1e-14));
    }
}

TEST_CASE("exponential guard keeps huge overdrives finite and C1") {
    MosfetParams p = ref_nmos();
    double i1 = mosfet_ids(p, {5.0, 0.2, 0.0});
    CHECK(std::isfinite(i1));
    // Slope continuity at the guard: numeric derivative on both sides.
    const double nut = p.n_slope * p.ut();
    double vth = threshold_voltage(p, 0.0);
    double v_at = vth + 40.0 * nut;
    double h = 1e-7;
    double dl = (mosfet_ids(p, {v_at, 0.2, 0}) - mosfet_ids(p, {v_at - h, 0.2, 0})) / h;
    double dr = (mosfet_ids(p, {v_at + h, 0.2, 0}) - mosfet_ids(p, {v_at, 0.2, 0})) / h;
    CHECK(dl == doctest::Approx(dr).epsilon(1e-4));
}

TEST_CASE("diode current and derivative") {
    DiodeParams d{1e-18, 1.0};
    const double ut = thermal_voltage(300.0);
    CHECK(diode_current(d, 0.0, ut).current == 0.0);
    CHECK(diode_current(d, d.emission * ut * std::log(2.0), ut).current ==
          doctest::Approx(1e-18).epsilon(1e-12));
    // Frozen from the scalar oracle: 1e-18 * expm1(0.5 / UT300).
    CHECK(diode_current(d, 0.5, ut).current ==
          doctest::Approx(2.5097490999799105e-10).epsilon(1e-12));
    CHECK(std::isfinite(diode_current(d, 5.0, ut).current));

    const double h = 1e-6;
    for (double v : {-0.3, -0.05, 0.0, 0.1, 0.3, 0.5}) {
        double fd = (diode_current(d, v + h, ut).current - diode_current(d, v - h, ut).current) /
                    (2 * h);
        double an = diode_current(d, v, ut).g;
        CHECK(an == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("model card loads the reference values") {
    ModelCard card = ModelCard::load(VTSIM_MODEL_CARD);
    CHECK(card.nmos.vth0 == 0.22);
    CHECK(card.pmos.vth0 == 0.22);
    CHECK(card.nmos.width == doctest::Approx(200e-9));
    CHECK(card.pmos.width == doctest::Approx(400e-9));
    CHECK(card.nmos.length == doctest::Approx(65e-9));
    CHECK(card.nmos.kind == MosKind::Nmos);
    CHECK(card.pmos.kind == MosKind::Pmos);
    CHECK(card.nmos.i_spec == doctest::Approx(5.65e-8));
}

TEST_CASE("model card rejects unknown keys and bad values") {
    CHECK_THROWS_AS(ModelCard::parse("nmos.vth0 = 0.22\nnmos.bogus = 1\n", "test"), CardError);
    CHECK_THROWS_AS(ModelCard::parse("resistance = 5\n", "test"), CardError);
    CHECK_THROWS_AS(ModelCard::parse("nmos.vth0 = abc\n", "test"), CardError);
    CHECK_THROWS_AS(ModelCard::parse("nmos.vth0\n", "test"), CardError);
    CHECK_THROWS_AS(ModelCard::parse("nmos.vth0 = -0.1\n", "test"), CardError);  // invariant
    CHECK_THROWS_AS(ModelCard::parse("nmos.n_slope = 0.5\n", "test"), CardError);
}

TEST_CASE("parameter invariants are enforced") {
    MosfetParams p = ref_nmos();
    p.width = 0;
    CHECK_THROWS_AS(p.check(), CardError);
    p = ref_nmos();
    p.gamma = -0.1;
    CHECK_THROWS_AS(p.check(), CardError);
    DiodeParams d{0.0, 1.0};
    CHECK_THROWS_AS(d.check(), CardError);
    d = {1e-18, 0.5};
    CHECK_THROWS_AS(d.check(), CardError);
}
