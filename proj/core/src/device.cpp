#include "vtsim/device.hpp"

#include <cmath>

#include "vtsim/errors.hpp"
#include "vtsim/util.hpp"

namespace vtsim {

namespace {

constexpr double k_exp_guard = 40.0;       // linear continuation above this argument
constexpr double k_sqrt_margin = 0.1;      // V, tangent continuation margin for V_th

// exp(x) for x <= 40, then the tangent line exp(40)*(1 + (x-40)). C1.
struct GuardedExp {
    double value;
    double slope;
};

GuardedExp guarded_exp(double x) {
    if (x <= k_exp_guard) {
        double e = std::exp(x);
        return {e, e};
    }
    double e = std::exp(k_exp_guard);
    return {e * (1.0 + (x - k_exp_guard)), e};
}

// sqrt(phi2f - v) continued by its tangent for v > phi2f - margin. C1,
// strictly decreasing everywhere.
struct ClampedSqrt {
    double value;
    double slope;  // d/dv
};

ClampedSqrt body_sqrt(double phi2f, double v) {
    const double edge = phi2f - k_sqrt_margin;
    if (v <= edge) {
        double s = std::sqrt(phi2f - v);
        return {s, -0.5 / s};
    }
    double s0 = std::sqrt(k_sqrt_margin);
    double slope = -0.5 / s0;
    return {s0 + slope * (v - edge), slope};
}

struct VthEval {
    double vth;
    double dvth_dvbs;
};

VthEval eval_vth(const MosfetParams& p, double v_bs) {
    if (p.gamma == 0.0) return {p.vth0, 0.0};
    ClampedSqrt s = body_sqrt(p.phi2f, v_bs);
    return {p.vth0 + p.gamma * (s.value - std::sqrt(p.phi2f)), p.gamma * s.slope};
}

// NMOS-convention evaluation for v_ds >= 0.
MosfetEval eval_forward(const MosfetParams& p, double v_gs, double v_ds, double v_bs) {
    const double ut = p.ut();
    const double n_ut = p.n_slope * ut;
    const double k = p.i_spec * (p.width / p.length);

    VthEval vth = eval_vth(p, v_bs);
    GuardedExp f = guarded_exp((v_gs - vth.vth) / n_ut);
    const double ed = std::exp(-v_ds / ut);
    const double drain_factor = -std::expm1(-v_ds / ut);  // 1 - exp(-v_ds/U_T), exact at 0

    MosfetEval out;
    out.ids = k * f.value * drain_factor;
    out.g_m = k * f.slope / n_ut * drain_factor;
    out.g_ds = k * f.value * ed / ut;
    out.g_mb = k * f.slope * (-vth.dvth_dvbs) / n_ut * drain_factor;
    return out;
}

// Drain/source swap convention for v_ds < 0: evaluate the mirrored device
// and flip the current sign. Derivatives follow by the chain rule.
MosfetEval eval_nmos(const MosfetParams& p, double v_gs, double v_ds, double v_bs) {
    if (v_ds >= 0.0) return eval_forward(p, v_gs, v_ds, v_bs);
    MosfetEval r = eval_forward(p, v_gs - v_ds, -v_ds, v_bs - v_ds);
    MosfetEval out;
    out.ids = -r.ids;
    out.g_m = -r.g_m;
    out.g_mb = -r.g_mb;
    out.g_ds = r.g_m + r.g_ds + r.g_mb;
    return out;
}

}  // namespace

void DiodeParams::check() const {
    if (!(i_sat > 0.0)) throw CardError("diode i_sat must be > 0");
    if (!(emission >= 1.0)) throw CardError("diode emission must be >= 1");
}

void MosfetParams::check() const {
    if (!(vth0 > 0.0)) throw CardError("vth0 must be > 0");
    if (!(n_slope >= 1.0)) throw CardError("n_slope must be >= 1");
    if (!(width > 0.0)) throw CardError("width must be > 0");
    if (!(length > 0.0)) throw CardError("length must be > 0");
    if (!(gamma >= 0.0)) throw CardError("gamma must be >= 0");
    if (!(phi2f > 0.0)) throw CardError("phi2f must be > 0");
    if (!(i_spec > 0.0)) throw CardError("i_spec must be > 0");
    if (!(temp_kelvin > 0.0)) throw CardError("temp must be > 0");
    if (cgs < 0 || cgd < 0 || cgb < 0 || cbs < 0 || cbd < 0)
        throw CardError("capacitances must be >= 0");
    junction.check();
}

double threshold_voltage(const MosfetParams& p, double v_bs) {
    return eval_vth(p, v_bs).vth;
}

double mosfet_ids(const MosfetParams& p, const OperatingPoint& op) {
    return mosfet_conductances(p, op).ids;
}

MosfetEval mosfet_conductances(const MosfetParams& p, const OperatingPoint& op) {
    if (p.kind == MosKind::Nmos) {
        return eval_nmos(p, op.v_gs, op.v_ds, op.v_bs);
    }
    // PMOS: reflect all terminal differences, evaluate as NMOS with the same
    // magnitude parameters, and negate the current. The derivative signs
    // cancel, so conductances carry over unchanged.
    MosfetEval r = eval_nmos(p, -op.v_gs, -op.v_ds, -op.v_bs);
    return {-r.ids, r.g_m, r.g_ds, r.g_mb};
}

DiodeEval diode_current(const DiodeParams& d, double v, double ut) {
    const double scale = d.emission * ut;
    const double x = v / scale;
    if (x <= k_exp_guard) {
        double e = std::expm1(x);
        return {d.i_sat * e, d.i_sat * (e + 1.0) / scale};
    }
    double e = std::exp(k_exp_guard);
    return {d.i_sat * (e * (1.0 + (x - k_exp_guard)) - 1.0), d.i_sat * e / scale};
}

namespace {

// Field table shared by the card loader and override mechanism.
double* mos_field(MosfetParams& p, std::string_view field) {
    if (field == "vth0") return &p.vth0;
    if (field == "gamma") return &p.gamma;
    if (field == "phi2f") return &p.phi2f;
    if (field == "n_slope") return &p.n_slope;
    if (field == "i_spec") return &p.i_spec;
    if (field == "width") return &p.width;
    if (field == "length") return &p.length;
    if (field == "temp") return &p.temp_kelvin;
    if (field == "cgs") return &p.cgs;
    if (field == "cgd") return &p.cgd;
    if (field == "cgb") return &p.cgb;
    if (field == "cbs") return &p.cbs;
    if (field == "cbd") return &p.cbd;
    if (field == "junction.i_sat") return &p.junction.i_sat;
    if (field == "junction.emission") return &p.junction.emission;
    return nullptr;
}

}  // namespace

void ModelCard::set(std::string_view key, double value) {
    std::string k = to_lower(key);
    MosfetParams* target = nullptr;
    std::string_view field;
    if (k.rfind("nmos.", 0) == 0) {
        target = &nmos;
        field = std::string_view(k).substr(5);
    } else if (k.rfind("pmos.", 0) == 0) {
        target = &pmos;
        field = std::string_view(k).substr(5);
    } else {
        throw CardError("unknown card key: " + k);
    }
    double* slot = mos_field(*target, field);
    if (!slot) throw CardError("unknown card key: " + k);
    *slot = value;
}

ModelCard ModelCard::parse(std::string_view text, std::string_view origin) {
    ModelCard card;
    card.nmos.kind = MosKind::Nmos;
    card.pmos.kind = MosKind::Pmos;
    KeyValueFile kv = KeyValueFile::parse(text, origin);
    for (const auto& [key, value] : kv.entries) {
        auto num = parse_eng(value);
        if (!num) {
            throw CardError(std::string(origin) + ": bad numeric value for '" + key +
                            "': " + value);
        }
        card.set(key, *num);
    }
    card.nmos.check();
    card.pmos.check();
    return card;
}

ModelCard ModelCard::load(const std::string& path) {
    return parse(read_text_file(path), path);
}

}  // namespace vtsim
