#pragma once

#include <string>
#include <string_view>

namespace vtsim {

inline constexpr double k_boltzmann = 1.380649e-23;   // J/K
inline constexpr double k_elem_charge = 1.602176634e-19;  // C

inline double thermal_voltage(double temp_kelvin) {
    return k_boltzmann * temp_kelvin / k_elem_charge;
}

struct DiodeParams {
    double i_sat = 1e-18;    // A
    double emission = 1.0;
    void check() const;      // throws CardError
    bool operator==(const DiodeParams&) const = default;
};

enum class MosKind { Nmos, Pmos };

// Compact sub-threshold MOSFET card. The model is a single diffusion-current
// exponential with the square-root body-effect threshold shift; it is valid
// for |V| <= 0.4 V and makes no attempt at strong inversion.
struct MosfetParams {
    MosKind kind = MosKind::Nmos;
    double vth0 = 0.22;       // V, magnitude of the zero-bias threshold
    double gamma = 0.3;       // V^0.5
    double phi2f = 0.8;       // V
    double n_slope = 1.4;
    double i_spec = 5.65e-8;  // A at W/L = 1 and zero gate overdrive exponent
    double width = 200e-9;    // m
    double length = 65e-9;    // m
    double temp_kelvin = 300.0;
    // Fixed small-signal capacitances (linear, bias-independent).
    double cgs = 5e-17;       // F
    double cgd = 5e-17;       // F
    double cgb = 2e-17;       // F
    double cbs = 1e-16;       // F, body-source junction
    double cbd = 1e-16;       // F, body-drain junction
    DiodeParams junction;     // body-source and body-drain diodes

    double ut() const { return thermal_voltage(temp_kelvin); }
    void check() const;       // throws CardError on invariant violations
    bool operator==(const MosfetParams&) const = default;
};

// Literal terminal-voltage differences, NMOS sign convention.
// PMOS devices are evaluated by sign reflection inside the model.
struct OperatingPoint {
    double v_gs = 0.0;
    double v_ds = 0.0;
    double v_bs = 0.0;
};

// V_th(v_bs) = vth0 + gamma*(sqrt(phi2f - v_bs) - sqrt(phi2f)), with the
// square root continued by its tangent for v_bs > phi2f - 0.1 V so the
// expression stays real and C1. Strictly decreasing in v_bs.
double threshold_voltage(const MosfetParams& p, double v_bs);

struct MosfetEval {
    double ids;    // channel current drain->source, A
    double g_m;    // d ids / d v_gs
    double g_ds;   // d ids / d v_ds
    double g_mb;   // d ids / d v_bs
};

// I_ds = i_spec*(W/L)*exp((v_gs - V_th(v_bs))/(n*U_T))*(1 - exp(-v_ds/U_T)).
// v_ds < 0 is handled by the drain/source swap convention (current sign
// flips); exponential arguments above 40 are continued linearly (C1).
double mosfet_ids(const MosfetParams& p, const OperatingPoint& op);

// Ids together with its analytic partial derivatives.
MosfetEval mosfet_conductances(const MosfetParams& p, const OperatingPoint& op);

struct DiodeEval {
    double current;  // A, anode->cathode
    double g;        // S
};

// i = i_sat*(exp(v/(emission*U_T)) - 1); the exponential is continued
// linearly above argument 40.
DiodeEval diode_current(const DiodeParams& d, double v, double ut);

// Reference parameter card: flat "key = value" file with nmos./pmos.
// prefixed keys; unknown keys are errors. Shipped card: models/ref65.card.
struct ModelCard {
    MosfetParams nmos;
    MosfetParams pmos;

    static ModelCard parse(std::string_view text, std::string_view origin);
    static ModelCard load(const std::string& path);
    // Applies a single "nmos.x"/"pmos.x" override; throws CardError on
    // unknown keys.
    void set(std::string_view key, double value);
};

}  // namespace vtsim
