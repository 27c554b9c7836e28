#pragma once

#include <cstdint>

#include "vtsim/device.hpp"
#include "vtsim/netlist.hpp"

namespace vtsim {

enum class GateKind { Inverter, Nand2, Nor2 };
enum class BodyStyle { Cmos, Dtmos, Vtmos };

const char* to_string(GateKind g);
const char* to_string(BodyStyle s);

struct StimulusSpec {
    enum class Kind { Pulse, Prbs };
    Kind kind = Kind::Pulse;
    double frequency = 100e3;    // pulse rate of input A; B runs at half
    std::uint16_t seed_a = 1;    // PRBS seeds; seed_b == 0 derives from seed_a
    std::uint16_t seed_b = 0;
};

// One generated logic gate with its supply, stimulus and output load.
// v_an/v_ap are magnitudes; the builder orients the PMOS offset so the
// gate sits below the body. Biases above vdd are rejected.
struct GateSpec {
    GateKind gate = GateKind::Inverter;
    BodyStyle style = BodyStyle::Cmos;
    double v_an = 0.0;
    double v_ap = 0.0;
    double vdd = 0.2;
    ModelCard card;
    double load_cap = 1e-15;
    StimulusSpec stimulus;

    void check() const;  // throws BiasLimitError on bias violations
};

Circuit build_gate(const GateSpec& spec);

// Super-period of the stimulus: one pulse period for the inverter, two for
// the two-input gates (input B runs at half rate so all four input
// combinations occur).
double stimulus_super_period(const GateSpec& spec);

}  // namespace vtsim
