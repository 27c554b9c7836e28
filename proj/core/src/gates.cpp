#include "vtsim/gates.hpp"

#include <sstream>

#include "vtsim/errors.hpp"
#include "vtsim/util.hpp"

namespace vtsim {

const char* to_string(GateKind g) {
    switch (g) {
        case GateKind::Inverter: return "inverter";
        case GateKind::Nand2: return "nand2";
        case GateKind::Nor2: return "nor2";
    }
    return "?";
}

const char* to_string(BodyStyle s) {
    switch (s) {
        case BodyStyle::Cmos: return "cmos";
        case BodyStyle::Dtmos: return "dtmos";
        case BodyStyle::Vtmos: return "vtmos";
    }
    return "?";
}

void GateSpec::check() const {
    if (!(vdd > 0)) throw CardError("vdd must be > 0");
    if (load_cap < 0) throw CardError("load_cap must be >= 0");
    if (!(stimulus.frequency > 0)) throw CardError("stimulus frequency must be > 0");
    card.nmos.check();
    card.pmos.check();
    switch (style) {
        case BodyStyle::Vtmos:
            // The bias must stay below the supply or logic levels collapse.
            if (v_an < 0 || v_an > vdd)
                throw BiasLimitError("v_an must lie in [0, vdd]; got " + format_table(v_an));
            if (v_ap < 0 || v_ap > vdd)
                throw BiasLimitError("v_ap magnitude must lie in [0, vdd]; got " +
                                     format_table(v_ap));
            break;
        case BodyStyle::Dtmos:
            if (v_an != 0 || v_ap != 0)
                throw BiasLimitError("dtmos has no gate-body offset; v_an/v_ap must be 0");
            break;
        case BodyStyle::Cmos:
            break;  // bias fields ignored
    }
}

namespace {

class GateBuilder {
public:
    explicit GateBuilder(const GateSpec& spec) : spec_(spec) {
        circuit_.title = std::string(to_string(spec.style)) + " " + to_string(spec.gate) +
                         " (v_an=" + format_table(spec.v_an) +
                         ", v_ap=" + format_table(spec.v_ap) + ")";
        ModelDef nm;
        nm.name = "nmos_ref";
        nm.kind = ModelDef::Kind::Nmos;
        nm.mos = spec.card.nmos;
        nm.mos.kind = MosKind::Nmos;
        ModelDef pm;
        pm.name = "pmos_ref";
        pm.kind = ModelDef::Kind::Pmos;
        pm.mos = spec.card.pmos;
        pm.mos.kind = MosKind::Pmos;
        circuit_.models = {nm, pm};
    }

    Circuit build() {
        switch (spec_.gate) {
            case GateKind::Inverter: {
                add_pmos("mp1", "out", "in", "vdd");
                add_nmos("mn1", "out", "in", "0");
                break;
            }
            case GateKind::Nand2: {
                // Parallel pull-up, series pull-down through x1.
                add_pmos("mp1", "out", "ina", "vdd");
                add_pmos("mp2", "out", "inb", "vdd");
                add_nmos("mn1", "out", "ina", "x1");
                add_nmos("mn2", "x1", "inb", "0");
                break;
            }
            case GateKind::Nor2: {
                // Series pull-up through x1, parallel pull-down.
                add_pmos("mp1", "x1", "ina", "vdd");
                add_pmos("mp2", "out", "inb", "x1");
                add_nmos("mn1", "out", "ina", "0");
                add_nmos("mn2", "out", "inb", "0");
                break;
            }
        }
        for (auto& e : bias_sources_) circuit_.elements.push_back(std::move(e));

        circuit_.elements.push_back(VSource{"vdd", "vdd", "0", DcSpec{spec_.vdd}});
        add_stimulus();
        if (spec_.load_cap > 0) {
            circuit_.elements.push_back(Capacitor{"cl", "out", "0", spec_.load_cap});
        }
        return std::move(circuit_);
    }

private:
    void add_nmos(const std::string& name, const std::string& drain, const std::string& gate,
                  const std::string& source) {
        std::string body = body_node(gate, /*is_nmos=*/true);
        circuit_.elements.push_back(Mosfet{name, drain, gate, source, body, "nmos_ref"});
    }

    void add_pmos(const std::string& name, const std::string& drain, const std::string& gate,
                  const std::string& source) {
        std::string body = body_node(gate, /*is_nmos=*/false);
        circuit_.elements.push_back(Mosfet{name, drain, gate, source, body, "pmos_ref"});
    }

    // CMOS ties bodies to the rails, DTMOS to the gate itself, VTMOS to a
    // per-transistor floating DC offset: gate positive w.r.t. body for
    // NMOS, negative for PMOS.
    std::string body_node(const std::string& gate, bool is_nmos) {
        switch (spec_.style) {
            case BodyStyle::Cmos:
                return is_nmos ? "0" : "vdd";
            case BodyStyle::Dtmos:
                return gate;
            case BodyStyle::Vtmos: {
                int index = is_nmos ? ++n_bodies_ : ++p_bodies_;
                std::string suffix = (is_nmos ? "n" : "p") + std::to_string(index);
                std::string body = "b" + suffix;
                if (is_nmos) {
                    bias_sources_.push_back(
                        VSource{"vb" + suffix, gate, body, DcSpec{spec_.v_an}});
                } else {
                    bias_sources_.push_back(
                        VSource{"vb" + suffix, body, gate, DcSpec{spec_.v_ap}});
                }
                return body;
            }
        }
        return "0";
    }

    void add_stimulus() {
        const double period = 1.0 / spec_.stimulus.frequency;
        const double edge = period / 400.0;  // 25 ns at 100 kHz
        const bool two_inputs = spec_.gate != GateKind::Inverter;

        if (spec_.stimulus.kind == StimulusSpec::Kind::Prbs) {
            std::uint16_t sa = spec_.stimulus.seed_a;
            std::uint16_t sb = spec_.stimulus.seed_b;
            if (sb == 0) sb = lfsr16_advance(sa, 9973);
            if (two_inputs) {
                circuit_.elements.push_back(
                    VSource{"vina", "ina", "0", PrbsSpec{0.0, spec_.vdd, period, sa}});
                circuit_.elements.push_back(
                    VSource{"vinb", "inb", "0", PrbsSpec{0.0, spec_.vdd, period, sb}});
            } else {
                circuit_.elements.push_back(
                    VSource{"vin", "in", "0", PrbsSpec{0.0, spec_.vdd, period, sa}});
            }
            return;
        }

        PulseSpec a{0.0, spec_.vdd, 0.0, edge, edge, period / 2 - edge, period};
        if (two_inputs) {
            // B at half rate: the four input pairs all occur each super-period.
            PulseSpec b{0.0, spec_.vdd, 0.0, edge, edge, period - edge, 2 * period};
            circuit_.elements.push_back(VSource{"vina", "ina", "0", a});
            circuit_.elements.push_back(VSource{"vinb", "inb", "0", b});
        } else {
            circuit_.elements.push_back(VSource{"vin", "in", "0", a});
        }
    }

    const GateSpec& spec_;
    Circuit circuit_;
    std::vector<Element> bias_sources_;
    int n_bodies_ = 0;
    int p_bodies_ = 0;
};

}  // namespace

Circuit build_gate(const GateSpec& spec) {
    spec.check();
    return GateBuilder(spec).build();
}

double stimulus_super_period(const GateSpec& spec) {
    const double period = 1.0 / spec.stimulus.frequency;
    return spec.gate == GateKind::Inverter ? period : 2 * period;
}

}  // namespace vtsim
