#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vtsim/device.hpp"

namespace vtsim {

struct DcSpec {
    double volts = 0.0;
    bool operator==(const DcSpec&) const = default;
};

// SPICE PULSE(v0 v1 delay rise fall width period).
struct PulseSpec {
    double v0 = 0.0, v1 = 0.0;
    double delay = 0.0, rise = 0.0, fall = 0.0, width = 0.0, period = 0.0;
    bool operator==(const PulseSpec&) const = default;
};

// Pseudo-random bit stream from a 16-bit maximal LFSR (taps 16,15,13,4).
// Level changes ramp over bit_period/400, matching the pulse edge ratio.
struct PrbsSpec {
    double v0 = 0.0, v1 = 0.0;
    double bit_period = 0.0;
    std::uint16_t seed = 1;
    bool operator==(const PrbsSpec&) const = default;
};

using SourceSpec = std::variant<DcSpec, PulseSpec, PrbsSpec>;

struct Mosfet {
    std::string name, drain, gate, source, body, model;
    bool operator==(const Mosfet&) const = default;
};
struct VSource {
    std::string name, plus, minus;
    SourceSpec spec;
    bool operator==(const VSource&) const = default;
};
struct Resistor {
    std::string name, a, b;
    double ohms = 0.0;
    bool operator==(const Resistor&) const = default;
};
struct Capacitor {
    std::string name, a, b;
    double farads = 0.0;
    bool operator==(const Capacitor&) const = default;
};
struct DiodeElem {
    std::string name, anode, cathode, model;
    bool operator==(const DiodeElem&) const = default;
};

using Element = std::variant<Mosfet, VSource, Resistor, Capacitor, DiodeElem>;

struct ModelDef {
    enum class Kind { Nmos, Pmos, Diode };
    std::string name;
    Kind kind = Kind::Nmos;
    MosfetParams mos;        // valid for Nmos/Pmos
    DiodeParams diode;       // valid for Diode
    double diode_temp = 300.0;
    bool operator==(const ModelDef&) const = default;
};

// Node names are lower-cased strings; "0" is ground.
struct Circuit {
    std::string title;
    std::vector<Element> elements;
    std::vector<ModelDef> models;

    const ModelDef* find_model(std::string_view name) const;
    const std::string& element_name(std::size_t i) const;
    // All distinct node names in first-appearance order, ground included
    // when present.
    std::vector<std::string> node_names() const;
    bool has_ground() const;

    bool operator==(const Circuit&) const = default;
};

struct Diagnostic {
    int line = 0;
    int column = 0;
    std::string message;
};

struct ParseResult {
    Circuit circuit;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return diagnostics.empty(); }
};

// Minimal SPICE subset: first line is the title; 'M','V','R','C','D'
// element cards; '.model <name> nmos|pmos|d [key=value...]'; '.end'
// terminator; '*' comments; case-insensitive; engineering suffixes.
ParseResult parse_netlist(std::string_view text);
ParseResult parse_netlist_file(const std::string& path);

// Canonical form; parse(print(c)) is structurally identical to c.
std::string print_netlist(const Circuit& c);

// Simulability checks beyond grammar: floating sections with no DC path
// to ground, voltage-source loops/shorts, dangling model references.
std::vector<Diagnostic> validate(const Circuit& c);

std::string format_diagnostics(const std::vector<Diagnostic>& ds);

// 16-bit maximal-length LFSR, taps 16,15,13,4 (Fibonacci form). The output
// bit of one step is the LSB of the state before shifting.
std::uint16_t lfsr16_next(std::uint16_t state);
std::uint16_t lfsr16_advance(std::uint16_t state, unsigned steps);
std::vector<int> prbs_bits(std::uint16_t seed, int count);

}  // namespace vtsim
