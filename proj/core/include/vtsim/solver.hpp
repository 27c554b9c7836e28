#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vtsim/linalg.hpp"
#include "vtsim/netlist.hpp"
#include "vtsim/waveform.hpp"

namespace vtsim {

enum class Integration { Trapezoidal, BackwardEuler };

struct SolverOptions {
    double reltol = 1e-4;
    double vntol = 1e-6;    // V
    double abstol = 1e-12;  // A
    double gmin = 1e-12;    // S, from every node to ground
    int max_newton_iters = 100;
    Integration integration = Integration::Trapezoidal;
    double lte_tol = 1.0;
    double min_step = 1e-15;  // s
    double max_step = 0.0;    // s; 0 = auto (min source period / 200)
    double v_step_limit = 0.3;  // V, per-iteration Newton damping

    void check() const;  // throws CardError
};

// Node voltages followed by voltage-source branch currents. Branch names
// are "i(<source>)"; the branch current is positive flowing into the
// source's plus terminal (SPICE convention: a supply delivering current
// reads negative).
struct SolutionPoint {
    std::vector<std::string> names;
    std::vector<double> values;

    double operator[](std::string_view name) const;  // throws SimError if unknown
};

struct DcStats {
    std::string stage;  // "newton", "gmin-step" or "source-step"
    int iterations = 0;
};

struct LinearSystem {
    Matrix jacobian;
    std::vector<double> residual;
};

struct TransientResult {
    std::vector<double> times;
    std::vector<std::string> columns;          // node names, then "i(...)"
    std::vector<std::vector<double>> values;   // [column][sample]

    int column_index(std::string_view name) const;  // -1 when missing
    Waveform waveform(std::string_view name) const;  // throws SimError if missing
    std::string to_csv() const;  // header "time,<col>,...", full precision
};

// One engine instance per simulation; instances share nothing mutable.
class Simulator {
public:
    // Throws CircuitError when validate(circuit) reports diagnostics.
    explicit Simulator(const Circuit& circuit, SolverOptions opts = {});
    ~Simulator();
    Simulator(Simulator&&) noexcept;
    Simulator& operator=(Simulator&&) noexcept;

    int dimension() const;  // #non-ground nodes + #source branches
    const std::vector<std::string>& unknown_names() const;

    // MNA Jacobian and residual at a given state (DC context, gmin in,
    // capacitors open). Exposed for verification.
    LinearSystem assemble_dc(const std::vector<double>& x, double time = 0.0) const;

    // Newton with damping, then gmin stepping, then source stepping.
    SolutionPoint dc_operating_point();
    DcStats last_dc_stats() const;

    // Forces the named source to each sweep value in turn (warm-started).
    std::vector<SolutionPoint> dc_sweep(std::string_view source_name, double from, double to,
                                        double step);

    // Adaptive-step integration with step-doubling LTE control and
    // breakpoints at all stimulus corners.
    TransientResult transient(double t_stop);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace vtsim
