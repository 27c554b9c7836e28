#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vtsim/gates.hpp"
#include "vtsim/measure.hpp"
#include "vtsim/solver.hpp"

namespace vtsim {

// Grid definition for one named experiment. Defaults reproduce the
// reference study; config files may override grids and solver options.
struct SweepSpec {
    std::string experiment;  // iv-curves, vtc, bias-sweep, frequency-sweep, random-vectors
    std::vector<GateKind> gates{GateKind::Inverter, GateKind::Nand2, GateKind::Nor2};
    std::vector<double> v_an_grid{0.0, 0.05, 0.10, 0.15, 0.20};
    std::vector<double> frequencies;         // frequency-sweep grid
    std::vector<std::uint16_t> seeds{1, 2, 3};
    int prbs_bits = 256;
    std::string card_path = "models/ref65.card";
    double vdd = 0.2;
    double frequency = 100e3;  // stimulus rate for the fixed-frequency experiments
    double load_cap = 1e-15;
    SolverOptions solver;
    unsigned jobs = 0;  // grid-point parallelism; 0 = auto
    std::string out_dir = "out";

    static SweepSpec defaults_for(std::string_view experiment);
    // Flat key=value file; unknown keys are errors.
    static SweepSpec from_config_file(const std::string& path);
    void check() const;
};

struct Verdict {
    std::string name;
    bool pass = false;
    std::string detail;  // measured margins
};

// Cells are kept as formatted strings so rerunning an experiment yields
// byte-identical CSV output.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
    static Table from_csv(std::string_view text);
    int col(std::string_view name) const;  // -1 when missing
    double num(std::size_t row, std::string_view column) const;
    const std::string& cell(std::size_t row, std::string_view column) const;
};

struct ExperimentResult {
    std::map<std::string, Table> tables;  // name -> table; written as <name>.csv
    std::vector<Verdict> verdicts;

    bool all_pass() const;
    std::string verdict_text() const;
    void write(const std::string& dir) const;  // CSVs + verdicts.txt
};

const std::vector<std::string>& known_experiments();
ExperimentResult run_experiment(const SweepSpec& spec);

// The verdict layer is a pure function of the emitted tables; rerunning it
// on parsed CSV files reproduces the verdicts byte for byte.
std::vector<Verdict> compute_verdicts(std::string_view experiment,
                                      const std::map<std::string, Table>& tables);

// Measures one simulated gate run: delay against the stimulus (an ideal
// AND/OR composite for the two-input gates), rise/fall, supply and bias
// power over the window, and logic levels at the expected stable samples.
MeasurementReport measure_gate_run(const GateSpec& spec, const TransientResult& tr, Window w);

}  // namespace vtsim
