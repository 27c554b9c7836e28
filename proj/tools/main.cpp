// vtsim: sub-threshold CMOS/DTMOS/VTMOS gate simulator and experiment runner.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vtsim/errors.hpp"
#include "vtsim/experiments.hpp"
#include "vtsim/gates.hpp"
#include "vtsim/measure.hpp"
#include "vtsim/netlist.hpp"
#include "vtsim/solver.hpp"
#include "vtsim/util.hpp"

namespace {

using namespace vtsim;

constexpr int kExitOk = 0;
constexpr int kExitVerdictFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;

double require_eng(const std::string& text, const std::string& what) {
    auto v = parse_eng(text);
    if (!v) throw CardError("bad " + what + " value '" + text + "'");
    return *v;
}

struct SimArgs {
    std::string netlist;
    std::vector<std::string> analysis;
    std::string out_dir = "out";
    std::string max_step, lte_tol;
    std::string integration;
    int max_iters = 0;
    bool gnuplot = false;
    int verbosity = 0;
};

struct GateArgs {
    std::string gate, style;
    std::string van = "0", vap, vdd = "0.2", load = "1f", freq = "100k";
    std::string card = "models/ref65.card";
    std::string out = "gate.sp";
};

struct ExpArgs {
    std::string id;
    std::string config;
    std::string out_dir, card;
    unsigned jobs = 0;
    bool gnuplot = false;
};

struct MeasureArgs {
    std::string csv;
    std::string input, output, supply;
    std::string vdd = "0.2";
    std::string window;
    std::string out_dir;
};

void write_columnheader_plot(const std::string& dir, const std::string& stem,
                             const std::string& xlabel, std::size_t columns,
                             bool logx = false) {
    std::ostringstream os;
    os << "set datafile separator ','\n"
       << "set key outside\n"
       << "set xlabel '" << xlabel << "'\n";
    if (logx) os << "set logscale x\n";
    os << "plot for [i=2:" << columns << "] '" << stem
       << ".csv' using 1:i with lines title columnheader(i)\n";
    write_text_file(dir + "/" + stem + ".gp", os.str());
}

SolverOptions solver_overrides(const SimArgs& a) {
    SolverOptions o;
    if (!a.max_step.empty()) o.max_step = require_eng(a.max_step, "--max-step");
    if (!a.lte_tol.empty()) o.lte_tol = require_eng(a.lte_tol, "--lte-tol");
    if (!a.integration.empty()) {
        std::string v = to_lower(a.integration);
        if (v == "trap" || v == "trapezoidal") o.integration = Integration::Trapezoidal;
        else if (v == "be" || v == "backward-euler") o.integration = Integration::BackwardEuler;
        else throw CardError("unknown --integration '" + a.integration + "'");
    }
    if (a.max_iters > 0) o.max_newton_iters = a.max_iters;
    return o;
}

int run_sim(const SimArgs& args) {
    ParseResult parsed = parse_netlist_file(args.netlist);
    if (!parsed.ok()) {
        std::cerr << args.netlist << ": parse diagnostics:\n"
                  << format_diagnostics(parsed.diagnostics);
        return kExitUsage;
    }
    auto diags = validate(parsed.circuit);
    if (!diags.empty()) {
        std::cerr << args.netlist << ": validation diagnostics:\n" << format_diagnostics(diags);
        return kExitUsage;
    }
    if (args.analysis.empty()) {
        std::cerr << "missing analysis: op | dc <src> <from> <to> <step> | tran <t_stop>\n";
        return kExitUsage;
    }

    std::filesystem::create_directories(args.out_dir);
    Simulator sim(parsed.circuit, solver_overrides(args));
    const std::string kind = to_lower(args.analysis[0]);

    if (kind == "op") {
        SolutionPoint op = sim.dc_operating_point();
        std::ostringstream os;
        os << "name,value\n";
        for (std::size_t i = 0; i < op.names.size(); ++i) {
            os << op.names[i] << ',' << format_full(op.values[i]) << '\n';
        }
        write_text_file(args.out_dir + "/op.csv", os.str());
        std::cout << "operating point (" << sim.last_dc_stats().stage << ", "
                  << sim.last_dc_stats().iterations << " iterations) -> " << args.out_dir
                  << "/op.csv\n";
        if (args.verbosity > 0) {
            for (std::size_t i = 0; i < op.names.size(); ++i) {
                std::cout << "  " << op.names[i] << " = " << format_table(op.values[i]) << '\n';
            }
        }
        return kExitOk;
    }

    if (kind == "dc") {
        if (args.analysis.size() != 5) {
            std::cerr << "dc analysis needs: dc <source> <from> <to> <step>\n";
            return kExitUsage;
        }
        const std::string& src = args.analysis[1];
        double from = require_eng(args.analysis[2], "dc from");
        double to = require_eng(args.analysis[3], "dc to");
        double step = require_eng(args.analysis[4], "dc step");
        auto points = sim.dc_sweep(src, from, to, step);
        std::ostringstream os;
        os << to_lower(src);
        for (const auto& n : points.front().names) os << ',' << n;
        os << '\n';
        double s = std::abs(step) * (to >= from ? 1.0 : -1.0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            os << format_full(from + s * static_cast<double>(i));
            for (double v : points[i].values) os << ',' << format_full(v);
            os << '\n';
        }
        write_text_file(args.out_dir + "/dc.csv", os.str());
        std::cout << "dc sweep: " << points.size() << " points -> " << args.out_dir
                  << "/dc.csv\n";
        if (args.gnuplot) {
            write_columnheader_plot(args.out_dir, "dc", to_lower(src),
                                    points.front().names.size() + 1);
        }
        return kExitOk;
    }

    if (kind == "tran") {
        if (args.analysis.size() != 2) {
            std::cerr << "tran analysis needs: tran <t_stop>\n";
            return kExitUsage;
        }
        double t_stop = require_eng(args.analysis[1], "tran t_stop");
        TransientResult tr = sim.transient(t_stop);
        write_text_file(args.out_dir + "/tran.csv", tr.to_csv());
        std::cout << "transient: " << tr.times.size() << " accepted points over "
                  << format_table(t_stop) << " s -> " << args.out_dir << "/tran.csv\n";
        if (args.gnuplot) {
            write_columnheader_plot(args.out_dir, "tran", "time (s)", tr.columns.size() + 1);
        }
        return kExitOk;
    }

    std::cerr << "unknown analysis '" << kind << "' (expected op, dc or tran)\n";
    return kExitUsage;
}

int run_gate(const GateArgs& args) {
    GateSpec spec;
    std::string g = to_lower(args.gate);
    if (g == "inverter") spec.gate = GateKind::Inverter;
    else if (g == "nand2") spec.gate = GateKind::Nand2;
    else if (g == "nor2") spec.gate = GateKind::Nor2;
    else throw CardError("unknown gate '" + args.gate + "' (inverter, nand2, nor2)");

    std::string s = to_lower(args.style);
    if (s == "cmos") spec.style = BodyStyle::Cmos;
    else if (s == "dtmos") spec.style = BodyStyle::Dtmos;
    else if (s == "vtmos") spec.style = BodyStyle::Vtmos;
    else throw CardError("unknown style '" + args.style + "' (cmos, dtmos, vtmos)");

    spec.v_an = require_eng(args.van, "--van");
    spec.v_ap = args.vap.empty() ? spec.v_an : require_eng(args.vap, "--vap");
    spec.vdd = require_eng(args.vdd, "--vdd");
    spec.load_cap = require_eng(args.load, "--load");
    spec.stimulus.frequency = require_eng(args.freq, "--freq");
    spec.card = ModelCard::load(args.card);

    Circuit c = build_gate(spec);
    write_text_file(args.out, print_netlist(c));
    std::cout << "wrote " << args.out << " (" << c.elements.size() << " elements)\n";
    return kExitOk;
}

int run_exp(const ExpArgs& args) {
    const auto& ids = known_experiments();
    if (std::find(ids.begin(), ids.end(), args.id) == ids.end()) {
        std::cerr << "unknown experiment '" << args.id << "'; valid ids:";
        for (const auto& id : ids) std::cerr << ' ' << id;
        std::cerr << '\n';
        return kExitUsage;
    }
    SweepSpec spec = args.config.empty() ? SweepSpec::defaults_for(args.id)
                                         : SweepSpec::from_config_file(args.config);
    if (!args.config.empty() && spec.experiment != args.id) {
        std::cerr << "config file is for experiment '" << spec.experiment << "', not '"
                  << args.id << "'\n";
        return kExitUsage;
    }
    if (!args.out_dir.empty()) spec.out_dir = args.out_dir;
    if (!args.card.empty()) spec.card_path = args.card;
    if (args.jobs) spec.jobs = args.jobs;
    spec.check();

    ExperimentResult result = run_experiment(spec);
    result.write(spec.out_dir);

    if (args.gnuplot) {
        if (spec.experiment == "frequency-sweep") {
            write_columnheader_plot(spec.out_dir, "freq_advantage", "frequency (Hz)",
                                    result.tables.at("freq_advantage").columns.size(), true);
        }
        std::ostringstream os;
        os << "set datafile separator ','\nset key outside\n";
        if (spec.experiment == "iv-curves") {
            os << "set xlabel 'v_gs (V)'\nset ylabel 'i_ds (A)'\n";
            os << "plot for [van in \"";
            for (std::size_t i = 0; i < spec.v_an_grid.size(); ++i) {
                os << (i ? " " : "") << format_table(spec.v_an_grid[i]);
            }
            os << "\"] 'iv_vgs.csv' using (strcol(1) eq van ? $2 : NaN):3 with lines "
                  "title 'v_an='.van\n";
            write_text_file(spec.out_dir + "/iv_vgs.gp", os.str());
        } else if (spec.experiment == "bias-sweep") {
            os << "set xlabel 'v_an (V)'\nset ylabel 'p_total (W)'\n";
            std::string gates;
            for (std::size_t i = 0; i < spec.gates.size(); ++i) {
                gates += (i ? " " : "") + std::string(to_string(spec.gates[i]));
            }
            os << "plot for [g in \"" << gates
               << "\"] 'bias_sweep.csv' using (strcol(1) eq g && strcol(2) eq 'vtmos' ? $3 : "
                  "NaN):12 with linespoints title g.' vtmos', \\\n  for [g in \"" << gates
               << "\"] '' using (strcol(1) eq g && strcol(2) eq 'cmos' ? $3 : NaN):12 with "
                  "points pt 4 title g.' cmos'\n";
            write_text_file(spec.out_dir + "/bias_sweep.gp", os.str());
        } else if (spec.experiment == "vtc") {
            os << "set xlabel 'v_in (V)'\nset ylabel 'v_out (V)'\n";
            os << "plot 'vtc.csv' using (strcol(1) eq 'cmos' ? $3 : NaN):4 with lines "
                  "title 'cmos'";
            for (double v : spec.v_an_grid) {
                os << ", \\\n  '' using (strcol(1) eq 'vtmos' && strcol(2) eq '"
                   << format_table(v) << "' ? $3 : NaN):4 with lines title 'vtmos "
                   << format_table(v) << "'";
            }
            os << '\n';
            write_text_file(spec.out_dir + "/vtc.gp", os.str());
        }
    }

    std::cout << result.verdict_text();
    std::cout << (result.all_pass() ? "all verdicts pass" : "verdict failures present")
              << "; tables in " << spec.out_dir << '\n';
    return result.all_pass() ? kExitOk : kExitVerdictFail;
}

// Waveform-file reader for the measure subcommand (tran.csv schema).
struct WaveFile {
    std::vector<std::string> columns;
    std::vector<Waveform> waves;

    static WaveFile load(const std::string& path) {
        Table t = Table::from_csv(read_text_file(path));
        if (t.columns.empty() || t.columns[0] != "time") {
            throw CardError(path + ": expected a 'time' first column");
        }
        WaveFile wf;
        wf.columns.assign(t.columns.begin() + 1, t.columns.end());
        wf.waves.resize(wf.columns.size());
        for (std::size_t c = 0; c < wf.columns.size(); ++c) {
            wf.waves[c].quantity = wf.columns[c];
        }
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            double time = std::strtod(t.rows[r][0].c_str(), nullptr);
            for (std::size_t c = 0; c < wf.columns.size(); ++c) {
                wf.waves[c].append(time, std::strtod(t.rows[r][c + 1].c_str(), nullptr));
            }
        }
        return wf;
    }

    const Waveform& get(const std::string& name) const {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c] == name) return waves[c];
        }
        throw CardError("no column '" + name + "' in waveform file");
    }
};

int run_measure(const MeasureArgs& args) {
    WaveFile wf = WaveFile::load(args.csv);
    const Waveform& input = wf.get(args.input);
    const Waveform& output = wf.get(args.output);
    double vdd = require_eng(args.vdd, "--vdd");

    Window w{input.times.front(), input.times.back()};
    if (!args.window.empty()) {
        auto colon = args.window.find(':');
        if (colon == std::string::npos) throw CardError("--window expects <start>:<end>");
        w.t_start = require_eng(args.window.substr(0, colon), "--window start");
        w.t_end = require_eng(args.window.substr(colon + 1), "--window end");
    }

    MeasurementReport rep;
    rep.window = w;
    DelayResult d = propagation_delay(input, output, 0.0, vdd, w);
    rep.tplh = d.tplh;
    rep.tphl = d.tphl;
    rep.tp_avg = d.tp_avg;
    RiseFall rf = rise_fall_times(output, 0.0, vdd, w);
    rep.t_rise = rf.t_rise;
    rep.t_fall = rf.t_fall;
    if (!args.supply.empty()) {
        Waveform drawn = wf.get(args.supply);
        for (auto& v : drawn.values) v = -v;  // branch convention -> drawn positive
        rep.p_supply = average_power(vdd, drawn, w);
        rep.p_avg = rep.p_supply;
        rep.pdp = rep.p_avg * rep.tp_avg;
    }
    std::cout << rep.to_text();

    if (!args.out_dir.empty()) {
        std::filesystem::create_directories(args.out_dir);
        std::ostringstream os;
        os << "tplh,tphl,tp_avg,t_rise,t_fall,p_supply,pdp\n"
           << format_table(rep.tplh) << ',' << format_table(rep.tphl) << ','
           << format_table(rep.tp_avg) << ',' << format_table(rep.t_rise) << ','
           << format_table(rep.t_fall) << ',' << format_table(rep.p_supply) << ','
           << format_table(rep.pdp) << '\n';
        write_text_file(args.out_dir + "/report.csv", os.str());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vtsim: sub-threshold CMOS/DTMOS/VTMOS circuit simulator"};
    app.require_subcommand(1);

    SimArgs sim_args;
    auto* sim = app.add_subcommand("sim", "simulate a netlist (op, dc sweep or transient)");
    sim->add_option("netlist", sim_args.netlist, "netlist file")->required();
    sim->add_option("analysis", sim_args.analysis,
                    "op | dc <source> <from> <to> <step> | tran <t_stop>");
    sim->add_option("-o,--out", sim_args.out_dir, "output directory");
    sim->add_option("--max-step", sim_args.max_step, "transient max step (s)");
    sim->add_option("--lte-tol", sim_args.lte_tol, "local truncation error tolerance");
    sim->add_option("--integration", sim_args.integration, "trap | be");
    sim->add_option("--max-iters", sim_args.max_iters, "Newton iteration budget");
    sim->add_flag("--gnuplot", sim_args.gnuplot, "write a gnuplot script next to the CSV");
    sim->add_flag("-v,--verbose", sim_args.verbosity, "print solution values");

    GateArgs gate_args;
    auto* gate = app.add_subcommand("gate", "generate a gate netlist (CMOS/DTMOS/VTMOS)");
    gate->add_option("kind", gate_args.gate, "inverter | nand2 | nor2")->required();
    gate->add_option("style", gate_args.style, "cmos | dtmos | vtmos")->required();
    gate->add_option("--van", gate_args.van, "NMOS gate-body offset (V)");
    gate->add_option("--vap", gate_args.vap, "PMOS offset magnitude (V), default --van");
    gate->add_option("--vdd", gate_args.vdd, "supply voltage (V)");
    gate->add_option("--load", gate_args.load, "output load capacitance (F)");
    gate->add_option("--freq", gate_args.freq, "stimulus frequency (Hz)");
    gate->add_option("--card", gate_args.card, "device parameter card");
    gate->add_option("-o,--out", gate_args.out, "output netlist path");

    ExpArgs exp_args;
    auto* exp = app.add_subcommand("exp", "run a named experiment and its verdicts");
    exp->add_option("id", exp_args.id,
                    "iv-curves | vtc | bias-sweep | frequency-sweep | random-vectors")
        ->required();
    exp->add_option("--config", exp_args.config, "experiment config file (key = value)");
    exp->add_option("-o,--out", exp_args.out_dir, "output directory");
    exp->add_option("--card", exp_args.card, "device parameter card override");
    exp->add_option("--jobs", exp_args.jobs, "grid-point parallelism");
    exp->add_flag("--gnuplot", exp_args.gnuplot, "write gnuplot scripts for the tables");

    MeasureArgs meas_args;
    auto* meas = app.add_subcommand("measure", "extract metrics from a waveform CSV");
    meas->add_option("csv", meas_args.csv, "waveform file from 'sim ... tran'")->required();
    meas->add_option("--input", meas_args.input, "input column name")->required();
    meas->add_option("--output", meas_args.output, "output column name")->required();
    meas->add_option("--supply", meas_args.supply, "supply branch column, e.g. i(vdd)");
    meas->add_option("--vdd", meas_args.vdd, "supply voltage (V)");
    meas->add_option("--window", meas_args.window, "measurement window <start>:<end>");
    meas->add_option("-o,--out", meas_args.out_dir, "also write report.csv here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sim->parsed()) return run_sim(sim_args);
        if (gate->parsed()) return run_gate(gate_args);
        if (exp->parsed()) return run_exp(exp_args);
        if (meas->parsed()) return run_measure(meas_args);
    } catch (const NonConvergence& e) {
        std::cerr << "solver: " << e.what() << '\n';
        return kExitSolver;
    } catch (const StepUnderflow& e) {
        std::cerr << "solver: " << e.what() << '\n';
        return kExitSolver;
    } catch (const SingularSystem& e) {
        std::cerr << "solver: " << e.what() << '\n';
        return kExitSolver;
    } catch (const BiasLimitError& e) {
        std::cerr << "bias limit: " << e.what() << '\n';
        return kExitUsage;
    } catch (const MeasureError& e) {
        std::cerr << "measure: " << e.what() << '\n';
        return kExitUsage;
    } catch (const SimError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
