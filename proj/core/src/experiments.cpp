#include "vtsim/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>

#include "vtsim/errors.hpp"
#include "vtsim/util.hpp"

namespace vtsim {

namespace {

constexpr double k_vds0_current_bound = 1e-12;  // A, abstol-level "zero"

std::string fmt(double v) {
    return format_table(v);
}

std::vector<double> parse_list(const std::string& text, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto v = parse_eng(item);
        if (!v) throw CardError("bad numeric list entry '" + item + "' for " + key);
        out.push_back(*v);
    }
    if (out.empty()) throw CardError("empty list for " + key);
    return out;
}

GateKind gate_from_string(const std::string& s) {
    if (s == "inverter") return GateKind::Inverter;
    if (s == "nand2") return GateKind::Nand2;
    if (s == "nor2") return GateKind::Nor2;
    throw CardError("unknown gate '" + s + "'");
}

}  // namespace

// ---------------------------------------------------------------------------
// Table

std::string Table::to_csv() const {
    std::ostringstream os;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) os << ',';
        os << columns[c];
    }
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << ',';
            os << row[c];
        }
        os << '\n';
    }
    return os.str();
}

Table Table::from_csv(std::string_view text) {
    Table t;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() : nl + 1;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            std::size_t comma = line.find(',', start);
            cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos
                                                            ? line.size() - start
                                                            : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (header) {
            t.columns = std::move(cells);
            header = false;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

int Table::col(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return static_cast<int>(i);
    }
    return -1;
}

const std::string& Table::cell(std::size_t row, std::string_view column) const {
    int c = col(column);
    if (c < 0 || row >= rows.size()) throw SimError("bad table access: " + std::string(column));
    return rows[row][static_cast<std::size_t>(c)];
}

double Table::num(std::size_t row, std::string_view column) const {
    return std::strtod(cell(row, column).c_str(), nullptr);
}

// ---------------------------------------------------------------------------
// ExperimentResult

bool ExperimentResult::all_pass() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

std::string ExperimentResult::verdict_text() const {
    std::ostringstream os;
    for (const auto& v : verdicts) {
        os << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
    }
    return os.str();
}

void ExperimentResult::write(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, table] : tables) {
        write_text_file(dir + "/" + name + ".csv", table.to_csv());
    }
    write_text_file(dir + "/verdicts.txt", verdict_text());
}

// ---------------------------------------------------------------------------
// SweepSpec

const std::vector<std::string>& known_experiments() {
    static const std::vector<std::string> ids = {"iv-curves", "vtc", "bias-sweep",
                                                 "frequency-sweep", "random-vectors"};
    return ids;
}

SweepSpec SweepSpec::defaults_for(std::string_view experiment) {
    SweepSpec s;
    s.experiment = std::string(experiment);
    if (experiment == "frequency-sweep") {
        s.gates = {GateKind::Nand2};
        // Octaves from 100 kHz, extended past the expected crossover.
        s.frequencies = {100e3, 200e3, 400e3, 800e3, 1.6e6, 3.2e6, 6.4e6, 12.8e6, 16e6};
    } else if (experiment == "random-vectors") {
        s.gates = {GateKind::Nand2, GateKind::Nor2};
    } else if (experiment == "vtc" || experiment == "iv-curves") {
        s.gates = {GateKind::Inverter};
    }
    return s;
}

SweepSpec SweepSpec::from_config_file(const std::string& path) {
    KeyValueFile kv = KeyValueFile::load(path);
    const std::string* exp = kv.find("experiment");
    if (!exp) throw CardError(path + ": missing 'experiment' key");
    SweepSpec s = defaults_for(to_lower(*exp));

    auto number = [&](const std::string& key, const std::string& value) {
        auto v = parse_eng(value);
        if (!v) throw CardError(path + ": bad numeric value for " + key);
        return *v;
    };

    for (const auto& [key, value] : kv.entries) {
        if (key == "experiment") continue;
        if (key == "card") s.card_path = value;
        else if (key == "out") s.out_dir = value;
        else if (key == "vdd") s.vdd = number(key, value);
        else if (key == "frequency") s.frequency = number(key, value);
        else if (key == "load_cap") s.load_cap = number(key, value);
        else if (key == "prbs_bits") s.prbs_bits = static_cast<int>(number(key, value));
        else if (key == "jobs") s.jobs = static_cast<unsigned>(number(key, value));
        else if (key == "van") s.v_an_grid = parse_list(value, key);
        else if (key == "frequencies") s.frequencies = parse_list(value, key);
        else if (key == "seeds" || key == "seed") {
            s.seeds.clear();
            for (double v : parse_list(value, key)) s.seeds.push_back(static_cast<std::uint16_t>(v));
        } else if (key == "gates") {
            s.gates.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) s.gates.push_back(gate_from_string(trim(item)));
        } else if (key == "solver.reltol") s.solver.reltol = number(key, value);
        else if (key == "solver.vntol") s.solver.vntol = number(key, value);
        else if (key == "solver.abstol") s.solver.abstol = number(key, value);
        else if (key == "solver.gmin") s.solver.gmin = number(key, value);
        else if (key == "solver.lte_tol") s.solver.lte_tol = number(key, value);
        else if (key == "solver.min_step") s.solver.min_step = number(key, value);
        else if (key == "solver.max_step") s.solver.max_step = number(key, value);
        else if (key == "solver.max_newton_iters")
            s.solver.max_newton_iters = static_cast<int>(number(key, value));
        else if (key == "solver.integration") {
            std::string v = to_lower(value);
            if (v == "trapezoidal" || v == "trap") s.solver.integration = Integration::Trapezoidal;
            else if (v == "backward-euler" || v == "be") s.solver.integration = Integration::BackwardEuler;
            else throw CardError(path + ": unknown integration '" + value + "'");
        } else {
            throw CardError(path + ": unknown config key '" + key + "'");
        }
    }
    s.check();
    return s;
}

void SweepSpec::check() const {
    if (std::find(known_experiments().begin(), known_experiments().end(), experiment) ==
        known_experiments().end()) {
        throw CardError("unknown experiment '" + experiment + "'");
    }
    if (gates.empty()) throw CardError("gate set must be non-empty");
    if (v_an_grid.empty()) throw CardError("v_an grid must be non-empty");
    for (double v : v_an_grid) {
        if (v < 0 || v > vdd) throw CardError("v_an grid entry outside [0, vdd]");
    }
    if (experiment == "frequency-sweep" && frequencies.empty())
        throw CardError("frequency grid must be non-empty");
    if (experiment == "random-vectors") {
        if (seeds.empty()) throw CardError("seed list must be non-empty");
        for (auto sd : seeds) {
            if (sd == 0) throw CardError("PRBS seed must be nonzero");
        }
        if (prbs_bits < 8) throw CardError("prbs_bits too small");
    }
    solver.check();
}

// ---------------------------------------------------------------------------
// Gate run measurement

namespace {

Waveform composite_input(const GateSpec& spec, const TransientResult& tr) {
    if (spec.gate == GateKind::Inverter) return tr.waveform("in");
    Waveform a = tr.waveform("ina");
    Waveform b = tr.waveform("inb");
    Waveform out = a;
    const bool use_min = spec.gate == GateKind::Nand2;  // AND level; NOR pairs with OR
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = use_min ? std::min(a.values[i], b.values[i])
                                : std::max(a.values[i], b.values[i]);
    }
    out.quantity = use_min ? "and(ina,inb)" : "or(ina,inb)";
    return out;
}

Waveform negated(Waveform w) {
    for (auto& v : w.values) v = -v;
    return w;
}

// Expected-high / expected-low sample times at the midpoints of the stable
// half-states inside the window.
void logic_sample_times(const GateSpec& spec, Window w, std::vector<double>& high,
                        std::vector<double>& low) {
    const double t0 = w.t_start;
    if (spec.stimulus.kind == StimulusSpec::Kind::Pulse) {
        const double T = 1.0 / spec.stimulus.frequency;
        switch (spec.gate) {
            case GateKind::Inverter:
                low = {t0 + 0.25 * T};
                high = {t0 + 0.75 * T};
                break;
            case GateKind::Nand2:
                low = {t0 + 0.25 * T};
                high = {t0 + 0.75 * T, t0 + 1.25 * T, t0 + 1.75 * T};
                break;
            case GateKind::Nor2:
                high = {t0 + 1.75 * T};
                low = {t0 + 0.25 * T, t0 + 0.75 * T, t0 + 1.25 * T};
                break;
        }
        return;
    }
    // PRBS: expected output per bit from the generator sequences.
    const double tb = 1.0 / spec.stimulus.frequency;
    std::uint16_t sa = spec.stimulus.seed_a;
    std::uint16_t sb = spec.stimulus.seed_b;
    if (sb == 0) sb = lfsr16_advance(sa, 9973);
    const int k0 = static_cast<int>(std::ceil(w.t_start / tb));
    const int k1 = static_cast<int>(std::floor(w.t_end / tb));
    auto bits_a = prbs_bits(sa, k1 + 1);
    auto bits_b = prbs_bits(sb, k1 + 1);
    for (int k = k0; k < k1; ++k) {
        int a = bits_a[static_cast<std::size_t>(k)];
        int b = bits_b[static_cast<std::size_t>(k)];
        int expected;
        switch (spec.gate) {
            case GateKind::Inverter: expected = !a; break;
            case GateKind::Nand2: expected = !(a && b); break;
            case GateKind::Nor2: default: expected = !(a || b); break;
        }
        (expected ? high : low).push_back((k + 0.5) * tb);
    }
}

}  // namespace

MeasurementReport measure_gate_run(const GateSpec& spec, const TransientResult& tr, Window w) {
    MeasurementReport rep;
    rep.window = w;

    Waveform input = composite_input(spec, tr);
    Waveform output = tr.waveform("out");

    DelayResult d = propagation_delay(input, output, 0.0, spec.vdd, w);
    rep.tplh = d.tplh;
    rep.tphl = d.tphl;
    rep.tp_avg = d.tp_avg;

    RiseFall rf = rise_fall_times(output, 0.0, spec.vdd, w);
    rep.t_rise = rf.t_rise;
    rep.t_fall = rf.t_fall;

    rep.p_supply = average_power(spec.vdd, negated(tr.waveform("i(vdd)")), w);
    rep.p_bias = 0.0;
    for (const auto& cname : tr.columns) {
        if (cname.rfind("i(vb", 0) != 0) continue;
        double value = cname[4] == 'n' ? spec.v_an : spec.v_ap;
        if (value == 0.0) continue;
        rep.p_bias += average_power(value, negated(tr.waveform(cname)), w);
    }
    rep.p_avg = rep.p_supply + rep.p_bias;
    rep.pdp = rep.p_avg * rep.tp_avg;

    std::vector<double> high, low;
    logic_sample_times(spec, w, high, low);
    LogicLevels ll = logic_levels(output, high, low, spec.vdd);
    rep.voh = ll.voh;
    rep.vol = ll.vol;
    rep.logic_pass = ll.pass;
    return rep;
}

// ---------------------------------------------------------------------------
// Experiment runners

namespace {

struct GateRun {
    MeasurementReport rep;
    bool functional = true;
    std::string failure;
};

GateSpec make_gate_spec(const SweepSpec& spec, const ModelCard& card, GateKind gate,
                        BodyStyle style, double v_an, double frequency,
                        StimulusSpec::Kind stim = StimulusSpec::Kind::Pulse,
                        std::uint16_t seed = 1) {
    GateSpec g;
    g.gate = gate;
    g.style = style;
    g.v_an = style == BodyStyle::Vtmos ? v_an : 0.0;
    g.v_ap = g.v_an;  // paper: V_AP tracks V_AN in magnitude
    g.vdd = spec.vdd;
    g.card = card;
    g.load_cap = spec.load_cap;
    g.stimulus.kind = stim;
    g.stimulus.frequency = frequency;
    g.stimulus.seed_a = seed;
    return g;
}

GateRun run_gate_transient(const GateSpec& gspec, const SolverOptions& opts, double t_settle,
                           double t_stop) {
    GateRun out;
    Circuit c = build_gate(gspec);
    Simulator sim(c, opts);
    TransientResult tr = sim.transient(t_stop);
    try {
        out.rep = measure_gate_run(gspec, tr, Window{t_settle, t_stop});
    } catch (const MeasureError& e) {
        out.functional = false;
        out.failure = e.what();
    }
    return out;
}

// Mean DC power over all input combinations, inputs held at rails.
double static_power(const GateSpec& gspec, const SolverOptions& opts) {
    Circuit base = build_gate(gspec);
    const bool two_inputs = gspec.gate != GateKind::Inverter;
    const int combos = two_inputs ? 4 : 2;
    double acc = 0.0;
    for (int k = 0; k < combos; ++k) {
        Circuit c = base;
        for (auto& e : c.elements) {
            auto* v = std::get_if<VSource>(&e);
            if (!v) continue;
            if (v->name == "vin" || v->name == "vina")
                v->spec = DcSpec{(k & 1) ? gspec.vdd : 0.0};
            else if (v->name == "vinb")
                v->spec = DcSpec{(k & 2) ? gspec.vdd : 0.0};
        }
        Simulator sim(c, opts);
        SolutionPoint op = sim.dc_operating_point();
        double p = gspec.vdd * -op["i(vdd)"];
        for (std::size_t i = 0; i < op.names.size(); ++i) {
            if (op.names[i].rfind("i(vb", 0) != 0) continue;
            double value = op.names[i][4] == 'n' ? gspec.v_an : gspec.v_ap;
            p += value * -op.values[i];
        }
        acc += p;
    }
    return acc / combos;
}

ExperimentResult exp_iv_curves(const SweepSpec& spec, const ModelCard& card) {
    const double step = 0.01;
    const int npts = 21;

    struct Curve {
        std::vector<double> current_vgs, current_vds;
    };
    std::vector<Curve> curves(spec.v_an_grid.size());

    parallel_for_indexed(spec.v_an_grid.size(), spec.jobs, [&](std::size_t i) {
        const double v_an = spec.v_an_grid[i];
        auto make = [&](double vg_dc, double vd_dc) {
            Circuit c;
            c.title = "iv fixture";
            ModelDef def;
            def.name = "nmos_ref";
            def.kind = ModelDef::Kind::Nmos;
            def.mos = card.nmos;
            c.models = {def};
            c.elements = {
                Mosfet{"m1", "d", "g", "0", "b", "nmos_ref"},
                VSource{"vg", "g", "0", DcSpec{vg_dc}},
                VSource{"vd", "d", "0", DcSpec{vd_dc}},
                VSource{"vb", "g", "b", DcSpec{v_an}},  // body = gate - v_an
            };
            return c;
        };
        {
            Simulator sim(make(0.0, spec.vdd), spec.solver);
            for (const auto& pt : sim.dc_sweep("vg", 0.0, spec.vdd, step))
                curves[i].current_vgs.push_back(-pt["i(vd)"]);
        }
        {
            Simulator sim(make(spec.vdd, 0.0), spec.solver);
            for (const auto& pt : sim.dc_sweep("vd", 0.0, spec.vdd, step))
                curves[i].current_vds.push_back(-pt["i(vd)"]);
        }
    });

    ExperimentResult res;
    Table vgs, vds;
    vgs.columns = {"v_an", "v_gs", "i_ds"};
    vds.columns = {"v_an", "v_ds", "i_ds"};
    for (std::size_t i = 0; i < spec.v_an_grid.size(); ++i) {
        for (int k = 0; k < npts; ++k) {
            double v = k * step;
            vgs.rows.push_back({fmt(spec.v_an_grid[i]), fmt(v), fmt(curves[i].current_vgs[k])});
            vds.rows.push_back({fmt(spec.v_an_grid[i]), fmt(v), fmt(curves[i].current_vds[k])});
        }
    }
    res.tables["iv_vgs"] = std::move(vgs);
    res.tables["iv_vds"] = std::move(vds);
    res.verdicts = compute_verdicts(spec.experiment, res.tables);
    return res;
}

ExperimentResult exp_vtc(const SweepSpec& spec, const ModelCard& card) {
    struct Key {
        BodyStyle style;
        double v_an;
    };
    std::vector<Key> keys{{BodyStyle::Cmos, 0.0}};
    for (double v : spec.v_an_grid) keys.push_back({BodyStyle::Vtmos, v});

    const double step = 0.002;
    struct CurveOut {
        std::vector<std::pair<double, double>> pts;
        NoiseMargins nm;
        bool inverting = true;
    };
    std::vector<CurveOut> curves(keys.size());

    parallel_for_indexed(keys.size(), spec.jobs, [&](std::size_t i) {
        GateSpec g = make_gate_spec(spec, card, GateKind::Inverter, keys[i].style, keys[i].v_an,
                                    spec.frequency);
        Circuit c = build_gate(g);
        Simulator sim(c, spec.solver);
        auto pts = sim.dc_sweep("vin", 0.0, spec.vdd, step);
        for (std::size_t k = 0; k < pts.size(); ++k) {
            curves[i].pts.emplace_back(k * step, pts[k]["out"]);
        }
        try {
            curves[i].nm = noise_margins(curves[i].pts);
        } catch (const MeasureError&) {
            curves[i].inverting = false;
        }
    });

    ExperimentResult res;
    Table vtc, margins;
    vtc.columns = {"style", "v_an", "v_in", "v_out"};
    margins.columns = {"style", "v_an", "voh", "vol", "vih", "vil", "nmh", "nml"};
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const std::string style = to_string(keys[i].style);
        for (const auto& [vin, vout] : curves[i].pts) {
            vtc.rows.push_back({style, fmt(keys[i].v_an), fmt(vin), fmt(vout)});
        }
        const NoiseMargins& nm = curves[i].nm;
        if (curves[i].inverting) {
            margins.rows.push_back({style, fmt(keys[i].v_an), fmt(nm.voh), fmt(nm.vol),
                                    fmt(nm.vih), fmt(nm.vil), fmt(nm.nmh), fmt(nm.nml)});
        } else {
            margins.rows.push_back({style, fmt(keys[i].v_an), "nan", "nan", "nan", "nan",
                                    "nan", "nan"});
        }
    }
    res.tables["vtc"] = std::move(vtc);
    res.tables["noise_margins"] = std::move(margins);
    res.verdicts = compute_verdicts(spec.experiment, res.tables);
    return res;
}

ExperimentResult exp_bias_sweep(const SweepSpec& spec, const ModelCard& card) {
    struct Key {
        GateKind gate;
        BodyStyle style;
        double v_an;
    };
    std::vector<Key> keys;
    for (GateKind g : spec.gates) {
        keys.push_back({g, BodyStyle::Cmos, 0.0});
        for (double v : spec.v_an_grid) keys.push_back({g, BodyStyle::Vtmos, v});
    }

    struct RowOut {
        GateRun run;
        double p_static = 0.0;
    };
    std::vector<RowOut> outs(keys.size());

    parallel_for_indexed(keys.size(), spec.jobs, [&](std::size_t i) {
        GateSpec g = make_gate_spec(spec, card, keys[i].gate, keys[i].style, keys[i].v_an,
                                    spec.frequency);
        const double super = stimulus_super_period(g);
        outs[i].run = run_gate_transient(g, spec.solver, super, 2 * super);
        outs[i].p_static = static_power(g, spec.solver);
    });

    ExperimentResult res;
    Table t;
    t.columns = {"gate", "style", "v_an", "frequency", "tplh", "tphl", "tp_avg",
                 "t_rise", "t_fall", "p_supply", "p_bias", "p_total", "p_static",
                 "p_dynamic", "pdp", "voh", "vol", "logic_pass"};
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const MeasurementReport& r = outs[i].run.rep;
        const bool ok = outs[i].run.functional;
        auto cell = [&](double v) { return ok ? fmt(v) : std::string("nan"); };
        t.rows.push_back({to_string(keys[i].gate), to_string(keys[i].style), fmt(keys[i].v_an),
                          fmt(spec.frequency), cell(r.tplh), cell(r.tphl), cell(r.tp_avg),
                          cell(r.t_rise), cell(r.t_fall), cell(r.p_supply), cell(r.p_bias),
                          cell(r.p_avg), fmt(outs[i].p_static),
                          cell(r.p_avg - outs[i].p_static), cell(r.pdp), cell(r.voh),
                          cell(r.vol), ok && r.logic_pass ? "1" : "0"});
    }
    res.tables["bias_sweep"] = std::move(t);
    res.verdicts = compute_verdicts(spec.experiment, res.tables);
    return res;
}

ExperimentResult exp_frequency_sweep(const SweepSpec& spec, const ModelCard& card) {
    struct Key {
        BodyStyle style;
        double freq;
    };
    std::vector<Key> keys;
    for (BodyStyle style : {BodyStyle::Cmos, BodyStyle::Vtmos}) {
        for (double f : spec.frequencies) keys.push_back({style, f});
    }
    const double v_bias = spec.v_an_grid.back();  // reference study: 0.2 V

    std::vector<GateRun> outs(keys.size());
    parallel_for_indexed(keys.size(), spec.jobs, [&](std::size_t i) {
        GateSpec g = make_gate_spec(spec, card, GateKind::Nand2, keys[i].style, v_bias,
                                    keys[i].freq);
        const double super = stimulus_super_period(g);
        outs[i] = run_gate_transient(g, spec.solver, super, 2 * super);
    });

    ExperimentResult res;
    Table t;
    t.columns = {"style", "frequency", "tp_avg", "p_supply", "p_bias", "p_total", "pdp"};
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const MeasurementReport& r = outs[i].rep;
        const bool ok = outs[i].functional;
        auto cell = [&](double v) { return ok ? fmt(v) : std::string("nan"); };
        t.rows.push_back({to_string(keys[i].style), fmt(keys[i].freq), cell(r.tp_avg),
                          cell(r.p_supply), cell(r.p_bias), cell(r.p_avg), cell(r.pdp)});
    }

    // Per-frequency comparison and interpolated crossover.
    Table adv;
    adv.columns = {"frequency", "p_cmos", "p_vtmos", "advantage", "rel_advantage"};
    const std::size_t nf = spec.frequencies.size();
    for (std::size_t k = 0; k < nf; ++k) {
        double pc = outs[k].functional ? outs[k].rep.p_avg : NAN;
        double pv = outs[nf + k].functional ? outs[nf + k].rep.p_avg : NAN;
        adv.rows.push_back({fmt(spec.frequencies[k]), fmt(pc), fmt(pv), fmt(pc - pv),
                            fmt((pc - pv) / pc)});
    }

    Table cross;
    cross.columns = {"crossover_hz", "found"};
    double crossover = NAN;
    for (std::size_t k = 0; k + 1 < nf; ++k) {
        double a1 = adv.num(k, "advantage");
        double a2 = adv.num(k + 1, "advantage");
        if (std::isfinite(a1) && std::isfinite(a2) && a1 > 0 && a2 <= 0) {
            double f1 = spec.frequencies[k], f2 = spec.frequencies[k + 1];
            crossover = f1 + (f2 - f1) * a1 / (a1 - a2);
            break;
        }
    }
    cross.rows.push_back({fmt(crossover), std::isfinite(crossover) ? "1" : "0"});

    res.tables["freq_sweep"] = std::move(t);
    res.tables["freq_advantage"] = std::move(adv);
    res.tables["freq_crossover"] = std::move(cross);
    res.verdicts = compute_verdicts(spec.experiment, res.tables);
    return res;
}

ExperimentResult exp_random_vectors(const SweepSpec& spec, const ModelCard& card) {
    std::vector<GateKind> gates;
    for (GateKind g : spec.gates) {
        if (g != GateKind::Inverter) gates.push_back(g);
    }
    const double v_bias = spec.v_an_grid.back();

    struct Key {
        GateKind gate;
        bool prbs;
        std::uint16_t seed;
    };
    std::vector<Key> keys;
    for (GateKind g : gates) {
        keys.push_back({g, false, 0});
        for (auto sd : spec.seeds) keys.push_back({g, true, sd});
    }

    std::vector<GateRun> outs(keys.size());
    parallel_for_indexed(keys.size(), spec.jobs, [&](std::size_t i) {
        if (keys[i].prbs) {
            GateSpec g = make_gate_spec(spec, card, keys[i].gate, BodyStyle::Vtmos, v_bias,
                                        spec.frequency, StimulusSpec::Kind::Prbs, keys[i].seed);
            const double tb = 1.0 / spec.frequency;
            outs[i] = run_gate_transient(g, spec.solver, 2 * tb, spec.prbs_bits * tb);
        } else {
            GateSpec g = make_gate_spec(spec, card, keys[i].gate, BodyStyle::Vtmos, v_bias,
                                        spec.frequency);
            const double super = stimulus_super_period(g);
            outs[i] = run_gate_transient(g, spec.solver, super, 2 * super);
        }
    });

    ExperimentResult res;
    Table t;
    t.columns = {"gate", "stimulus", "seed", "tp_avg", "t_rise", "t_fall", "p_total", "pdp"};
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const MeasurementReport& r = outs[i].rep;
        const bool ok = outs[i].functional;
        auto cell = [&](double v) { return ok ? fmt(v) : std::string("nan"); };
        t.rows.push_back({to_string(keys[i].gate), keys[i].prbs ? "prbs" : "pulse",
                          std::to_string(keys[i].seed), cell(r.tp_avg), cell(r.t_rise),
                          cell(r.t_fall), cell(r.p_avg), cell(r.pdp)});
    }
    res.tables["random_vectors"] = std::move(t);
    res.verdicts = compute_verdicts(spec.experiment, res.tables);
    return res;
}

}  // namespace

ExperimentResult run_experiment(const SweepSpec& spec) {
    spec.check();
    ModelCard card = ModelCard::load(spec.card_path);
    if (spec.experiment == "iv-curves") return exp_iv_curves(spec, card);
    if (spec.experiment == "vtc") return exp_vtc(spec, card);
    if (spec.experiment == "bias-sweep") return exp_bias_sweep(spec, card);
    if (spec.experiment == "frequency-sweep") return exp_frequency_sweep(spec, card);
    if (spec.experiment == "random-vectors") return exp_random_vectors(spec, card);
    throw CardError("unknown experiment '" + spec.experiment + "'");
}

// ---------------------------------------------------------------------------
// Verdict layer (pure function of the emitted tables)

namespace {

using Tables = std::map<std::string, Table>;

const Table& table(const Tables& ts, const std::string& name) {
    auto it = ts.find(name);
    if (it == ts.end()) throw SimError("missing table '" + name + "'");
    return it->second;
}

std::vector<Verdict> verdicts_iv(const Tables& ts) {
    std::vector<Verdict> out;
    const Table& vgs = table(ts, "iv_vgs");
    const Table& vds = table(ts, "iv_vds");

    // Group rows by v_an (rows are grid-ordered: v_an outer, voltage inner).
    auto group = [](const Table& t, const char* vcol) {
        std::map<double, std::vector<std::pair<double, double>>> g;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            g[t.num(r, "v_an")].emplace_back(t.num(r, vcol), t.num(r, "i_ds"));
        }
        return g;
    };
    auto gv = group(vgs, "v_gs");
    auto gd = group(vds, "v_ds");

    {
        bool ok = true;
        double worst = 1e300;
        std::vector<const std::vector<std::pair<double, double>>*> curves;
        for (auto& [van, pts] : gv) curves.push_back(&pts);
        for (std::size_t c = 0; c + 1 < curves.size(); ++c) {
            for (std::size_t k = 0; k < curves[c]->size(); ++k) {
                double drop = (*curves[c])[k].second - (*curves[c + 1])[k].second;
                worst = std::min(worst, drop);
                if (!(drop > 0)) ok = false;
            }
        }
        out.push_back({"iv-vgs-ordering", ok,
                       "pointwise I(v_an) ordering, min adjacent drop " + fmt(worst) + " A"});
    }
    {
        bool ok = true;
        double worst = 0;
        for (auto& [van, pts] : gd) {
            double i0 = std::fabs(pts.front().second);  // v_ds = 0 row
            worst = std::max(worst, i0);
            if (!(i0 <= k_vds0_current_bound)) ok = false;
        }
        out.push_back({"iv-vds0-zero", ok,
                       "max |I(v_ds=0)| = " + fmt(worst) + " A (bound " +
                           fmt(k_vds0_current_bound) + ")"});
    }
    {
        // Flatness (I(vmax)-I(vmax/2))/I(vmax) per curve, decreasing in v_an.
        bool ok = true;
        std::string vals;
        double prev = 0;
        bool first = true;
        for (auto& [van, pts] : gd) {
            double imax = pts.back().second;
            double imid = pts[pts.size() / 2].second;
            double flat = (imax - imid) / imax;
            vals += (first ? "" : ", ") + fmt(flat);
            if (!first && !(flat < prev)) ok = false;
            prev = flat;
            first = false;
        }
        out.push_back({"iv-flatness-decreasing", ok, "flatness by v_an: [" + vals + "]"});
    }
    return out;
}

std::vector<Verdict> verdicts_vtc(const Tables& ts) {
    std::vector<Verdict> out;
    const Table& vtc = table(ts, "vtc");
    const Table& nm = table(ts, "noise_margins");

    std::map<std::pair<std::string, double>, std::vector<std::pair<double, double>>> curves;
    for (std::size_t r = 0; r < vtc.rows.size(); ++r) {
        curves[{vtc.cell(r, "style"), vtc.num(r, "v_an")}].emplace_back(vtc.num(r, "v_in"),
                                                                        vtc.num(r, "v_out"));
    }

    bool mono = true, rails = true;
    double worst_step = 0, worst_rail = 0;
    double vdd = 0;
    for (auto& [key, pts] : curves) {
        vdd = std::max(vdd, pts.front().first + pts.back().first);  // v_in spans [0, vdd]
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            double rise = pts[k + 1].second - pts[k].second;
            worst_step = std::max(worst_step, rise);
            if (rise > 1e-9) mono = false;
        }
    }
    for (auto& [key, pts] : curves) {
        double top_err = std::fabs(pts.front().second - vdd);
        double bot_err = std::fabs(pts.back().second);
        worst_rail = std::max({worst_rail, top_err, bot_err});
        if (top_err > 5e-3 || bot_err > 5e-3) rails = false;
    }
    out.push_back({"vtc-monotone", mono,
                   "max positive step " + fmt(worst_step) + " V (tolerance 1e-9)"});
    out.push_back({"vtc-rail-endpoints", rails,
                   "worst endpoint distance " + fmt(worst_rail) + " V (bound 5 mV)"});

    bool margins = true;
    double worst_margin = 1e300;
    for (std::size_t r = 0; r < nm.rows.size(); ++r) {
        double nmh = nm.num(r, "nmh"), nml = nm.num(r, "nml");
        worst_margin = std::min({worst_margin, nmh, nml});
        if (!(nmh > 0) || !(nml > 0)) margins = false;
    }
    out.push_back({"vtc-margins-positive", margins,
                   "worst noise margin " + fmt(worst_margin) + " V"});
    return out;
}

std::vector<Verdict> verdicts_bias(const Tables& ts) {
    std::vector<Verdict> out;
    const Table& t = table(ts, "bias_sweep");

    std::set<std::string> gates;
    for (std::size_t r = 0; r < t.rows.size(); ++r) gates.insert(t.cell(r, "gate"));

    struct GateRows {
        double cmos_tp = NAN, cmos_p = NAN, cmos_pdp = NAN;
        std::vector<std::array<double, 4>> vt;  // v_an, tp, p_total, pdp
    };
    std::map<std::string, GateRows> by_gate;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        GateRows& g = by_gate[t.cell(r, "gate")];
        if (t.cell(r, "style") == "cmos") {
            g.cmos_tp = t.num(r, "tp_avg");
            g.cmos_p = t.num(r, "p_total");
            g.cmos_pdp = t.num(r, "pdp");
        } else {
            g.vt.push_back({t.num(r, "v_an"), t.num(r, "tp_avg"), t.num(r, "p_total"),
                            t.num(r, "pdp")});
        }
    }
    for (auto& [name, g] : by_gate) {
        std::sort(g.vt.begin(), g.vt.end(),
                  [](const auto& a, const auto& b) { return a[0] < b[0]; });
    }

    double mean_reduction = 0;
    std::string reductions;
    for (auto& [name, g] : by_gate) {
        bool delay_ok = std::isfinite(g.cmos_tp) && !g.vt.empty() && g.vt.front()[1] < g.cmos_tp;
        bool power_ok = std::isfinite(g.cmos_p) && !g.vt.empty() && g.vt.front()[2] > g.cmos_p;
        for (std::size_t k = 0; k + 1 < g.vt.size(); ++k) {
            if (!(g.vt[k + 1][1] >= g.vt[k][1])) delay_ok = false;   // non-decreasing
            if (!(g.vt[k + 1][2] < g.vt[k][2])) power_ok = false;    // strictly decreasing
        }
        out.push_back({"delay-ordering-" + name, delay_ok,
                       "tp cmos " + fmt(g.cmos_tp) + " s, vtmos [" + fmt(g.vt.front()[1]) +
                           " .. " + fmt(g.vt.back()[1]) + "] s"});
        out.push_back({"power-ordering-" + name, power_ok,
                       "p cmos " + fmt(g.cmos_p) + " W, vtmos [" + fmt(g.vt.front()[2]) +
                           " .. " + fmt(g.vt.back()[2]) + "] W"});
        bool pdp_ok = g.vt.back()[3] < g.cmos_pdp;
        out.push_back({"pdp-improvement-" + name, pdp_ok,
                       "pdp cmos " + fmt(g.cmos_pdp) + " J vs vtmos(max bias) " +
                           fmt(g.vt.back()[3]) + " J"});
        double red = (g.cmos_p - g.vt.back()[2]) / g.cmos_p;
        mean_reduction += red;
        reductions += (reductions.empty() ? "" : ", ") + name + " " + fmt(100 * red) + "%";
    }
    mean_reduction /= static_cast<double>(by_gate.size());
    out.push_back({"power-reduction-mean", mean_reduction >= 0.30,
                   "mean reduction " + fmt(100 * mean_reduction) + "% (threshold 30%); " +
                       reductions});

    bool logic_ok = true;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.cell(r, "logic_pass") != "1") logic_ok = false;
    }
    out.push_back({"logic-integrity", logic_ok, "all rows pass logic-level checks"});
    return out;
}

std::vector<Verdict> verdicts_freq(const Tables& ts) {
    std::vector<Verdict> out;
    const Table& t = table(ts, "freq_sweep");
    const Table& adv = table(ts, "freq_advantage");
    const Table& cross = table(ts, "freq_crossover");

    double adv0 = adv.num(0, "advantage");
    double rel0 = adv.num(0, "rel_advantage");
    out.push_back({"advantage-positive-100k", adv0 > 0,
                   "advantage " + fmt(adv0) + " W (" + fmt(100 * rel0) + "%) at " +
                       adv.cell(0, "frequency") + " Hz"});

    bool shrink = true;
    for (std::size_t r = 0; r + 1 < adv.rows.size(); ++r) {
        if (!(adv.num(r + 1, "rel_advantage") < adv.num(r, "rel_advantage"))) shrink = false;
    }
    out.push_back({"advantage-monotone-shrink", shrink,
                   "rel advantage " + fmt(100 * adv.num(0, "rel_advantage")) + "% -> " +
                       fmt(100 * adv.num(adv.rows.size() - 1, "rel_advantage")) + "%"});

    bool found = cross.cell(0, "found") == "1";
    out.push_back({"crossover-found", found,
                   found ? "crossover at " + cross.cell(0, "crossover_hz") + " Hz"
                         : "no sign change within the grid"});

    std::map<std::string, std::vector<std::pair<double, double>>> by_style;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        by_style[t.cell(r, "style")].emplace_back(t.num(r, "frequency"), t.num(r, "p_total"));
    }
    bool increasing = true;
    for (auto& [style, pts] : by_style) {
        std::sort(pts.begin(), pts.end());
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            if (!(pts[k + 1].second > pts[k].second)) increasing = false;
        }
    }
    out.push_back({"power-increases-with-frequency", increasing,
                   "p_total monotone in frequency for both styles"});
    return out;
}

std::vector<Verdict> verdicts_random(const Tables& ts) {
    std::vector<Verdict> out;
    const Table& t = table(ts, "random_vectors");
    const char* metrics[] = {"tp_avg", "t_rise", "t_fall", "p_total", "pdp"};

    std::set<std::string> gates;
    for (std::size_t r = 0; r < t.rows.size(); ++r) gates.insert(t.cell(r, "gate"));

    for (const auto& gate : gates) {
        bool agree = true, match = true;
        double worst_spread = 0, worst_dev = 0;
        for (const char* m : metrics) {
            std::vector<double> prbs;
            double det = NAN;
            for (std::size_t r = 0; r < t.rows.size(); ++r) {
                if (t.cell(r, "gate") != gate) continue;
                if (t.cell(r, "stimulus") == "prbs") prbs.push_back(t.num(r, m));
                else det = t.num(r, m);
            }
            if (prbs.empty() || !std::isfinite(det)) {
                agree = match = false;
                continue;
            }
            double lo = *std::min_element(prbs.begin(), prbs.end());
            double hi = *std::max_element(prbs.begin(), prbs.end());
            double mean = 0;
            for (double v : prbs) mean += v;
            mean /= static_cast<double>(prbs.size());
            double spread = (hi - lo) / mean;
            double dev = std::fabs(mean - det) / det;
            worst_spread = std::max(worst_spread, spread);
            worst_dev = std::max(worst_dev, dev);
            if (!(spread <= 0.10)) agree = false;
            if (!(dev <= 0.25)) match = false;
        }
        out.push_back({"seed-agreement-" + gate, agree,
                       "worst metric spread " + fmt(100 * worst_spread) + "% (bound 10%)"});
        out.push_back({"match-deterministic-" + gate, match,
                       "worst deviation " + fmt(100 * worst_dev) + "% (bound 25%)"});
    }
    return out;
}

}  // namespace

std::vector<Verdict> compute_verdicts(std::string_view experiment, const Tables& tables) {
    if (experiment == "iv-curves") return verdicts_iv(tables);
    if (experiment == "vtc") return verdicts_vtc(tables);
    if (experiment == "bias-sweep") return verdicts_bias(tables);
    if (experiment == "frequency-sweep") return verdicts_freq(tables);
    if (experiment == "random-vectors") return verdicts_random(tables);
    throw CardError("unknown experiment '" + std::string(experiment) + "'");
}

}  // namespace vtsim
