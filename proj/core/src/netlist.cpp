#include "vtsim/netlist.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "vtsim/errors.hpp"
#include "vtsim/util.hpp"

namespace vtsim {

namespace {

struct Token {
    std::string text;
    int column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (std::isspace(static_cast<unsigned char>(line[i])) ||
                                   line[i] == '(' || line[i] == ')' || line[i] == ','))
            ++i;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
               line[i] != '(' && line[i] != ')' && line[i] != ',')
            ++i;
        if (i > start)
            out.push_back({to_lower(line.substr(start, i - start)), static_cast<int>(start) + 1});
    }
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    ParseResult run() {
        std::vector<std::string_view> lines;
        std::size_t pos = 0;
        while (pos <= text_.size()) {
            std::size_t nl = text_.find('\n', pos);
            if (nl == std::string_view::npos) {
                lines.push_back(text_.substr(pos));
                break;
            }
            lines.push_back(text_.substr(pos, nl - pos));
            pos = nl + 1;
        }

        if (lines.empty() || trim(lines[0]).empty()) {
            error(1, 1, "missing title line");
        } else {
            result_.circuit.title = trim(lines[0]);
        }

        bool saw_end = false;
        for (std::size_t li = 1; li < lines.size(); ++li) {
            line_no_ = static_cast<int>(li) + 1;
            std::string stripped = trim(lines[li]);
            if (stripped.empty() || stripped[0] == '*') continue;
            if (saw_end) break;
            auto toks = tokenize(lines[li]);
            if (toks.empty()) continue;
            const std::string& head = toks[0].text;
            if (head == ".end") {
                saw_end = true;
            } else if (head == ".model") {
                parse_model(toks);
            } else if (head[0] == '.') {
                error(line_no_, toks[0].column, "unknown directive '" + head + "'");
            } else {
                parse_element(toks);
            }
        }
        if (!saw_end) error(line_no_, 1, "missing .end");

        finish_checks();
        return std::move(result_);
    }

private:
    void error(int line, int col, std::string msg) {
        result_.diagnostics.push_back({line, col, std::move(msg)});
    }

    bool number(const Token& t, double& out, std::string_view what) {
        auto v = parse_eng(t.text);
        if (!v) {
            error(line_no_, t.column, "bad " + std::string(what) + " value '" + t.text + "'");
            return false;
        }
        out = *v;
        return true;
    }

    void register_name(const Token& t) {
        if (!element_names_.insert(t.text).second) {
            error(line_no_, t.column, "duplicate element name '" + t.text + "'");
        }
    }

    void parse_model(const std::vector<Token>& toks) {
        if (toks.size() < 3) {
            error(line_no_, toks[0].column, ".model needs a name and a kind");
            return;
        }
        ModelDef def;
        def.name = toks[1].text;
        if (std::any_of(result_.circuit.models.begin(), result_.circuit.models.end(),
                        [&](const ModelDef& m) { return m.name == def.name; })) {
            error(line_no_, toks[1].column, "duplicate model name '" + def.name + "'");
            return;
        }
        const std::string& kind = toks[2].text;
        if (kind == "nmos") {
            def.kind = ModelDef::Kind::Nmos;
            def.mos.kind = MosKind::Nmos;
        } else if (kind == "pmos") {
            def.kind = ModelDef::Kind::Pmos;
            def.mos.kind = MosKind::Pmos;
        } else if (kind == "d") {
            def.kind = ModelDef::Kind::Diode;
        } else {
            error(line_no_, toks[2].column, "unknown model kind '" + kind + "'");
            return;
        }
        for (std::size_t i = 3; i < toks.size(); ++i) {
            std::size_t eq = toks[i].text.find('=');
            if (eq == std::string::npos) {
                error(line_no_, toks[i].column, "expected key=value, got '" + toks[i].text + "'");
                return;
            }
            std::string key = toks[i].text.substr(0, eq);
            auto val = parse_eng(std::string_view(toks[i].text).substr(eq + 1));
            if (!val) {
                error(line_no_, toks[i].column, "bad value in '" + toks[i].text + "'");
                return;
            }
            if (!apply_model_param(def, key, *val)) {
                error(line_no_, toks[i].column, "unknown model parameter '" + key + "'");
                return;
            }
        }
        result_.circuit.models.push_back(std::move(def));
    }

    static bool apply_model_param(ModelDef& def, const std::string& key, double value) {
        if (def.kind == ModelDef::Kind::Diode) {
            if (key == "i_sat") {
                def.diode.i_sat = value;
            } else if (key == "emission") {
                def.diode.emission = value;
            } else if (key == "temp") {
                def.diode_temp = value;
            } else {
                return false;
            }
            return true;
        }
        MosfetParams& p = def.mos;
        if (key == "vth0") p.vth0 = value;
        else if (key == "gamma") p.gamma = value;
        else if (key == "phi2f") p.phi2f = value;
        else if (key == "n_slope") p.n_slope = value;
        else if (key == "i_spec") p.i_spec = value;
        else if (key == "width") p.width = value;
        else if (key == "length") p.length = value;
        else if (key == "temp") p.temp_kelvin = value;
        else if (key == "cgs") p.cgs = value;
        else if (key == "cgd") p.cgd = value;
        else if (key == "cgb") p.cgb = value;
        else if (key == "cbs") p.cbs = value;
        else if (key == "cbd") p.cbd = value;
        else if (key == "junction.i_sat") p.junction.i_sat = value;
        else if (key == "junction.emission") p.junction.emission = value;
        else return false;
        return true;
    }

    void parse_element(const std::vector<Token>& toks) {
        switch (toks[0].text[0]) {
            case 'm': parse_mosfet(toks); break;
            case 'v': parse_vsource(toks); break;
            case 'r': parse_passive(toks, /*is_resistor=*/true); break;
            case 'c': parse_passive(toks, /*is_resistor=*/false); break;
            case 'd': parse_diode(toks); break;
            default:
                error(line_no_, toks[0].column,
                      "unknown element prefix '" + std::string(1, toks[0].text[0]) + "'");
        }
    }

    void parse_mosfet(const std::vector<Token>& toks) {
        if (toks.size() != 6) {
            error(line_no_, toks[0].column,
                  "MOSFET needs: Mname drain gate source body model");
            return;
        }
        register_name(toks[0]);
        Mosfet m{toks[0].text, toks[1].text, toks[2].text, toks[3].text, toks[4].text,
                 toks[5].text};
        model_refs_.push_back({m.model, line_no_, toks[5].column, /*want_mos=*/true});
        result_.circuit.elements.emplace_back(std::move(m));
    }

    void parse_vsource(const std::vector<Token>& toks) {
        if (toks.size() < 4) {
            error(line_no_, toks[0].column, "voltage source needs: Vname plus minus spec");
            return;
        }
        register_name(toks[0]);
        VSource v;
        v.name = toks[0].text;
        v.plus = toks[1].text;
        v.minus = toks[2].text;

        const std::string& kind = toks[3].text;
        if (kind == "pulse") {
            if (toks.size() != 11) {
                error(line_no_, toks[3].column,
                      "PULSE needs 7 values: v0 v1 delay rise fall width period");
                return;
            }
            PulseSpec p;
            double* slots[] = {&p.v0, &p.v1, &p.delay, &p.rise, &p.fall, &p.width, &p.period};
            for (int i = 0; i < 7; ++i) {
                if (!number(toks[4 + i], *slots[i], "PULSE")) return;
            }
            if (p.period <= 0) {
                error(line_no_, toks[10].column, "pulse period must be > 0");
                return;
            }
            if (p.rise < 0 || p.fall < 0 || p.width < 0 || p.delay < 0) {
                error(line_no_, toks[4].column, "pulse times must be >= 0");
                return;
            }
            v.spec = p;
        } else if (kind == "prbs") {
            if (toks.size() != 8) {
                error(line_no_, toks[3].column, "PRBS needs 4 values: v0 v1 bit_period seed");
                return;
            }
            PrbsSpec p;
            if (!number(toks[4], p.v0, "PRBS") || !number(toks[5], p.v1, "PRBS")) return;
            if (!number(toks[6], p.bit_period, "PRBS")) return;
            if (p.bit_period <= 0) {
                error(line_no_, toks[6].column, "PRBS bit period must be > 0");
                return;
            }
            unsigned long seed = 0;
            try {
                seed = std::stoul(toks[7].text, nullptr, 0);
            } catch (...) {
                error(line_no_, toks[7].column, "bad PRBS seed '" + toks[7].text + "'");
                return;
            }
            if (seed == 0 || seed > 0xffff) {
                error(line_no_, toks[7].column, "PRBS seed must be a nonzero 16-bit value");
                return;
            }
            p.seed = static_cast<std::uint16_t>(seed);
            v.spec = p;
        } else {
            // "DC <v>" or a bare value.
            std::size_t vi = (kind == "dc") ? 4 : 3;
            if (toks.size() != vi + 1) {
                error(line_no_, toks[3].column, "DC source needs exactly one value");
                return;
            }
            DcSpec d;
            if (!number(toks[vi], d.volts, "DC")) return;
            v.spec = d;
        }
        result_.circuit.elements.emplace_back(std::move(v));
    }

    void parse_passive(const std::vector<Token>& toks, bool is_resistor) {
        if (toks.size() != 4) {
            error(line_no_, toks[0].column,
                  is_resistor ? "resistor needs: Rname a b ohms"
                              : "capacitor needs: Cname a b farads");
            return;
        }
        register_name(toks[0]);
        double value = 0;
        if (!number(toks[3], value, is_resistor ? "resistance" : "capacitance")) return;
        if (value <= 0) {
            error(line_no_, toks[3].column,
                  is_resistor ? "resistance must be > 0" : "capacitance must be > 0");
            return;
        }
        if (is_resistor) {
            result_.circuit.elements.emplace_back(
                Resistor{toks[0].text, toks[1].text, toks[2].text, value});
        } else {
            result_.circuit.elements.emplace_back(
                Capacitor{toks[0].text, toks[1].text, toks[2].text, value});
        }
    }

    void parse_diode(const std::vector<Token>& toks) {
        if (toks.size() != 4) {
            error(line_no_, toks[0].column, "diode needs: Dname anode cathode model");
            return;
        }
        register_name(toks[0]);
        DiodeElem d{toks[0].text, toks[1].text, toks[2].text, toks[3].text};
        model_refs_.push_back({d.model, line_no_, toks[3].column, /*want_mos=*/false});
        result_.circuit.elements.emplace_back(std::move(d));
    }

    void finish_checks() {
        for (const auto& ref : model_refs_) {
            const ModelDef* def = result_.circuit.find_model(ref.name);
            if (!def) {
                error(ref.line, ref.column, "undefined model reference '" + ref.name + "'");
            } else if (ref.want_mos != (def->kind != ModelDef::Kind::Diode)) {
                error(ref.line, ref.column, "model kind mismatch for '" + ref.name + "'");
            }
        }
        if (!result_.circuit.has_ground()) {
            error(line_no_, 1, "no ground node (node '0') in circuit");
        }
    }

    struct ModelRef {
        std::string name;
        int line;
        int column;
        bool want_mos;
    };

    std::string_view text_;
    ParseResult result_;
    int line_no_ = 1;
    std::set<std::string> element_names_;
    std::vector<ModelRef> model_refs_;
};

struct NodeCollector {
    std::vector<std::string> order;
    std::set<std::string> seen;
    void add(const std::string& n) {
        if (seen.insert(n).second) order.push_back(n);
    }
};

template <typename Fn>
void for_each_terminal(const Element& e, Fn&& fn) {
    std::visit(
        [&](const auto& el) {
            using T = std::decay_t<decltype(el)>;
            if constexpr (std::is_same_v<T, Mosfet>) {
                fn(el.drain);
                fn(el.gate);
                fn(el.source);
                fn(el.body);
            } else if constexpr (std::is_same_v<T, VSource>) {
                fn(el.plus);
                fn(el.minus);
            } else if constexpr (std::is_same_v<T, DiodeElem>) {
                fn(el.anode);
                fn(el.cathode);
            } else {
                fn(el.a);
                fn(el.b);
            }
        },
        e);
}

// Disjoint-set over node names.
class UnionFind {
public:
    int id(const std::string& n) {
        auto [it, inserted] = ids_.try_emplace(n, static_cast<int>(parent_.size()));
        if (inserted) parent_.push_back(it->second);
        return it->second;
    }
    int find(int a) {
        while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
        return a;
    }
    // Returns false when a and b were already connected.
    bool unite(const std::string& na, const std::string& nb) {
        int a = find(id(na)), b = find(id(nb));
        if (a == b) return false;
        parent_[a] = b;
        return true;
    }
    bool connected(const std::string& na, const std::string& nb) {
        return find(id(na)) == find(id(nb));
    }

private:
    std::map<std::string, int> ids_;
    std::vector<int> parent_;
};

}  // namespace

const ModelDef* Circuit::find_model(std::string_view name) const {
    for (const auto& m : models) {
        if (m.name == name) return &m;
    }
    return nullptr;
}

const std::string& Circuit::element_name(std::size_t i) const {
    return std::visit([](const auto& el) -> const std::string& { return el.name; }, elements[i]);
}

std::vector<std::string> Circuit::node_names() const {
    NodeCollector nc;
    for (const auto& e : elements) for_each_terminal(e, [&](const std::string& n) { nc.add(n); });
    return nc.order;
}

bool Circuit::has_ground() const {
    for (const auto& e : elements) {
        bool found = false;
        for_each_terminal(e, [&](const std::string& n) { found = found || n == "0"; });
        if (found) return true;
    }
    return false;
}

ParseResult parse_netlist(std::string_view text) {
    return Parser(text).run();
}

ParseResult parse_netlist_file(const std::string& path) {
    return parse_netlist(read_text_file(path));
}

namespace {

std::string print_source_spec(const SourceSpec& s) {
    std::ostringstream os;
    if (const auto* dc = std::get_if<DcSpec>(&s)) {
        os << "dc " << format_full(dc->volts);
    } else if (const auto* p = std::get_if<PulseSpec>(&s)) {
        os << "pulse(" << format_full(p->v0) << ' ' << format_full(p->v1) << ' '
           << format_full(p->delay) << ' ' << format_full(p->rise) << ' '
           << format_full(p->fall) << ' ' << format_full(p->width) << ' '
           << format_full(p->period) << ')';
    } else {
        const auto& pr = std::get<PrbsSpec>(s);
        os << "prbs(" << format_full(pr.v0) << ' ' << format_full(pr.v1) << ' '
           << format_full(pr.bit_period) << ' ' << pr.seed << ')';
    }
    return os.str();
}

std::string print_model(const ModelDef& m) {
    std::ostringstream os;
    os << ".model " << m.name << ' ';
    if (m.kind == ModelDef::Kind::Diode) {
        os << "d i_sat=" << format_full(m.diode.i_sat)
           << " emission=" << format_full(m.diode.emission)
           << " temp=" << format_full(m.diode_temp);
        return os.str();
    }
    const MosfetParams& p = m.mos;
    os << (m.kind == ModelDef::Kind::Nmos ? "nmos" : "pmos");
    os << " vth0=" << format_full(p.vth0) << " gamma=" << format_full(p.gamma)
       << " phi2f=" << format_full(p.phi2f) << " n_slope=" << format_full(p.n_slope)
       << " i_spec=" << format_full(p.i_spec) << " width=" << format_full(p.width)
       << " length=" << format_full(p.length) << " temp=" << format_full(p.temp_kelvin)
       << " cgs=" << format_full(p.cgs) << " cgd=" << format_full(p.cgd)
       << " cgb=" << format_full(p.cgb) << " cbs=" << format_full(p.cbs)
       << " cbd=" << format_full(p.cbd)
       << " junction.i_sat=" << format_full(p.junction.i_sat)
       << " junction.emission=" << format_full(p.junction.emission);
    return os.str();
}

}  // namespace

std::string print_netlist(const Circuit& c) {
    std::ostringstream os;
    os << c.title << '\n';
    for (const auto& m : c.models) os << print_model(m) << '\n';
    for (const auto& e : c.elements) {
        std::visit(
            [&](const auto& el) {
                using T = std::decay_t<decltype(el)>;
                if constexpr (std::is_same_v<T, Mosfet>) {
                    os << el.name << ' ' << el.drain << ' ' << el.gate << ' ' << el.source
                       << ' ' << el.body << ' ' << el.model;
                } else if constexpr (std::is_same_v<T, VSource>) {
                    os << el.name << ' ' << el.plus << ' ' << el.minus << ' '
                       << print_source_spec(el.spec);
                } else if constexpr (std::is_same_v<T, Resistor>) {
                    os << el.name << ' ' << el.a << ' ' << el.b << ' ' << format_full(el.ohms);
                } else if constexpr (std::is_same_v<T, Capacitor>) {
                    os << el.name << ' ' << el.a << ' ' << el.b << ' ' << format_full(el.farads);
                } else {
                    os << el.name << ' ' << el.anode << ' ' << el.cathode << ' ' << el.model;
                }
                os << '\n';
            },
            e);
    }
    os << ".end\n";
    return os.str();
}

std::vector<Diagnostic> validate(const Circuit& c) {
    std::vector<Diagnostic> out;
    auto report = [&](const std::string& msg) { out.push_back({0, 0, msg}); };

    if (!c.has_ground()) {
        report("no ground node (node '0') in circuit");
        return out;
    }

    for (const auto& e : c.elements) {
        if (const auto* m = std::get_if<Mosfet>(&e)) {
            if (!c.find_model(m->model)) report("dangling model reference '" + m->model + "' in " + m->name);
        } else if (const auto* d = std::get_if<DiodeElem>(&e)) {
            if (!c.find_model(d->model)) report("dangling model reference '" + d->model + "' in " + d->name);
        } else if (const auto* v = std::get_if<VSource>(&e)) {
            if (v->plus == v->minus) report("shorted source '" + v->name + "'");
        }
    }

    // Voltage-source loops: any cycle in the source-only node graph.
    UnionFind sources;
    for (const auto& e : c.elements) {
        if (const auto* v = std::get_if<VSource>(&e)) {
            if (v->plus == v->minus) continue;  // already reported
            if (!sources.unite(v->plus, v->minus)) {
                report("voltage source loop involving '" + v->name + "'");
            }
        }
    }

    // DC connectivity: resistors, sources, diodes and the MOSFET
    // channel/junction paths count; capacitors do not (pre-gmin view).
    UnionFind dc;
    dc.id("0");
    for (const auto& e : c.elements) {
        std::visit(
            [&](const auto& el) {
                using T = std::decay_t<decltype(el)>;
                if constexpr (std::is_same_v<T, Mosfet>) {
                    dc.unite(el.drain, el.source);
                    dc.unite(el.body, el.source);
                    dc.unite(el.body, el.drain);
                    dc.id(el.gate);
                } else if constexpr (std::is_same_v<T, VSource>) {
                    dc.unite(el.plus, el.minus);
                } else if constexpr (std::is_same_v<T, Resistor>) {
                    dc.unite(el.a, el.b);
                } else if constexpr (std::is_same_v<T, DiodeElem>) {
                    dc.unite(el.anode, el.cathode);
                } else {
                    dc.id(el.a);
                    dc.id(el.b);
                }
            },
            e);
    }
    for (const auto& n : c.node_names()) {
        if (!dc.connected(n, "0")) report("no DC path to ground from node '" + n + "'");
    }
    return out;
}

std::string format_diagnostics(const std::vector<Diagnostic>& ds) {
    std::ostringstream os;
    for (const auto& d : ds) {
        if (d.line > 0) os << d.line << ':' << d.column << ": ";
        os << d.message << '\n';
    }
    return os.str();
}

std::uint16_t lfsr16_next(std::uint16_t s) {
    // x^16 + x^15 + x^13 + x^4 + 1, Fibonacci form, right shift.
    std::uint16_t bit = static_cast<std::uint16_t>(((s >> 0) ^ (s >> 1) ^ (s >> 3) ^ (s >> 12)) & 1u);
    return static_cast<std::uint16_t>((s >> 1) | (bit << 15));
}

std::uint16_t lfsr16_advance(std::uint16_t state, unsigned steps) {
    for (unsigned i = 0; i < steps; ++i) state = lfsr16_next(state);
    return state;
}

std::vector<int> prbs_bits(std::uint16_t seed, int count) {
    std::vector<int> bits;
    bits.reserve(static_cast<std::size_t>(count));
    std::uint16_t s = seed;
    for (int i = 0; i < count; ++i) {
        bits.push_back(s & 1);
        s = lfsr16_next(s);
    }
    return bits;
}

}  // namespace vtsim
