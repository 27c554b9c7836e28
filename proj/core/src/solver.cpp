#include "vtsim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "vtsim/device.hpp"
#include "vtsim/errors.hpp"
#include "vtsim/util.hpp"

namespace vtsim {

NonConvergence::NonConvergence(std::string stage_, int iteration_, std::string worst_node_,
                               double time_)
    : SimError("no convergence (stage " + stage_ + ", iteration " +
               std::to_string(iteration_) + ", worst node '" + worst_node_ + "'" +
               (time_ >= 0 ? ", t=" + format_table(time_) + " s" : "") + ")"),
      stage(std::move(stage_)),
      iteration(iteration_),
      worst_node(std::move(worst_node_)),
      time(time_) {}

StepUnderflow::StepUnderflow(double t)
    : SimError("time step underflow at t=" + format_table(t) + " s"), time(t) {}

void SolverOptions::check() const {
    if (!(reltol > 0) || !(vntol > 0) || !(abstol > 0) || !(gmin > 0) || !(lte_tol > 0) ||
        !(min_step > 0) || !(v_step_limit > 0) || max_step < 0) {
        throw CardError("solver tolerances must be positive");
    }
    if (max_newton_iters < 10) throw CardError("max_newton_iters must be >= 10");
}

double Waveform::sample(double t) const {
    if (times.empty()) return 0.0;
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - times.begin());
    std::size_t lo = hi - 1;
    double span = times[hi] - times[lo];
    double w = span > 0 ? (t - times[lo]) / span : 0.0;
    return values[lo] + w * (values[hi] - values[lo]);
}

double SolutionPoint::operator[](std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return values[i];
    }
    throw SimError("unknown solution entry '" + std::string(name) + "'");
}

int TransientResult::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return static_cast<int>(i);
    }
    return -1;
}

Waveform TransientResult::waveform(std::string_view name) const {
    int ci = column_index(name);
    if (ci < 0) throw SimError("unknown waveform column '" + std::string(name) + "'");
    Waveform w;
    w.times = times;
    w.values = values[static_cast<std::size_t>(ci)];
    w.quantity = std::string(name);
    return w;
}

std::string TransientResult::to_csv() const {
    std::ostringstream os;
    os << "time";
    for (const auto& c : columns) os << ',' << c;
    os << '\n';
    for (std::size_t s = 0; s < times.size(); ++s) {
        os << format_full(times[s]);
        for (const auto& col : values) os << ',' << format_full(col[s]);
        os << '\n';
    }
    return os.str();
}

namespace {

constexpr double k_breakpoint_snap = 1e-18;  // s

struct RStamp {
    int a, b;
    double g;
};
struct CStamp {
    int a, b;
    double c;
};
struct CapState {
    double v = 0.0;  // voltage across at the last accepted time
    double i = 0.0;  // current through at the last accepted time
};
struct DStamp {
    int a, c;
    DiodeParams dp;
    double ut;
};
struct MosStamp {
    int d, g, s, b;
    MosfetParams p;
};
struct VStamp {
    int p, m;
    int branch;  // index within branch block
    std::string name;
    SourceSpec spec;
    bool overridden = false;
    double override_value = 0.0;
    // PRBS expansion, filled before a transient run.
    std::vector<int> bits;
};

struct EvalContext {
    bool transient = false;
    double time = 0.0;  // end of the step being solved
    double h = 0.0;
    Integration rule = Integration::Trapezoidal;
    double gmin = 1e-12;
    double source_scale = 1.0;
};

double pulse_value(const PulseSpec& p, double t) {
    double tt = t - p.delay;
    if (tt < 0) return p.v0;
    double phase = std::fmod(tt, p.period);
    if (phase < p.rise) {
        return p.rise > 0 ? p.v0 + (p.v1 - p.v0) * (phase / p.rise) : p.v1;
    }
    phase -= p.rise;
    if (phase < p.width) return p.v1;
    phase -= p.width;
    if (phase < p.fall) {
        return p.fall > 0 ? p.v1 + (p.v0 - p.v1) * (phase / p.fall) : p.v0;
    }
    return p.v0;
}

double prbs_value(const PrbsSpec& p, const std::vector<int>& bits, double t) {
    if (bits.empty()) return (p.seed & 1) ? p.v1 : p.v0;  // DC view: first bit level
    const double edge = p.bit_period / 400.0;
    double fidx = t / p.bit_period;
    auto idx = static_cast<std::ptrdiff_t>(std::floor(fidx));
    if (idx < 0) idx = 0;
    if (idx >= static_cast<std::ptrdiff_t>(bits.size())) idx = static_cast<std::ptrdiff_t>(bits.size()) - 1;
    auto level = [&](std::ptrdiff_t k) { return bits[static_cast<std::size_t>(k)] ? p.v1 : p.v0; };
    double cur = level(idx);
    if (idx == 0) return cur;
    double prev = level(idx - 1);
    double into = t - static_cast<double>(idx) * p.bit_period;
    if (prev != cur && into < edge) {
        return prev + (cur - prev) * (into / edge);
    }
    return cur;
}

}  // namespace

struct Simulator::Impl {
    SolverOptions opts;
    std::vector<std::string> node_names;  // non-ground, first-appearance order
    std::map<std::string, int> node_index;
    std::vector<std::string> unknown_names;  // nodes + i(...) branches

    std::vector<RStamp> resistors;
    std::vector<CStamp> caps;
    std::vector<DStamp> diodes;
    std::vector<MosStamp> mosfets;
    std::vector<VStamp> sources;

    int n_nodes = 0;
    int n_branches = 0;

    DcStats stats;

    // --- construction -----------------------------------------------------

    int node(const std::string& name) {
        if (name == "0") return -1;
        auto it = node_index.find(name);
        if (it != node_index.end()) return it->second;
        int idx = static_cast<int>(node_names.size());
        node_index.emplace(name, idx);
        node_names.push_back(name);
        return idx;
    }

    Impl(const Circuit& c, SolverOptions o) : opts(o) {
        opts.check();
        auto diags = validate(c);
        if (!diags.empty()) {
            throw CircuitError("circuit not simulable:\n" + format_diagnostics(diags));
        }
        for (const auto& e : c.elements) compile_element(c, e);
        n_nodes = static_cast<int>(node_names.size());
        n_branches = static_cast<int>(sources.size());
        unknown_names = node_names;
        for (const auto& s : sources) unknown_names.push_back("i(" + s.name + ")");
    }

    void compile_element(const Circuit& c, const Element& e) {
        if (const auto* r = std::get_if<Resistor>(&e)) {
            resistors.push_back({node(r->a), node(r->b), 1.0 / r->ohms});
        } else if (const auto* cap = std::get_if<Capacitor>(&e)) {
            caps.push_back({node(cap->a), node(cap->b), cap->farads});
        } else if (const auto* d = std::get_if<DiodeElem>(&e)) {
            const ModelDef* def = c.find_model(d->model);
            diodes.push_back({node(d->anode), node(d->cathode), def->diode,
                              thermal_voltage(def->diode_temp)});
        } else if (const auto* v = std::get_if<VSource>(&e)) {
            VStamp st;
            st.p = node(v->plus);
            st.m = node(v->minus);
            st.branch = static_cast<int>(sources.size());
            st.name = v->name;
            st.spec = v->spec;
            sources.push_back(std::move(st));
        } else {
            const auto& m = std::get<Mosfet>(e);
            const ModelDef* def = c.find_model(m.model);
            const MosfetParams& p = def->mos;
            p.check();
            int nd = node(m.drain), ng = node(m.gate), ns = node(m.source), nb = node(m.body);
            mosfets.push_back({nd, ng, ns, nb, p});
            // Body junctions: p-body to n-diffusion for NMOS (anode = body),
            // mirrored for PMOS.
            double ut = p.ut();
            if (p.kind == MosKind::Nmos) {
                diodes.push_back({nb, ns, p.junction, ut});
                diodes.push_back({nb, nd, p.junction, ut});
            } else {
                diodes.push_back({ns, nb, p.junction, ut});
                diodes.push_back({nd, nb, p.junction, ut});
            }
            // Fixed terminal capacitances.
            auto add_cap = [&](int a, int b, double farads) {
                if (farads > 0 && !(a == b)) caps.push_back({a, b, farads});
            };
            add_cap(ng, ns, p.cgs);
            add_cap(ng, nd, p.cgd);
            add_cap(ng, nb, p.cgb);
            add_cap(nb, ns, p.cbs);
            add_cap(nb, nd, p.cbd);
        }
    }

    // --- source values ----------------------------------------------------

    double source_value(const VStamp& s, double t, double scale) const {
        double v;
        if (s.overridden) {
            v = s.override_value;
        } else if (const auto* dc = std::get_if<DcSpec>(&s.spec)) {
            v = dc->volts;
        } else if (const auto* p = std::get_if<PulseSpec>(&s.spec)) {
            v = pulse_value(*p, t);
        } else {
            v = prbs_value(std::get<PrbsSpec>(s.spec), s.bits, t);
        }
        return v * scale;
    }

    // --- assembly ---------------------------------------------------------

    int dim() const { return n_nodes + n_branches; }

    double xv(const std::vector<double>& x, int n) const { return n < 0 ? 0.0 : x[n]; }

    void assemble(const std::vector<double>& x, const EvalContext& ctx,
                  const std::vector<CapState>& states, Matrix& J, std::vector<double>& f,
                  std::vector<double>* iscale) const {
        J.set_zero();
        std::fill(f.begin(), f.end(), 0.0);
        if (iscale) std::fill(iscale->begin(), iscale->end(), 0.0);

        auto add_f = [&](int n, double i) {
            if (n >= 0) f[n] += i;
        };
        auto add_scale = [&](int n, double i) {
            if (iscale && n >= 0) (*iscale)[n] += std::fabs(i);
        };
        auto add_j = [&](int eq, int var, double g) {
            if (eq >= 0 && var >= 0) J(eq, var) += g;
        };
        // Two-terminal branch current i(a->b) with conductance g.
        auto stamp_branch = [&](int a, int b, double i, double g) {
            add_f(a, i);
            add_f(b, -i);
            add_scale(a, i);
            add_scale(b, i);
            add_j(a, a, g);
            add_j(a, b, -g);
            add_j(b, a, -g);
            add_j(b, b, g);
        };

        for (const auto& r : resistors) {
            double i = r.g * (xv(x, r.a) - xv(x, r.b));
            stamp_branch(r.a, r.b, i, r.g);
        }

        if (ctx.transient) {
            // Companion model per the integration rule.
            for (std::size_t k = 0; k < caps.size(); ++k) {
                const CStamp& cp = caps[k];
                const CapState& st = states[k];
                double geq, ieq;
                if (ctx.rule == Integration::Trapezoidal) {
                    geq = 2.0 * cp.c / ctx.h;
                    ieq = -geq * st.v - st.i;
                } else {
                    geq = cp.c / ctx.h;
                    ieq = -geq * st.v;
                }
                double v = xv(x, cp.a) - xv(x, cp.b);
                double i = geq * v + ieq;
                stamp_branch(cp.a, cp.b, i, geq);
            }
        }

        for (const auto& d : diodes) {
            double v = xv(x, d.a) - xv(x, d.c);
            DiodeEval de = diode_current(d.dp, v, d.ut);
            stamp_branch(d.a, d.c, de.current, de.g);
        }

        for (const auto& m : mosfets) {
            double vs = xv(x, m.s);
            OperatingPoint op{xv(x, m.g) - vs, xv(x, m.d) - vs, xv(x, m.b) - vs};
            MosfetEval ev = mosfet_conductances(m.p, op);
            add_f(m.d, ev.ids);
            add_f(m.s, -ev.ids);
            add_scale(m.d, ev.ids);
            add_scale(m.s, ev.ids);
            double dvs = -(ev.g_m + ev.g_ds + ev.g_mb);
            add_j(m.d, m.g, ev.g_m);
            add_j(m.d, m.d, ev.g_ds);
            add_j(m.d, m.b, ev.g_mb);
            add_j(m.d, m.s, dvs);
            add_j(m.s, m.g, -ev.g_m);
            add_j(m.s, m.d, -ev.g_ds);
            add_j(m.s, m.b, -ev.g_mb);
            add_j(m.s, m.s, -dvs);
        }

        for (const auto& s : sources) {
            int br = n_nodes + s.branch;
            double ibr = x[br];
            add_f(s.p, ibr);
            add_f(s.m, -ibr);
            add_scale(s.p, ibr);
            add_scale(s.m, ibr);
            add_j(s.p, br, 1.0);
            add_j(s.m, br, -1.0);
            // Branch equation: v_p - v_m = V(t).
            f[br] = xv(x, s.p) - xv(x, s.m) - source_value(s, ctx.time, ctx.source_scale);
            if (s.p >= 0) J(br, s.p) += 1.0;
            if (s.m >= 0) J(br, s.m) -= 1.0;
        }

        // gmin from every node to ground keeps the system nonsingular.
        for (int n = 0; n < n_nodes; ++n) {
            f[n] += ctx.gmin * x[n];
            J(n, n) += ctx.gmin;
        }
    }

    // --- Newton -----------------------------------------------------------

    struct NewtonOutcome {
        bool converged = false;
        int iterations = 0;
        int worst_node = -1;  // node index of the worst residual on failure
    };

    NewtonOutcome newton(std::vector<double>& x, const EvalContext& ctx,
                         const std::vector<CapState>& states) const {
        const int n = dim();
        Matrix J(n);
        std::vector<double> f(n), iscale(n), dx;
        std::vector<int> perm;
        bool last_update_small = false;
        bool polished = false;
        NewtonOutcome out;

        for (int iter = 1; iter <= opts.max_newton_iters; ++iter) {
            out.iterations = iter;
            assemble(x, ctx, states, J, f, &iscale);

            bool resid_ok = true;
            double worst_ratio = 0.0;
            for (int k = 0; k < n; ++k) {
                double tol;
                if (k < n_nodes) {
                    tol = opts.reltol * iscale[k] + opts.abstol;
                } else {
                    // Branch rows are voltage equations.
                    const auto& s = sources[static_cast<std::size_t>(k - n_nodes)];
                    double vs = std::max(std::fabs(xv(x, s.p)), std::fabs(xv(x, s.m)));
                    tol = opts.reltol * vs + opts.vntol;
                }
                double ratio = std::fabs(f[k]) / tol;
                if (ratio > worst_ratio) {
                    worst_ratio = ratio;
                    out.worst_node = k;
                }
                if (ratio > 1.0) resid_ok = false;
            }

            if (resid_ok && last_update_small) {
                if (polished) {
                    out.converged = true;
                    return out;
                }
                polished = true;  // take one more full step to tighten
            }

            dx = f;
            for (auto& v : dx) v = -v;
            if (!lu_factor(J, perm)) {
                throw SingularSystem("singular MNA system (dimension " + std::to_string(n) +
                                     ")");
            }
            lu_solve(J, perm, dx);

            double max_dv = 0.0;
            for (int k = 0; k < n_nodes; ++k) max_dv = std::max(max_dv, std::fabs(dx[k]));
            double damp = max_dv > opts.v_step_limit ? opts.v_step_limit / max_dv : 1.0;

            bool update_small = damp == 1.0;
            for (int k = 0; k < n; ++k) {
                double step = damp * dx[k];
                x[k] += step;
                double tol = (k < n_nodes) ? opts.reltol * std::fabs(x[k]) + opts.vntol
                                           : opts.reltol * std::fabs(x[k]) + opts.abstol;
                if (std::fabs(step) > tol) update_small = false;
            }
            last_update_small = update_small;

            if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) {
                out.converged = false;
                return out;
            }
        }
        out.converged = false;
        return out;
    }

    std::string node_label(int k) const {
        if (k < 0) return "?";
        if (k < n_nodes) return node_names[static_cast<std::size_t>(k)];
        return unknown_names[static_cast<std::size_t>(k)];
    }

    // --- DC with continuation fallbacks ------------------------------------

    std::vector<double> solve_dc(double time, std::vector<double> guess) {
        std::vector<CapState> no_states(caps.size());
        EvalContext ctx;
        ctx.transient = false;
        ctx.time = time;
        ctx.gmin = opts.gmin;
        ctx.source_scale = 1.0;

        // Stage 1: plain damped Newton from the guess.
        std::vector<double> x = guess;
        NewtonOutcome nw = newton(x, ctx, no_states);
        if (nw.converged) {
            stats = {"newton", nw.iterations};
            return x;
        }
        int total_iters = nw.iterations;

        // Stage 2: gmin stepping, log-spaced 1e-3 S down to opts.gmin.
        x.assign(static_cast<std::size_t>(dim()), 0.0);
        bool ladder_ok = true;
        double g = 1e-3;
        while (true) {
            ctx.gmin = std::max(g, opts.gmin);
            NewtonOutcome st = newton(x, ctx, no_states);
            total_iters += st.iterations;
            if (!st.converged) {
                ladder_ok = false;
                break;
            }
            if (ctx.gmin <= opts.gmin) break;
            g /= 10.0;
        }
        if (ladder_ok) {
            ctx.gmin = opts.gmin;
            stats = {"gmin-step", total_iters};
            return x;
        }

        // Stage 3: source stepping, 20 ramp steps at the target gmin.
        ctx.gmin = opts.gmin;
        x.assign(static_cast<std::size_t>(dim()), 0.0);
        NewtonOutcome last;
        for (int step = 1; step <= 20; ++step) {
            ctx.source_scale = static_cast<double>(step) / 20.0;
            last = newton(x, ctx, no_states);
            total_iters += last.iterations;
            if (!last.converged) {
                throw NonConvergence("source-step", total_iters, node_label(last.worst_node),
                                     ctx.transient ? ctx.time : -1.0);
            }
        }
        stats = {"source-step", total_iters};
        return x;
    }

    SolutionPoint to_solution(const std::vector<double>& x) const {
        SolutionPoint sp;
        sp.names = unknown_names;
        sp.values = x;
        return sp;
    }

    VStamp* find_source(std::string_view name) {
        std::string lower = to_lower(name);
        for (auto& s : sources) {
            if (s.name == lower) return &s;
        }
        return nullptr;
    }

    // --- transient ----------------------------------------------------------

    std::vector<double> breakpoints(double t_stop) const {
        std::set<double> bps{0.0, t_stop};
        for (const auto& s : sources) {
            if (const auto* p = std::get_if<PulseSpec>(&s.spec)) {
                for (double t0 = p->delay; t0 <= t_stop; t0 += p->period) {
                    const double corners[] = {t0, t0 + p->rise, t0 + p->rise + p->width,
                                              t0 + p->rise + p->width + p->fall};
                    for (double c : corners) {
                        if (c > 0 && c < t_stop) bps.insert(c);
                    }
                    if (p->period <= 0) break;
                }
            } else if (const auto* pr = std::get_if<PrbsSpec>(&s.spec)) {
                const double edge = pr->bit_period / 400.0;
                for (std::size_t k = 1; k < s.bits.size(); ++k) {
                    if (s.bits[k] == s.bits[k - 1]) continue;
                    double t0 = static_cast<double>(k) * pr->bit_period;
                    if (t0 < t_stop) bps.insert(t0);
                    if (t0 + edge < t_stop) bps.insert(t0 + edge);
                }
            }
        }
        return {bps.begin(), bps.end()};
    }

    double auto_max_step(double t_stop) const {
        double ms = opts.max_step;
        if (ms <= 0) {
            double min_period = 0.0;
            for (const auto& s : sources) {
                double per = 0.0;
                if (const auto* p = std::get_if<PulseSpec>(&s.spec)) per = p->period;
                if (const auto* pr = std::get_if<PrbsSpec>(&s.spec)) per = pr->bit_period;
                if (per > 0 && (min_period == 0 || per < min_period)) min_period = per;
            }
            ms = (min_period > 0 ? min_period : t_stop) / 200.0;
        }
        return std::min(ms, t_stop);
    }

    void advance_states(const std::vector<double>& x, double h,
                        std::vector<CapState>& states) const {
        for (std::size_t k = 0; k < caps.size(); ++k) {
            const CStamp& cp = caps[k];
            CapState& st = states[k];
            double v = xv(x, cp.a) - xv(x, cp.b);
            if (opts.integration == Integration::Trapezoidal) {
                st.i = 2.0 * cp.c / h * (v - st.v) - st.i;
            } else {
                st.i = cp.c / h * (v - st.v);
            }
            st.v = v;
        }
    }

    // Solves one integration step of size h from (t, x, states).
    // Returns false when Newton fails.
    bool try_step(double t, double h, const std::vector<double>& x0,
                  const std::vector<CapState>& states0, std::vector<double>& x_out,
                  std::vector<CapState>& states_out) const {
        EvalContext ctx;
        ctx.transient = true;
        ctx.time = t + h;
        ctx.h = h;
        ctx.rule = opts.integration;
        ctx.gmin = opts.gmin;
        x_out = x0;
        NewtonOutcome nw = newton(x_out, ctx, states0);
        if (!nw.converged) return false;
        states_out = states0;
        advance_states(x_out, h, states_out);
        return true;
    }

    TransientResult transient(double t_stop) {
        if (!(t_stop > 0)) throw CardError("transient stop time must be > 0");

        // Expand PRBS sources once per run.
        for (auto& s : sources) {
            if (const auto* pr = std::get_if<PrbsSpec>(&s.spec)) {
                int nbits = static_cast<int>(std::ceil(t_stop / pr->bit_period)) + 2;
                s.bits = prbs_bits(pr->seed, nbits);
            }
        }

        const double max_step = auto_max_step(t_stop);
        const std::vector<double> bps = breakpoints(t_stop);
        std::size_t next_bp = 1;  // bps[0] == 0

        std::vector<double> x = solve_dc(0.0, std::vector<double>(dim(), 0.0));
        std::vector<CapState> states(caps.size());
        for (std::size_t k = 0; k < caps.size(); ++k) {
            states[k].v = xv(x, caps[k].a) - xv(x, caps[k].b);
            states[k].i = 0.0;  // DC steady state
        }

        TransientResult res;
        res.columns = unknown_names;
        res.values.resize(unknown_names.size());
        auto record = [&](double t, const std::vector<double>& xs) {
            res.times.push_back(t);
            for (std::size_t c = 0; c < res.values.size(); ++c) res.values[c].push_back(xs[c]);
        };
        record(0.0, x);

        const double err_denom = opts.integration == Integration::Trapezoidal ? 3.0 : 1.0;
        const double order_exp =
            opts.integration == Integration::Trapezoidal ? 1.0 / 3.0 : 1.0 / 2.0;

        double t = 0.0;
        double h = std::min(max_step, (bps.size() > 1 ? bps[1] : t_stop)) / 8.0;
        h = std::max(h, opts.min_step);

        std::vector<double> x_full, x_h1, x_h2;
        std::vector<CapState> st_full, st_h1, st_h2;

        while (t < t_stop - k_breakpoint_snap) {
            while (next_bp < bps.size() && bps[next_bp] <= t + k_breakpoint_snap) ++next_bp;
            bool landing = false;
            double h_try = h;
            if (next_bp < bps.size() && t + h_try >= bps[next_bp] - k_breakpoint_snap) {
                h_try = bps[next_bp] - t;  // land exactly on the corner
                landing = true;
            }

            bool ok = try_step(t, h_try, x, states, x_full, st_full) &&
                      try_step(t, h_try / 2, x, states, x_h1, st_h1) &&
                      try_step(t + h_try / 2, h_try / 2, x_h1, st_h1, x_h2, st_h2);

            double ratio = 0.0;
            if (ok) {
                for (int k = 0; k < n_nodes; ++k) {
                    double err = std::fabs(x_h2[k] - x_full[k]) / err_denom;
                    double tol =
                        opts.lte_tol * (opts.reltol * std::fabs(x_h2[k]) + opts.vntol);
                    ratio = std::max(ratio, err / tol);
                }
            }

            if (ok && ratio <= 1.0) {
                t = landing ? bps[next_bp] : t + h_try;
                x = x_h2;
                states = st_h2;
                record(t, x);
                double grow = ratio > 0 ? 0.9 * std::pow(ratio, -order_exp) : 2.0;
                h = std::min(h_try * std::clamp(grow, 0.2, 2.0), max_step);
                h = std::max(h, opts.min_step);
            } else {
                double shrink = ok ? std::clamp(0.9 * std::pow(ratio, -order_exp), 0.1, 0.5)
                                   : 0.5;
                double h_new = h_try * shrink;
                if (h_new < opts.min_step) throw StepUnderflow(t);
                h = h_new;
            }
        }
        return res;
    }
};

Simulator::Simulator(const Circuit& circuit, SolverOptions opts)
    : impl_(std::make_unique<Impl>(circuit, opts)) {}
Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;
Simulator& Simulator::operator=(Simulator&&) noexcept = default;

int Simulator::dimension() const {
    return impl_->dim();
}

const std::vector<std::string>& Simulator::unknown_names() const {
    return impl_->unknown_names;
}

LinearSystem Simulator::assemble_dc(const std::vector<double>& x, double time) const {
    LinearSystem sys{Matrix(impl_->dim()), std::vector<double>(impl_->dim(), 0.0)};
    EvalContext ctx;
    ctx.transient = false;
    ctx.time = time;
    ctx.gmin = impl_->opts.gmin;
    std::vector<CapState> states(impl_->caps.size());
    impl_->assemble(x, ctx, states, sys.jacobian, sys.residual, nullptr);
    return sys;
}

SolutionPoint Simulator::dc_operating_point() {
    auto x = impl_->solve_dc(0.0, std::vector<double>(impl_->dim(), 0.0));
    return impl_->to_solution(x);
}

DcStats Simulator::last_dc_stats() const {
    return impl_->stats;
}

std::vector<SolutionPoint> Simulator::dc_sweep(std::string_view source_name, double from,
                                               double to, double step) {
    if (step == 0) throw CardError("dc sweep step must be nonzero");
    VStamp* src = impl_->find_source(source_name);
    if (!src) throw SimError("unknown sweep source '" + std::string(source_name) + "'");

    double s = std::fabs(step) * (to >= from ? 1.0 : -1.0);
    std::vector<SolutionPoint> out;
    std::vector<double> guess(impl_->dim(), 0.0);
    src->overridden = true;
    try {
        int count = static_cast<int>(std::floor((to - from) / s + 1e-6)) + 1;
        for (int i = 0; i < count; ++i) {
            double v = from + s * i;
            src->override_value = v;
            std::vector<double> x;
            try {
                x = impl_->solve_dc(0.0, guess);
            } catch (const NonConvergence& e) {
                src->overridden = false;
                throw NonConvergence(e.stage + " (sweep value " + format_table(v) + ")",
                                     e.iteration, e.worst_node);
            }
            guess = x;
            out.push_back(impl_->to_solution(x));
        }
    } catch (...) {
        src->overridden = false;
        throw;
    }
    src->overridden = false;
    return out;
}

TransientResult Simulator::transient(double t_stop) {
    return impl_->transient(t_stop);
}

}  // namespace vtsim
