#include "ldi/solver.hpp"
#include "ldi/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ldi {

namespace {

constexpr double SRC_ROW_TOL = 1e-9; // V, constraint-row satisfaction

struct NewtonOutcome {
    bool ok = false;
    int iters = 0;
    double residual = 0.0; // worst node KCL residual, A
};

// One MNA system bound to a netlist: unknowns are the non-ground node
// voltages followed by one branch current per voltage source.
class System {
public:
    System(const Netlist& nl, const SolverConfig& cfg) : nl_(nl), cfg_(cfg) {
        nv_ = nl.node_count() - 1;
        ns_ = static_cast<int>(nl.sources.size());
        dim_ = nv_ + ns_;
        J_.resize(dim_, dim_);
        f_.resize(dim_);
    }

    int dim() const { return dim_; }

    // Pack/unpack between CircuitState and the unknown vector.
    Eigen::VectorXd pack(const CircuitState& st) const {
        Eigen::VectorXd x(dim_);
        for (int n = 1; n <= nv_; ++n) x[n - 1] = st.v[n];
        for (int k = 0; k < ns_; ++k) x[nv_ + k] = st.src_i[k];
        return x;
    }

    void unpack(const Eigen::VectorXd& x, CircuitState& st) const {
        st.v[GROUND] = 0.0;
        for (int n = 1; n <= nv_; ++n) st.v[n] = x[n - 1];
        for (int k = 0; k < ns_; ++k) st.src_i[k] = x[nv_ + k];
    }

    // Newton-solve the system at source time t_src (already edge-adjusted).
    // dc=true opens capacitors; otherwise `prev` supplies companion history
    // over step h with the configured method. src_scale scales every source
    // level (continuation).
    NewtonOutcome solve(Eigen::VectorXd& x, const std::vector<HysteresisState>& hyst,
                        double t_src, double src_scale, bool dc, double h,
                        const CircuitState& prev) {
        NewtonOutcome out;
        for (int it = 0; it <= cfg_.max_newton_iters; ++it) {
            double i_scale = 0.0;
            assemble(x, hyst, t_src, src_scale, dc, h, prev, i_scale);
            double res_node = 0.0, res_src = 0.0;
            for (int n = 0; n < nv_; ++n) res_node = std::max(res_node, std::abs(f_[n]));
            for (int k = 0; k < ns_; ++k) res_src = std::max(res_src, std::abs(f_[nv_ + k]));
            out.iters = it;
            out.residual = res_node;
            const double tol = dc ? cfg_.newton_abs_tol
                                  : cfg_.newton_abs_tol + cfg_.newton_rel_tol * i_scale;
            if (res_node <= tol && res_src <= SRC_ROW_TOL) {
                out.ok = true;
                return out;
            }
            if (it == cfg_.max_newton_iters) break;
            Eigen::VectorXd dx = J_.partialPivLu().solve(-f_);
            if (!dx.allFinite()) break;
            double vmax = 0.0;
            for (int n = 0; n < nv_; ++n) vmax = std::max(vmax, std::abs(dx[n]));
            if (vmax > cfg_.voltage_step_limit) dx *= cfg_.voltage_step_limit / vmax;
            x += dx;
        }
        out.ok = false;
        return out;
    }

    // Companion currents implied by the accepted solution (cap memory for TR).
    std::vector<double> cap_currents(const CircuitState& now,
                                     const CircuitState& prev, double h) const {
        std::vector<double> out(nl_.capacitors.size(), 0.0);
        for (size_t c = 0; c < nl_.capacitors.size(); ++c) {
            const auto& cap = nl_.capacitors[c];
            const double dvab = (now.v[cap.a] - now.v[cap.b]) -
                                (prev.v[cap.a] - prev.v[cap.b]);
            if (cfg_.method == Method::Trapezoidal)
                out[c] = 2.0 * cap.farads / h * dvab - prev.cap_i[c];
            else
                out[c] = cap.farads / h * dvab;
        }
        return out;
    }

private:
    void assemble(const Eigen::VectorXd& x, const std::vector<HysteresisState>& hyst,
                  double t_src, double src_scale, bool dc, double h,
                  const CircuitState& prev, double& i_scale) {
        J_.setZero();
        f_.setZero();
        auto v_of = [&](NodeId n) { return n == GROUND ? 0.0 : x[n - 1]; };
        // KCL rows accumulate current flowing out of the node into elements;
        // row/column GROUND is simply dropped.
        auto add_f = [&](NodeId n, double val) {
            if (n != GROUND) f_[n - 1] += val;
        };
        auto add_J = [&](NodeId row, NodeId col, double val) {
            if (row != GROUND && col != GROUND) J_(row - 1, col - 1) += val;
        };

        for (size_t ti = 0; ti < nl_.transistors.size(); ++ti) {
            const auto& tr = nl_.transistors[ti];
            const double vgs = v_of(tr.gate) - v_of(tr.source);
            const double vds = v_of(tr.drain) - v_of(tr.source);
            const double id = drain_current(tr.params, hyst[ti], vgs, vds);
            const auto g = conductances(tr.params, hyst[ti], vgs, vds);
            add_f(tr.drain, id);
            add_f(tr.source, -id);
            add_J(tr.drain, tr.gate, g.g_m);
            add_J(tr.drain, tr.drain, g.g_ds);
            add_J(tr.drain, tr.source, -(g.g_m + g.g_ds));
            add_J(tr.source, tr.gate, -g.g_m);
            add_J(tr.source, tr.drain, -g.g_ds);
            add_J(tr.source, tr.source, g.g_m + g.g_ds);
            i_scale = std::max(i_scale, std::abs(id));
        }

        if (!dc) {
            for (size_t c = 0; c < nl_.capacitors.size(); ++c) {
                const auto& cap = nl_.capacitors[c];
                const double gc = (cfg_.method == Method::Trapezoidal ? 2.0 : 1.0) *
                                  cap.farads / h;
                const double vab = v_of(cap.a) - v_of(cap.b);
                const double vab_prev = prev.v[cap.a] - prev.v[cap.b];
                double ic = gc * (vab - vab_prev);
                if (cfg_.method == Method::Trapezoidal) ic -= prev.cap_i[c];
                add_f(cap.a, ic);
                add_f(cap.b, -ic);
                add_J(cap.a, cap.a, gc);
                add_J(cap.a, cap.b, -gc);
                add_J(cap.b, cap.a, -gc);
                add_J(cap.b, cap.b, gc);
                i_scale = std::max(i_scale, std::abs(ic));
            }
        }

        for (int k = 0; k < ns_; ++k) {
            const auto& s = nl_.sources[k];
            const double level = src_scale * s.wave.value_at(t_src);
            const double is = x[nv_ + k];
            add_f(s.pos, is);
            add_f(s.neg, -is);
            if (s.pos != GROUND) J_(s.pos - 1, nv_ + k) += 1.0;
            if (s.neg != GROUND) J_(s.neg - 1, nv_ + k) -= 1.0;
            f_[nv_ + k] = (v_of(s.pos) - v_of(s.neg)) - level;
            if (s.pos != GROUND) J_(nv_ + k, s.pos - 1) += 1.0;
            if (s.neg != GROUND) J_(nv_ + k, s.neg - 1) -= 1.0;
            i_scale = std::max(i_scale, std::abs(is));
        }
    }

    const Netlist& nl_;
    const SolverConfig& cfg_;
    int nv_ = 0, ns_ = 0, dim_ = 0;
    Eigen::MatrixXd J_;
    Eigen::VectorXd f_;
};

void check_state_shape(const Netlist& nl, const CircuitState& st) {
    if (st.v.size() != static_cast<size_t>(nl.node_count()) ||
        st.src_i.size() != nl.sources.size() ||
        st.cap_i.size() != nl.capacitors.size() ||
        st.hyst.size() != nl.transistors.size())
        throw InvalidInput("CircuitState shape does not match netlist");
    for (double v : st.v)
        if (!std::isfinite(v)) throw InvalidInput("CircuitState: non-finite voltage");
}

} // namespace

void SolverConfig::validate() const {
    if (!(dt_min <= dt_initial && dt_initial <= dt_max))
        throw InvalidInput("SolverConfig: need dt_min <= dt_initial <= dt_max");
    if (!(dt_min > 0.0)) throw InvalidInput("SolverConfig: dt_min must be > 0");
    if (!(newton_abs_tol > 0.0) || !(newton_rel_tol > 0.0) || !(lte_tol > 0.0))
        throw InvalidInput("SolverConfig: tolerances must be > 0");
    if (max_newton_iters < 1)
        throw InvalidInput("SolverConfig: max_newton_iters must be >= 1");
    if (!(voltage_step_limit > 0.0))
        throw InvalidInput("SolverConfig: voltage_step_limit must be > 0");
    if (!(dt_growth >= 1.0))
        throw InvalidInput("SolverConfig: dt_growth must be >= 1");
}

CircuitState initial_state(const Netlist& nl,
                           const std::map<std::string, double>& node_v) {
    CircuitState st;
    st.time = 0.0;
    st.v.assign(nl.node_count(), 0.0);
    for (const auto& [name, val] : node_v) {
        int id = nl.find_node(name);
        if (id < 0) throw InvalidInput("initial_state: unknown node " + name);
        st.v[id] = val;
    }
    st.src_i.assign(nl.sources.size(), 0.0);
    st.cap_i.assign(nl.capacitors.size(), 0.0);
    st.hyst.reserve(nl.transistors.size());
    for (const auto& t : nl.transistors) st.hyst.push_back(t.hyst);
    return st;
}

CircuitState dc_operating_point(const Netlist& nl, const SolverConfig& cfg,
                                DcSources mode, double t0) {
    cfg.validate();
    CircuitState st = initial_state(nl);
    st.time = t0;

    // With capacitors open the waveform only enters through its level here.
    Netlist frozen = nl;
    if (mode == DcSources::Rest)
        for (auto& s : frozen.sources) s.wave = Waveform{s.wave.rest_value(), {}};
    System sys_frozen(frozen, cfg);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(sys_frozen.dim());
    NewtonOutcome r = sys_frozen.solve(x, st.hyst, t0, 1.0, true, 0.0, st);
    if (!r.ok) {
        // Source-stepping continuation: walk the source levels up from zero,
        // warm-starting each rung, refining the rung size on failure.
        x.setZero();
        Eigen::VectorXd x_good = x;
        double reached = 0.0, delta = 0.1;
        while (reached < 1.0 - 1e-12) {
            const double gamma = std::min(reached + delta, 1.0);
            Eigen::VectorXd trial = x_good;
            r = sys_frozen.solve(trial, st.hyst, t0, gamma, true, 0.0, st);
            if (r.ok) {
                x_good = trial;
                reached = gamma;
            } else {
                delta *= 0.5;
                if (delta < 1.0 / 160.0)
                    throw ConvergenceError("dc_operating_point: continuation stalled at " +
                                               std::to_string(reached),
                                           t0, r.residual);
            }
        }
        x = x_good;
    }
    sys_frozen.unpack(x, st);
    return st;
}

double transistor_current(const Netlist& nl, const CircuitState& st, int index) {
    const auto& tr = nl.transistors.at(index);
    const double vgs = st.v[tr.gate] - st.v[tr.source];
    const double vds = st.v[tr.drain] - st.v[tr.source];
    return drain_current(tr.params, st.hyst[index], vgs, vds);
}

std::vector<double> probe_currents(const Netlist& nl, const CircuitState& st) {
    std::vector<double> out;
    out.reserve(nl.probes.size());
    for (const auto& p : nl.probes) {
        int ti = nl.transistor_index(p.transistor);
        out.push_back(p.scale * transistor_current(nl, st, ti));
    }
    return out;
}

namespace {

// Linear interpolation helper over the accepted-point history.
double interp(const std::vector<double>& ts, const std::vector<double>& ys,
              double t, size_t& hint) {
    if (t <= ts.front()) return ys.front();
    if (t >= ts.back()) return ys.back();
    while (hint + 1 < ts.size() && ts[hint + 1] < t) ++hint;
    while (hint > 0 && ts[hint] > t) --hint;
    const double t0 = ts[hint], t1 = ts[hint + 1];
    const double w = (t1 > t0) ? (t - t0) / (t1 - t0) : 0.0;
    return ys[hint] * (1.0 - w) + ys[hint + 1] * w;
}

} // namespace

TransientResult transient(const Netlist& nl, const CircuitState& state0,
                          const SolverConfig& cfg, double t_end,
                          const Sampler& sampler) {
    cfg.validate();
    check_state_shape(nl, state0);
    if (!(t_end > state0.time))
        throw InvalidInput("transient: t_end must exceed the initial time");
    if (!(sampler.uniform_dt > 0.0))
        throw InvalidInput("transient: sampler grid spacing must be > 0");

    System sys(nl, cfg);
    const double t0 = state0.time;
    const double time_eps = 1e-12 * std::max(1.0, std::abs(t_end));

    std::vector<double> bps;
    for (double b : nl.breakpoints())
        if (b > t0 + time_eps && b < t_end - time_eps) bps.push_back(b);
    size_t next_bp = 0;

    // Nodes whose step-doubling error is measured: every capacitor terminal.
    std::vector<NodeId> lte_nodes;
    for (const auto& c : nl.capacitors) {
        for (NodeId n : {c.a, c.b})
            if (n != GROUND &&
                std::find(lte_nodes.begin(), lte_nodes.end(), n) == lte_nodes.end())
                lte_nodes.push_back(n);
    }

    TransientResult result;
    CircuitState st = state0;

    // Accepted-point history (always kept; exported when record_raw).
    std::vector<RawPoint> hist;
    std::vector<std::vector<double>> probe_hist(nl.probes.size());
    auto push_point = [&](const CircuitState& s, double dt, int iters, double res,
                          double lte) {
        RawPoint rp;
        rp.t = s.time;
        rp.dt = dt;
        rp.newton_iters = iters;
        rp.residual = res;
        rp.lte = lte;
        rp.v = s.v;
        rp.cap_i = s.cap_i;
        hist.push_back(std::move(rp));
        auto pc = probe_currents(nl, s);
        for (size_t p = 0; p < pc.size(); ++p) probe_hist[p].push_back(pc[p]);
    };
    push_point(st, 0.0, 0, 0.0, 0.0);

    // One implicit step from `from` to absolute time `to`; sources read at
    // eval_t so a step that lands exactly on an edge still sees the old level.
    auto one_step = [&](const CircuitState& from, double to, double eval_t,
                        CircuitState& out, NewtonOutcome& nr) {
        const double h = to - from.time;
        Eigen::VectorXd x = sys.pack(from);
        nr = sys.solve(x, from.hyst, eval_t, 1.0, false, h, from);
        if (!nr.ok) return false;
        out = from;
        out.time = to;
        sys.unpack(x, out);
        out.cap_i = sys.cap_currents(out, from, h);
        return true;
    };

    double h = std::clamp(cfg.dt_initial, cfg.dt_min, cfg.dt_max);
    while (st.time < t_end - time_eps) {
        h = std::clamp(h, cfg.dt_min, cfg.dt_max);
        double target = st.time + h;
        bool at_bp = false;
        if (next_bp < bps.size() && target >= bps[next_bp] - time_eps) {
            target = bps[next_bp];
            at_bp = true;
        }
        if (target > t_end) {
            target = t_end;
            at_bp = false;
        }
        const double hs = target - st.time;
        const double eval_t = at_bp ? std::nextafter(target, st.time) : target;

        CircuitState full, halfa, halfb;
        NewtonOutcome nr_full, nr_a, nr_b;
        bool ok;
        double lte = 0.0;
        if (cfg.use_step_doubling) {
            const double mid = st.time + hs * 0.5;
            ok = one_step(st, target, eval_t, full, nr_full) &&
                 one_step(st, mid, mid, halfa, nr_a) &&
                 one_step(halfa, target, eval_t, halfb, nr_b);
            if (ok) {
                for (NodeId n : lte_nodes)
                    lte = std::max(lte, std::abs(full.v[n] - halfb.v[n]));
                ok = lte <= cfg.lte_tol;
            }
        } else {
            ok = one_step(st, target, eval_t, halfb, nr_b);
        }

        if (!ok) {
            ++result.rejected_steps;
            if (hs <= cfg.dt_min * (1.0 + 1e-9))
                throw ConvergenceError("transient: step size underflow", st.time,
                                       nr_b.residual);
            h = hs * 0.5;
            continue;
        }

        // Trap states advance once per accepted step, frozen within it.
        for (size_t ti = 0; ti < nl.transistors.size(); ++ti) {
            const auto& tr = nl.transistors[ti];
            if (!st.hyst[ti].enabled) continue;
            const double vgs = halfb.v[tr.gate] - halfb.v[tr.source];
            const double vds = halfb.v[tr.drain] - halfb.v[tr.source];
            const double ov = gate_overdrive(tr.params, st.hyst[ti], vgs, vds);
            halfb.hyst[ti] = step_hysteresis(st.hyst[ti], ov, hs);
        }

        st = halfb;
        ++result.accepted_steps;
        result.total_newton_iters += nr_b.iters + nr_a.iters + nr_full.iters;
        push_point(st, hs, nr_b.iters, nr_b.residual, lte);

        if (at_bp) {
            ++next_bp;
            h = cfg.dt_initial; // discontinuity: restart step control
        } else if (cfg.use_step_doubling && lte < 0.3 * cfg.lte_tol) {
            h = hs * cfg.dt_growth;
        } else {
            h = hs;
        }
    }

    // Resample onto the uniform grid.
    std::vector<double> ht(hist.size());
    for (size_t k = 0; k < hist.size(); ++k) ht[k] = hist[k].t;

    Trace& tr = result.trace;
    const long n_grid = std::lround((t_end - t0) / sampler.uniform_dt);
    tr.t.resize(n_grid + 1);
    for (long j = 0; j <= n_grid; ++j) tr.t[j] = t0 + j * sampler.uniform_dt;

    for (size_t p = 0; p < nl.probes.size(); ++p) {
        auto& col = tr.add_column(nl.probes[p].label + "_A");
        col.resize(tr.t.size());
        size_t hint = 0;
        for (size_t j = 0; j < tr.t.size(); ++j)
            col[j] = interp(ht, probe_hist[p], tr.t[j], hint);
    }
    for (const auto& s : nl.sources) {
        if (!s.wave.pulse) continue;
        auto& col = tr.add_column("v_" + s.name + "_V");
        col.resize(tr.t.size());
        for (size_t j = 0; j < tr.t.size(); ++j) col[j] = s.wave.value_at(tr.t[j]);
    }
    std::vector<std::string> node_cols = sampler.node_columns;
    if (node_cols.empty())
        node_cols.assign(nl.node_names.begin() + 1, nl.node_names.end());
    for (const auto& name : node_cols) {
        int id = nl.find_node(name);
        if (id < 0) throw InvalidInput("sampler: unknown node " + name);
        auto& col = tr.add_column("v_node_" + name);
        col.resize(tr.t.size());
        std::vector<double> vs(hist.size());
        for (size_t k = 0; k < hist.size(); ++k) vs[k] = hist[k].v[id];
        size_t hint = 0;
        for (size_t j = 0; j < tr.t.size(); ++j)
            col[j] = interp(ht, vs, tr.t[j], hint);
    }

    result.final_state = st;
    if (cfg.record_raw) result.raw = std::move(hist);
    return result;
}

void add_floor_resistor(NetlistBuilder& b, const std::string& name,
                        double g_siemens, NodeId a, NodeId bnode) {
    if (!(g_siemens > 0.0)) throw InvalidInput(name + ": conductance must be > 0");
    OfetParams p;
    p.polarity = Polarity::P;
    p.v_t = 500.0; // channel can never turn on at circuit voltages
    p.mobility = 0.31;
    p.ss = 1.5;
    p.i_off = g_siemens * V_REF_OFF;
    b.add_transistor(name, p, bnode, a, bnode);
}

} // namespace ldi
