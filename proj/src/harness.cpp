#include "ldi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "ldi/errors.hpp"
#include "ldi/version.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace ldi {

namespace {

bool near(double a, double b) { return std::abs(a - b) < 1e-9; }

std::string compact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace

std::string CellCondition::dir_name() const {
    return "c" + compact(c_syn_nf) + "_w" + compact(v_w) + "_p" + compact(period_s) +
           "_" + (bend == Bend::Flat ? "flat" : "bent");
}

std::string CellCondition::label() const {
    return "C_syn=" + compact(c_syn_nf) + " nF, V_W=" + compact(v_w) +
           " V, period=" + compact(period_s) + " s, width=" + compact(width_s) +
           " s, " + (bend == Bend::Flat ? "flat" : "bent");
}

const std::vector<ReferenceRecord>& reference_records() {
    // Published box-plot statistics (milliseconds) for the three measured
    // operating matrices: capacitance x period (table4: 4.7 nF, table5:
    // 10 nF, both at V_W = 10 V) and weight-voltage x period (table7, 10 nF).
    static const std::vector<ReferenceRecord> records = {
        {{4.7, 10.0, 2.0, 1.0, Bend::Flat}, 67.15, 70.58, 68.21, 68.50, "table4"},
        {{4.7, 10.0, 2.0, 1.0, Bend::Bent}, 91.67, 105.19, 97.08, 97.28, "table4"},
        {{4.7, 10.0, 1.0, 0.5, Bend::Flat}, 66.45, 68.21, 67.03, 67.08, "table4"},
        {{4.7, 10.0, 1.0, 0.5, Bend::Bent}, 79.55, 97.28, 89.25, 89.15, "table4"},
        {{10.0, 10.0, 2.0, 1.0, Bend::Flat}, 121.01, 125.18, 122.97, 122.91, "table5"},
        {{10.0, 10.0, 2.0, 1.0, Bend::Bent}, 157.45, 221.84, 191.14, 189.33, "table5"},
        {{10.0, 10.0, 1.0, 0.5, Bend::Flat}, 107.15, 109.71, 108.40, 108.42, "table5"},
        {{10.0, 10.0, 1.0, 0.5, Bend::Bent}, 105.17, 169.02, 144.90, 140.85, "table5"},
        {{10.0, 9.5, 2.0, 1.0, Bend::Flat}, 122.46, 126.38, 124.23, 124.12, "table7"},
        {{10.0, 9.5, 2.0, 1.0, Bend::Bent}, 155.40, 179.64, 167.66, 167.43, "table7"},
        {{10.0, 9.8, 2.0, 1.0, Bend::Flat}, 115.98, 121.09, 119.07, 118.84, "table7"},
        {{10.0, 9.8, 2.0, 1.0, Bend::Bent}, 158.64, 198.24, 170.57, 174.02, "table7"},
        {{10.0, 9.5, 4.0, 2.0, Bend::Flat}, 119.99, 125.01, 122.16, 122.25, "table7"},
        {{10.0, 9.5, 4.0, 2.0, Bend::Bent}, 172.68, 185.13, 177.82, 178.73, "table7"},
        {{10.0, 9.8, 4.0, 2.0, Bend::Flat}, 121.86, 125.29, 123.92, 123.71, "table7"},
        {{10.0, 9.8, 4.0, 2.0, Bend::Bent}, 160.99, 207.77, 180.75, 182.49, "table7"},
    };
    return records;
}

std::optional<ReferenceRecord> find_reference(const CellCondition& cond) {
    for (const auto& r : reference_records()) {
        if (near(r.cond.c_syn_nf, cond.c_syn_nf) && near(r.cond.v_w, cond.v_w) &&
            near(r.cond.period_s, cond.period_s) && r.cond.bend == cond.bend)
            return r;
    }
    return std::nullopt;
}

void ExperimentSpec::validate() const {
    if (name.empty()) throw ConfigError("ExperimentSpec: empty name");
    if (out_dir.empty()) throw ConfigError("ExperimentSpec: empty output directory");
    if (c_syn_nf.empty() || v_w.empty() || period_width_s.empty() || bends.empty())
        throw ConfigError("ExperimentSpec: empty matrix axis");
    for (double c : c_syn_nf)
        if (!(c > 0.0)) throw ConfigError("ExperimentSpec: capacitance must be > 0");
    for (auto [p, w] : period_width_s)
        if (!(p > 0.0) || !(w > 0.0) || !(w < p))
            throw ConfigError("ExperimentSpec: need 0 < width < period");
}

std::vector<CellCondition> ExperimentSpec::cells() const {
    std::vector<CellCondition> out;
    for (double c : c_syn_nf)
        for (double w : v_w)
            for (auto [p, wd] : period_width_s)
                for (Bend b : bends)
                    out.push_back({c, w, p, wd, b});
    return out;
}

ExperimentSpec named_spec(const std::string& name, const std::string& out_dir,
                          const RunConfig& base) {
    ExperimentSpec spec;
    spec.name = name;
    spec.base = base;
    spec.out_dir = out_dir;
    if (name == "table2") {
        spec.c_syn_nf = {10.0};
        spec.v_w = {10.0};
        spec.period_width_s = {{4.0, 2.0}};
        spec.bends = {Bend::Flat};
    } else if (name == "table3") {
        spec.c_syn_nf = {4.7, 10.0};
        spec.v_w = {10.0};
        spec.period_width_s = {{2.0, 1.0}, {1.0, 0.5}};
        spec.bends = {Bend::Flat, Bend::Bent};
    } else if (name == "table6") {
        spec.c_syn_nf = {10.0};
        spec.v_w = {9.5, 9.8};
        spec.period_width_s = {{4.0, 2.0}, {2.0, 1.0}};
        spec.bends = {Bend::Flat, Bend::Bent};
    } else {
        throw ConfigError("unknown experiment spec '" + name +
                          "' (expected table2, table3, or table6)");
    }
    return spec;
}

namespace {

std::string csv_bool(bool b) { return b ? "1" : "0"; }

void write_csv_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + path);
    os << text;
}

CellResult run_cell(const ExperimentSpec& spec, const CellCondition& cond) {
    CellResult r;
    r.cond = cond;
    r.dir = cond.dir_name();
    const fs::path dir = fs::path(spec.out_dir) / r.dir;
    try {
        RunConfig cfg = spec.base;
        cfg.ldi.c_syn = cond.c_syn_nf * 1e-9;
        cfg.ldi.v_w = cond.v_w;
        cfg.ldi.bend = cond.bend;
        cfg.ldi.pulse.period = cond.period_s;
        cfg.ldi.pulse.width = cond.width_s;
        cfg.ldi.validate();

        Netlist nl = build_ldi(cfg.ldi);
        CircuitState s0 = dc_operating_point(nl, cfg.solver, DcSources::Rest, 0.0);
        const double t_end = cfg.ldi.pulse.n_cycles * cfg.ldi.pulse.period;
        Sampler sampler;
        sampler.uniform_dt = cfg.sample_dt;
        sampler.node_columns = {"syn"};
        TransientResult sim = transient(nl, s0, cfg.solver, t_end, sampler);

        fs::create_directories(dir);
        sim.trace.write_csv_file((dir / "trace.csv").string());

        const auto& isyn = sim.trace.column("i_syn_A");
        r.peak_i_syn = *std::max_element(isyn.begin(), isyn.end());

        auto segs = segment(sim.trace, "i_syn_A", cfg.ldi.pulse, cfg.discard_first);
        std::vector<TauEstimate> all;
        all.reserve(segs.size());
        for (const auto& seg : segs) {
            TauEstimate est = fit_pso(seg, cfg.pso);
            all.push_back(est);
            (seg.phase == Phase::Charge ? r.charge_estimates : r.discharge_estimates)
                .push_back(est);
        }
        write_estimates_csv((dir / "estimates.csv").string(), all);

        try {
            r.charge_stats = stats(r.charge_estimates);
        } catch (const InsufficientData&) {
        }
        try {
            r.discharge_stats = stats(r.discharge_estimates);
        } catch (const InsufficientData&) {
        }
        write_stats_csv((dir / "stats.csv").string(), r.charge_stats,
                        r.discharge_stats);
        r.reference = find_reference(cond);
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    return r;
}

int pool_size(std::size_t n_jobs) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    int n = static_cast<int>(std::min<std::size_t>(n_jobs, hw));
    if (const char* env = std::getenv("LDI_SIM_THREADS")) {
        int cap = 0;
        try {
            cap = parse_int(env);
        } catch (const ConfigError&) {
            throw ConfigError("LDI_SIM_THREADS must be a positive integer");
        }
        if (cap < 1) throw ConfigError("LDI_SIM_THREADS must be a positive integer");
        n = std::min(n, cap);
    }
    return std::max(1, n);
}

const CellResult* find_cell(const std::vector<CellResult>& cells,
                            double c_nf, double v_w, double period, Bend bend) {
    for (const auto& r : cells)
        if (near(r.cond.c_syn_nf, c_nf) && near(r.cond.v_w, v_w) &&
            near(r.cond.period_s, period) && r.cond.bend == bend)
            return &r;
    return nullptr;
}

bool cell_mean(const CellResult* cell, double& out) {
    if (cell == nullptr || !cell->ok || !cell->charge_stats) return false;
    out = cell->charge_stats->mean;
    return true;
}

// Cross-cell ordering/spread checks over whichever axes the matrix spans.
std::vector<HarnessCheck> evaluate_checks(const ExperimentSpec& spec,
                                          const std::vector<CellResult>& cells) {
    std::vector<HarnessCheck> checks;
    auto add = [&](std::string name, bool pass, double value, std::string detail) {
        checks.push_back({std::move(name), pass, value, std::move(detail)});
    };
    auto bend_tag = [](Bend b) { return b == Bend::Flat ? "flat" : "bent"; };

    // Larger capacitance must slow the synapse down.
    if (spec.c_syn_nf.size() > 1) {
        for (std::size_t i = 0; i < spec.c_syn_nf.size(); ++i) {
            for (std::size_t j = i + 1; j < spec.c_syn_nf.size(); ++j) {
                double c_lo = std::min(spec.c_syn_nf[i], spec.c_syn_nf[j]);
                double c_hi = std::max(spec.c_syn_nf[i], spec.c_syn_nf[j]);
                for (double w : spec.v_w)
                    for (auto [p, wd] : spec.period_width_s)
                        for (Bend b : spec.bends) {
                            std::string tag = "w" + compact(w) + "_p" + compact(p) +
                                              "_" + bend_tag(b);
                            double lo = 0, hi = 0;
                            bool have =
                                cell_mean(find_cell(cells, c_lo, w, p, b), lo) &&
                                cell_mean(find_cell(cells, c_hi, w, p, b), hi);
                            if (!have) {
                                add("cap_tau_order:" + tag, false, 0.0,
                                    "cell failed or missing");
                                continue;
                            }
                            double ratio = hi / lo;
                            add("cap_tau_order:" + tag, hi > lo, ratio,
                                "mean tau must grow with C_syn");
                            if (b == Bend::Flat)
                                add("cap_tau_ratio_window:" + tag,
                                    ratio >= 1.5 && ratio <= 2.2, ratio,
                                    "mean tau ratio within [1.5, 2.2]");
                        }
            }
        }
    }

    // Bending must slow every cell down.
    if (spec.bends.size() > 1) {
        for (double c : spec.c_syn_nf)
            for (double w : spec.v_w)
                for (auto [p, wd] : spec.period_width_s) {
                    std::string tag =
                        "c" + compact(c) + "_w" + compact(w) + "_p" + compact(p);
                    double flat = 0, bent = 0;
                    bool have =
                        cell_mean(find_cell(cells, c, w, p, Bend::Flat), flat) &&
                        cell_mean(find_cell(cells, c, w, p, Bend::Bent), bent);
                    if (!have) {
                        add("bend_tau_order:" + tag, false, 0.0,
                            "cell failed or missing");
                        continue;
                    }
                    double ratio = bent / flat;
                    add("bend_tau_order:" + tag, bent > flat, ratio,
                        "bent mean tau must exceed flat");
                    if (near(c, 10.0))
                        add("bend_tau_ratio_window:" + tag,
                            ratio >= 1.1 && ratio <= 2.0, ratio,
                            "bent/flat mean ratio within [1.1, 2.0]");
                }
    }

    // Weight voltage barely moves tau but strictly orders the peaks.
    if (spec.v_w.size() > 1) {
        for (double c : spec.c_syn_nf)
            for (auto [p, wd] : spec.period_width_s)
                for (Bend b : spec.bends) {
                    std::string tag =
                        "c" + compact(c) + "_p" + compact(p) + "_" + bend_tag(b);
                    std::vector<double> ws = spec.v_w;
                    std::sort(ws.begin(), ws.end());
                    std::vector<double> means;
                    std::vector<double> peaks;
                    bool have = true;
                    for (double w : ws) {
                        const CellResult* cell = find_cell(cells, c, w, p, b);
                        double m = 0;
                        if (!cell_mean(cell, m)) {
                            have = false;
                            break;
                        }
                        means.push_back(m);
                        peaks.push_back(cell->peak_i_syn);
                    }
                    if (!have) {
                        add("vw_tau_spread:" + tag, false, 0.0,
                            "cell failed or missing");
                        continue;
                    }
                    auto [mn, mx] = std::minmax_element(means.begin(), means.end());
                    double center = 0;
                    for (double m : means) center += m;
                    center /= static_cast<double>(means.size());
                    double spread = (*mx - *mn) / center;
                    add("vw_tau_spread:" + tag, spread < 0.10, spread,
                        "mean tau spread across V_W below 10%");
                    bool ordered = true;
                    for (std::size_t k = 1; k < peaks.size(); ++k)
                        if (!(peaks[k] < peaks[k - 1])) ordered = false;
                    add("peak_vs_vw:" + tag, ordered,
                        peaks.front() - peaks.back(),
                        "peak I_syn strictly decreasing in V_W");
                }
    }

    // Pulse period barely moves tau (checked for the flat device).
    if (spec.period_width_s.size() > 1) {
        for (double c : spec.c_syn_nf)
            for (double w : spec.v_w) {
                std::string tag = "c" + compact(c) + "_w" + compact(w) + "_flat";
                std::vector<double> means;
                bool have = true;
                for (auto [p, wd] : spec.period_width_s) {
                    double m = 0;
                    if (!cell_mean(find_cell(cells, c, w, p, Bend::Flat), m)) {
                        have = false;
                        break;
                    }
                    means.push_back(m);
                }
                if (!have) {
                    if (std::find(spec.bends.begin(), spec.bends.end(), Bend::Flat) !=
                        spec.bends.end())
                        add("period_tau_spread:" + tag, false, 0.0,
                            "cell failed or missing");
                    continue;
                }
                auto [mn, mx] = std::minmax_element(means.begin(), means.end());
                double center = 0;
                for (double m : means) center += m;
                center /= static_cast<double>(means.size());
                double spread = (*mx - *mn) / center;
                add("period_tau_spread:" + tag, spread < 0.15, spread,
                    "flat mean tau spread across periods below 15%");
            }
    }

    return checks;
}

ordered_json stats_json(const TauStats& s) {
    return ordered_json{{"n", s.n},
                        {"min_s", s.min},
                        {"max_s", s.max},
                        {"median_s", s.median},
                        {"mean_s", s.mean},
                        {"q1_s", s.q1},
                        {"q3_s", s.q3},
                        {"whisker_lo_s", s.whisker_lo},
                        {"whisker_hi_s", s.whisker_hi}};
}

} // namespace

void write_estimates_csv(const std::string& path,
                         const std::vector<TauEstimate>& estimates) {
    std::string text = "cycle,phase,tau_s,a_A,b_A,c_A,sse,converged,seed\n";
    for (const auto& e : estimates) {
        text += std::to_string(e.source_cycle) + "," + to_string(e.phase) + "," +
                format_csv_number(e.tau) + "," + format_csv_number(e.a) + "," +
                format_csv_number(e.b) + "," + format_csv_number(e.c) + "," +
                format_csv_number(e.sse) + "," + csv_bool(e.converged) + "," +
                std::to_string(e.seed) + "\n";
    }
    write_csv_text(path, text);
}

void write_stats_csv(const std::string& path,
                     const std::optional<TauStats>& charge,
                     const std::optional<TauStats>& discharge) {
    std::string text =
        "phase,n,min_s,max_s,median_s,mean_s,q1_s,q3_s,whisker_lo_s,whisker_hi_s\n";
    auto row = [&](const char* phase, const std::optional<TauStats>& s) {
        if (!s) return;
        text += std::string(phase) + "," + std::to_string(s->n) + "," +
                format_csv_number(s->min) + "," + format_csv_number(s->max) + "," +
                format_csv_number(s->median) + "," + format_csv_number(s->mean) +
                "," + format_csv_number(s->q1) + "," + format_csv_number(s->q3) +
                "," + format_csv_number(s->whisker_lo) + "," +
                format_csv_number(s->whisker_hi) + "\n";
    };
    row("charge", charge);
    row("discharge", discharge);
    write_csv_text(path, text);
}

HarnessReport run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    spec.base.ldi.validate();
    spec.base.solver.validate();
    spec.base.pso.validate();

    const auto conds = spec.cells();
    fs::create_directories(spec.out_dir);

    std::vector<CellResult> results(conds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t k = next.fetch_add(1);
            if (k >= conds.size()) return;
            results[k] = run_cell(spec, conds[k]);
        }
    };
    int n_threads = pool_size(conds.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    HarnessReport report;
    report.spec_name = spec.name;
    report.seed = spec.base.pso.seed;
    report.cells = std::move(results);
    report.checks = evaluate_checks(spec, report.cells);
    report.all_cells_ok =
        std::all_of(report.cells.begin(), report.cells.end(),
                    [](const CellResult& r) { return r.ok; });
    report.all_checks_pass =
        std::all_of(report.checks.begin(), report.checks.end(),
                    [](const HarnessCheck& c) { return c.pass; });

    std::string json = report_to_json(report);
    write_csv_text((fs::path(spec.out_dir) / "report.json").string(), json);
    return report;
}

std::string report_to_json(const HarnessReport& report) {
    ordered_json j;
    j["spec_name"] = report.spec_name;
    j["seed"] = report.seed;
    j["versions"] = ordered_json{{"ldisim", LDISIM_VERSION}};
    j["cells"] = ordered_json::array();
    for (const auto& r : report.cells) {
        ordered_json cell;
        cell["condition"] = ordered_json{{"c_syn_nf", r.cond.c_syn_nf},
                                         {"v_w", r.cond.v_w},
                                         {"period_s", r.cond.period_s},
                                         {"width_s", r.cond.width_s},
                                         {"bend", r.cond.bend == Bend::Flat
                                                      ? "flat"
                                                      : "bent"}};
        cell["dir"] = r.dir;
        cell["ok"] = r.ok;
        if (!r.ok) cell["error"] = r.error;
        if (r.ok) cell["peak_i_syn_a"] = r.peak_i_syn;
        ordered_json stats;
        stats["charge"] = r.charge_stats ? stats_json(*r.charge_stats)
                                         : ordered_json(nullptr);
        stats["discharge"] = r.discharge_stats ? stats_json(*r.discharge_stats)
                                               : ordered_json(nullptr);
        cell["stats"] = stats;
        if (r.reference) {
            cell["reference"] = ordered_json{{"source", r.reference->source},
                                             {"min_ms", r.reference->min_ms},
                                             {"max_ms", r.reference->max_ms},
                                             {"median_ms", r.reference->median_ms},
                                             {"mean_ms", r.reference->mean_ms}};
            if (r.charge_stats) {
                cell["ratios"] =
                    ordered_json{{"min", r.charge_stats->min * 1e3 / r.reference->min_ms},
                                 {"max", r.charge_stats->max * 1e3 / r.reference->max_ms},
                                 {"median", r.charge_stats->median * 1e3 /
                                                r.reference->median_ms},
                                 {"mean", r.charge_stats->mean * 1e3 /
                                              r.reference->mean_ms}};
            } else {
                cell["ratios"] = nullptr;
            }
        } else {
            cell["reference"] = nullptr;
            cell["ratios"] = nullptr;
        }
        bool fits_converged =
            r.ok && !r.charge_estimates.empty() &&
            std::all_of(r.charge_estimates.begin(), r.charge_estimates.end(),
                        [](const TauEstimate& e) { return e.converged; });
        cell["passes"] = ordered_json{{"completed", r.ok},
                                      {"charge_fits_converged", fits_converged},
                                      {"has_reference", r.reference.has_value()}};
        j["cells"].push_back(std::move(cell));
    }
    j["checks"] = ordered_json::array();
    for (const auto& c : report.checks)
        j["checks"].push_back(ordered_json{{"name", c.name},
                                           {"pass", c.pass},
                                           {"value", c.value},
                                           {"detail", c.detail}});
    j["all_cells_ok"] = report.all_cells_ok;
    j["all_checks_pass"] = report.all_checks_pass;
    return j.dump(2) + "\n";
}

} // namespace ldi
