#include "ldi/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ldi/config.hpp"
#include "ldi/errors.hpp"
#include "ldi/harness.hpp"
#include "ldi/ldi_circuit.hpp"
#include "ldi/solver.hpp"
#include "ldi/validate.hpp"
#include "ldi/version.hpp"

namespace fs = std::filesystem;

namespace ldi {

namespace {

std::string compact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

struct SweepRange {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;

    std::vector<double> points() const {
        std::vector<double> out;
        for (double v = lo; v <= hi + 0.5 * step; v += step) out.push_back(v);
        return out;
    }
};

SweepRange parse_range(const std::string& text) {
    auto c1 = text.find(':');
    auto c2 = text.rfind(':');
    if (c1 == std::string::npos || c2 == c1)
        throw ConfigError("range must look like lo:hi:step, got '" + text + "'");
    SweepRange r;
    r.lo = parse_double(text.substr(0, c1));
    r.hi = parse_double(text.substr(c1 + 1, c2 - c1 - 1));
    r.step = parse_double(text.substr(c2 + 1));
    if (!(r.step > 0.0) || !(r.hi >= r.lo))
        throw ConfigError("range needs hi >= lo and step > 0: '" + text + "'");
    return r;
}

RunConfig load_run_config(const std::string& config_path,
                          const std::vector<std::string>& overrides,
                          std::optional<std::uint64_t> seed) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = run_config_from_ini(parse_ini_file(config_path));
    for (const auto& kv : overrides) apply_override(cfg, kv);
    if (seed) cfg.pso.seed = *seed;
    cfg.ldi.validate();
    cfg.solver.validate();
    cfg.pso.validate();
    if (!(cfg.sample_dt > 0.0)) throw ConfigError("sample_dt must be > 0");
    if (cfg.discard_first < 0) throw ConfigError("discard_first must be >= 0");
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + path);
    os << text;
}

// ---- characterize ----------------------------------------------------------

struct CharacterizeArgs {
    std::string device = "p";
    std::string bend = "flat";
    std::string out_dir = "characterization";
    std::string vgs_range, vds_range;       // lo:hi:step
    std::vector<double> vds_curves;         // transfer curves, one per V_DS
    std::vector<double> vgs_curves;         // output curves, one per V_GS
    bool hysteresis = false;
    double dwell = 1.0;    // s per sweep point when hysteresis is on
    double tau_trap = 10.0;
    double alpha = 0.1;
};

int cmd_characterize(const CharacterizeArgs& a) {
    Polarity pol = a.device == "p" ? Polarity::P : Polarity::N;
    Bend bend = a.bend == "bent" ? Bend::Bent : Bend::Flat;
    OfetParams dev = preset(pol, bend);

    SweepRange vgs = a.vgs_range.empty()
                         ? (pol == Polarity::P ? SweepRange{-30.0, 10.0, 0.5}
                                               : SweepRange{-10.0, 30.0, 0.5})
                         : parse_range(a.vgs_range);
    SweepRange vds = a.vds_range.empty()
                         ? (pol == Polarity::P ? SweepRange{-30.0, 0.0, 0.5}
                                               : SweepRange{0.0, 30.0, 0.5})
                         : parse_range(a.vds_range);
    std::vector<double> vds_curves =
        !a.vds_curves.empty() ? a.vds_curves
        : pol == Polarity::P  ? std::vector<double>{-5.0, -20.0}
                              : std::vector<double>{5.0, 20.0};
    std::vector<double> vgs_curves =
        !a.vgs_curves.empty() ? a.vgs_curves
        : pol == Polarity::P  ? std::vector<double>{-10.0, -20.0, -30.0}
                              : std::vector<double>{10.0, 20.0, 30.0};

    fs::create_directories(a.out_dir);

    // Transfer curves: forward then reverse gate sweep per drain bias. The
    // trap state carries through the double sweep, so the two directions
    // split only when hysteresis is on.
    {
        std::vector<double> grid = vgs.points();
        std::string head = "v_gs_V";
        std::vector<std::vector<double>> cols;
        for (double vd : vds_curves) {
            HysteresisState h;
            h.enabled = a.hysteresis;
            h.tau_trap = a.tau_trap;
            h.alpha = a.alpha;
            std::vector<double> fwd, rev(grid.size());
            for (double vg : grid) {
                fwd.push_back(drain_current(dev, h, vg, vd));
                if (h.enabled)
                    h = step_hysteresis(h, gate_overdrive(dev, h, vg, vd), a.dwell);
            }
            for (std::size_t k = grid.size(); k-- > 0;) {
                rev[k] = drain_current(dev, h, grid[k], vd);
                if (h.enabled)
                    h = step_hysteresis(h, gate_overdrive(dev, h, grid[k], vd),
                                        a.dwell);
            }
            head += ",id_fwd_vds_" + compact(vd) + "_A,id_rev_vds_" + compact(vd) +
                    "_A";
            cols.push_back(std::move(fwd));
            cols.push_back(std::move(rev));
        }
        std::string text = head + "\n";
        for (std::size_t r = 0; r < grid.size(); ++r) {
            text += format_csv_number(grid[r]);
            for (const auto& c : cols) text += "," + format_csv_number(c[r]);
            text += "\n";
        }
        write_text((fs::path(a.out_dir) / "transfer.csv").string(), text);
    }

    // Output curves: drain sweep per gate bias (no trap dynamics).
    {
        std::vector<double> grid = vds.points();
        std::string head = "v_ds_V";
        std::vector<std::vector<double>> cols;
        HysteresisState off;
        for (double vg : vgs_curves) {
            std::vector<double> col;
            for (double vd : grid) col.push_back(drain_current(dev, off, vg, vd));
            head += ",id_vgs_" + compact(vg) + "_A";
            cols.push_back(std::move(col));
        }
        std::string text = head + "\n";
        for (std::size_t r = 0; r < grid.size(); ++r) {
            text += format_csv_number(grid[r]);
            for (const auto& c : cols) text += "," + format_csv_number(c[r]);
            text += "\n";
        }
        write_text((fs::path(a.out_dir) / "output.csv").string(), text);
    }

    std::cout << "characterized " << a.device << "-type (" << a.bend << ") into "
              << a.out_dir << "/{transfer,output}.csv\n";
    return 0;
}

// ---- step ------------------------------------------------------------------

Trace simulate_ldi(const RunConfig& cfg) {
    Netlist nl = build_ldi(cfg.ldi);
    CircuitState s0 = dc_operating_point(nl, cfg.solver, DcSources::Rest, 0.0);
    double t_end = cfg.ldi.pulse.n_cycles * cfg.ldi.pulse.period;
    Sampler sampler;
    sampler.uniform_dt = cfg.sample_dt;
    sampler.node_columns = {"syn"};
    return transient(nl, s0, cfg.solver, t_end, sampler).trace;
}

int cmd_step(const RunConfig& base, const std::vector<double>& vw_list,
             const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::string path = (fs::path(out_dir) / "trace.csv").string();
    if (vw_list.empty()) {
        Trace tr = simulate_ldi(base);
        tr.write_csv_file(path);
        const auto& isyn = tr.column("i_syn_A");
        std::cout << "step trace -> " << path << " (peak i_syn "
                  << format_csv_number(*std::max_element(isyn.begin(), isyn.end()))
                  << " A)\n";
        return 0;
    }
    // Overlay: one synapse-current column per weight voltage, shared grid.
    Trace merged;
    for (double vw : vw_list) {
        RunConfig cfg = base;
        cfg.ldi.v_w = vw;
        cfg.ldi.validate();
        Trace tr = simulate_ldi(cfg);
        if (merged.t.empty()) merged.t = tr.t;
        if (tr.t.size() != merged.t.size())
            throw DataError("overlay traces fell on different grids");
        merged.add_column("i_syn_w" + compact(vw) + "_A") = tr.column("i_syn_A");
    }
    merged.write_csv_file(path);
    std::cout << "step overlay (" << vw_list.size() << " weight voltages) -> "
              << path << "\n";
    return 0;
}

// ---- fit -------------------------------------------------------------------

int cmd_fit(const RunConfig& cfg, const std::string& trace_path,
            std::string column, const std::string& out_dir) {
    Trace tr = Trace::read_csv_file(trace_path);
    if (tr.names.empty()) throw CsvError(trace_path + ": no data columns");
    if (column.empty()) column = tr.names.front();

    auto segs = segment(tr, column, cfg.ldi.pulse, cfg.discard_first);
    std::vector<TauEstimate> all, charge, discharge;
    for (const auto& seg : segs) {
        TauEstimate est = fit_pso(seg, cfg.pso);
        all.push_back(est);
        (seg.phase == Phase::Charge ? charge : discharge).push_back(est);
    }
    std::optional<TauStats> cs, ds;
    try {
        cs = stats(charge);
    } catch (const InsufficientData&) {
    }
    try {
        ds = stats(discharge);
    } catch (const InsufficientData&) {
    }
    if (!cs && !ds) throw InsufficientData("fit: no converged estimates");

    fs::create_directories(out_dir);
    write_estimates_csv((fs::path(out_dir) / "estimates.csv").string(), all);
    write_stats_csv((fs::path(out_dir) / "stats.csv").string(), cs, ds);

    auto show = [](const char* tag, const std::optional<TauStats>& s) {
        if (!s) return;
        std::cout << tag << ": n=" << s->n << " min=" << format_csv_number(s->min)
                  << " max=" << format_csv_number(s->max)
                  << " median=" << format_csv_number(s->median)
                  << " mean=" << format_csv_number(s->mean) << " (s)\n";
    };
    show("charge", cs);
    show("discharge", ds);
    return 0;
}

// ---- sweep -----------------------------------------------------------------

ExperimentSpec sweep_spec_from_file(const std::string& path,
                                    const std::string& out_dir,
                                    const std::vector<std::string>& overrides,
                                    std::optional<std::uint64_t> seed) {
    IniFile ini = parse_ini_file(path);
    IniFile base_ini;
    base_ini.path = ini.path;
    ExperimentSpec spec;
    spec.out_dir = out_dir;
    std::vector<double> widths;
    for (const auto& e : ini.entries) {
        if (e.section != "sweep") {
            base_ini.entries.push_back(e);
            continue;
        }
        try {
            if (e.key == "name") spec.name = e.value;
            else if (e.key == "c_syn_nf") spec.c_syn_nf = parse_double_list(e.value);
            else if (e.key == "v_w") spec.v_w = parse_double_list(e.value);
            else if (e.key == "period_s") {
                for (double p : parse_double_list(e.value))
                    spec.period_width_s.push_back({p, p / 2.0});
            } else if (e.key == "width_s") widths = parse_double_list(e.value);
            else if (e.key == "bend") {
                std::stringstream ss(e.value);
                std::string item;
                while (std::getline(ss, item, ','))
                    spec.bends.push_back(parse_bend(item));
            } else
                throw ConfigError("unknown key '" + e.key + "' in section [sweep]");
        } catch (const ConfigError& err) {
            throw ConfigError(ini.path + ":" + std::to_string(e.line) + ": " +
                              err.what());
        }
    }
    if (!widths.empty()) {
        if (widths.size() != spec.period_width_s.size())
            throw ConfigError(path + ": width_s list must match period_s list");
        for (std::size_t k = 0; k < widths.size(); ++k)
            spec.period_width_s[k].second = widths[k];
    }
    spec.base = run_config_from_ini(base_ini);
    for (const auto& kv : overrides) apply_override(spec.base, kv);
    if (seed) spec.base.pso.seed = *seed;
    return spec;
}

int cmd_sweep(const std::string& what, std::string out_dir, bool strict,
              const std::string& config_path,
              const std::vector<std::string>& overrides,
              std::optional<std::uint64_t> seed) {
    ExperimentSpec spec;
    if (what == "table2" || what == "table3" || what == "table6") {
        if (out_dir.empty()) out_dir = "runs/" + what;
        RunConfig base = load_run_config(config_path, overrides, seed);
        spec = named_spec(what, out_dir, base);
    } else if (fs::exists(what)) {
        if (out_dir.empty())
            out_dir = "runs/" + fs::path(what).stem().string();
        spec = sweep_spec_from_file(what, out_dir, overrides, seed);
        if (spec.name.empty()) spec.name = fs::path(what).stem().string();
    } else {
        throw ConfigError("unknown sweep spec '" + what +
                          "' (not a named spec or a readable file)");
    }

    HarnessReport report = run_experiment(spec);
    for (const auto& cell : report.cells) {
        std::cout << cell.dir << ": "
                  << (cell.ok ? "ok" : "FAILED (" + cell.error + ")");
        if (cell.ok && cell.charge_stats)
            std::cout << "  charge mean tau "
                      << format_csv_number(cell.charge_stats->mean * 1e3) << " ms";
        std::cout << "\n";
    }
    int failed_checks = 0;
    for (const auto& c : report.checks)
        if (!c.pass) ++failed_checks;
    std::cout << report.checks.size() << " checks, " << failed_checks
              << " failing; report -> " << spec.out_dir << "/report.json\n";

    if (!report.all_cells_ok) return 3;
    if (strict && !report.all_checks_pass) return 1;
    return 0;
}

// ---- validate --------------------------------------------------------------

int cmd_validate(bool list_only, double rc_dt) {
    if (list_only) {
        for (const auto& n : oracle_names()) std::cout << n << "\n";
        return 0;
    }
    OracleOptions opt;
    opt.rc_dt = rc_dt;
    auto results = run_oracles(opt);
    std::size_t width = 0;
    for (const auto& r : results) width = std::max(width, r.name.size());
    bool all = true;
    for (const auto& r : results) {
        all = all && r.pass;
        std::printf("%-*s  %s  %.6g  (%s)\n", static_cast<int>(width),
                    r.name.c_str(), r.pass ? "PASS" : "FAIL", r.value,
                    r.detail.c_str());
    }
    std::printf("%zu oracles, %s\n", results.size(), all ? "all pass" : "FAILURES");
    return all ? 0 : 1;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Organic log-domain integrator synapse simulator"};
    app.set_version_flag("--version", LDISIM_VERSION);
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "settings file (key = value)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--set", overrides,
                        "override a setting, e.g. --set circuit.v_w=9.5");
        cmd->add_option("--seed", seed, "swarm RNG seed (default 42)");
    };

    CharacterizeArgs ch;
    auto* c_char = app.add_subcommand(
        "characterize", "Sweep a device preset into transfer/output CSVs");
    c_char->add_option("--device", ch.device, "p or n")
        ->check(CLI::IsMember({"p", "n"}));
    c_char->add_option("--bend", ch.bend, "flat or bent")
        ->check(CLI::IsMember({"flat", "bent"}));
    c_char->add_option("--out", ch.out_dir, "output directory");
    c_char->add_option("--vgs", ch.vgs_range, "gate sweep lo:hi:step");
    c_char->add_option("--vds", ch.vds_range, "drain sweep lo:hi:step");
    c_char->add_option("--vds-curves", ch.vds_curves,
                       "drain biases for the transfer curves");
    c_char->add_option("--vgs-curves", ch.vgs_curves,
                       "gate biases for the output curves");
    c_char->add_flag("--hysteresis", ch.hysteresis, "enable slow trap drift");
    c_char->add_option("--dwell", ch.dwell, "seconds per point (hysteresis)");
    c_char->add_option("--tau-trap", ch.tau_trap, "trap relaxation time, s");
    c_char->add_option("--alpha", ch.alpha, "trap coupling");

    std::string step_out = "step_run";
    std::vector<double> vw_list;
    auto* c_step =
        app.add_subcommand("step", "Simulate the synapse pulse response");
    add_common(c_step);
    c_step->add_option("--out", step_out, "output directory");
    c_step->add_option("--vw-list", vw_list,
                       "overlay traces for these weight voltages")
        ->delimiter(',');

    std::string fit_trace, fit_column, fit_out = "fit_out";
    auto* c_fit = app.add_subcommand(
        "fit", "Estimate time constants from a trace CSV");
    add_common(c_fit);
    c_fit->add_option("trace", fit_trace, "trace CSV path")->required();
    c_fit->add_option("--column", fit_column,
                      "current column to fit (default: first)");
    c_fit->add_option("--out", fit_out, "output directory");

    std::string sweep_what, sweep_out;
    bool strict = false;
    auto* c_sweep = app.add_subcommand(
        "sweep", "Run an experiment matrix end-to-end");
    add_common(c_sweep);
    c_sweep->add_option("spec", sweep_what, "table2 | table3 | table6 | file")
        ->required();
    c_sweep->add_option("--out", sweep_out, "output directory");
    c_sweep->add_flag("--strict", strict, "nonzero exit when checks fail");

    bool list_only = false;
    double rc_dt = 0.0;
    auto* c_val = app.add_subcommand(
        "validate", "Run the closed-form oracle suite");
    c_val->add_flag("--list", list_only, "list oracle names without running");
    c_val->add_option("--dt-max", rc_dt,
                      "override the RC oracle's step size (testing hook)");

    std::vector<const char*> argv;
    argv.push_back("ldi_sim");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_char->parsed()) return cmd_characterize(ch);
        if (c_step->parsed())
            return cmd_step(load_run_config(config_path, overrides, seed), vw_list,
                            step_out);
        if (c_fit->parsed())
            return cmd_fit(load_run_config(config_path, overrides, seed), fit_trace,
                           fit_column, fit_out);
        if (c_sweep->parsed())
            return cmd_sweep(sweep_what, sweep_out, strict, config_path, overrides,
                             seed);
        if (c_val->parsed()) return cmd_validate(list_only, rc_dt);
    } catch (const ConvergenceError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data/fit failure: " << e.what() << "\n";
        return 4;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

} // namespace ldi
