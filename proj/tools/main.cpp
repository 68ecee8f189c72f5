#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qpburst/burst_analysis.hpp"
#include "qpburst/config.hpp"
#include "qpburst/debye.hpp"
#include "qpburst/device.hpp"
#include "qpburst/error.hpp"
#include "qpburst/model_fitting.hpp"
#include "qpburst/parity_hmm.hpp"
#include "qpburst/random.hpp"
#include "qpburst/simulator.hpp"
#include "qpburst/trace_io.hpp"
#include "qpburst/tunneling.hpp"
#include "qpburst/units.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace qpburst;

namespace
{
struct Options
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out{"."};
    unsigned threads{1};
    bool truth{false};
    std::string format{"csv"};
    std::vector<std::string> inputs;
};

struct Loaded
{
    RunConfig run;
    std::string text;  // raw config, hashed into trace metadata
};

Loaded load(Options const& opts)
{
    Loaded l;
    if (opts.config.empty())
    {
        return l;
    }
    std::ifstream in(opts.config);
    if (!in)
    {
        throw ParseError("cannot open config file '" + opts.config + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    l.text = ss.str();
    std::istringstream is(l.text);
    l.run = load_config(is);
    return l;
}

//! Run f(i) for i in [0, n) on up to \c threads workers; rethrows the first error.
template<class F>
void parallel_for(std::size_t n, unsigned threads, F&& f)
{
    unsigned const workers
        = static_cast<unsigned>(std::min<std::size_t>(std::max(threads, 1u), n));
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            f(i, 0u);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
    {
        pool.emplace_back([&, w] {
            for (std::size_t i = next++; i < n; i = next++)
            {
                try
                {
                    f(i, w);
                }
                catch (...)
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error)
                    {
                        error = std::current_exception();
                    }
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool)
    {
        t.join();
    }
    if (error)
    {
        std::rethrow_exception(error);
    }
}

//---------------------------------------------------------------------------//
// Tables written as CSV or one JSON object per row
struct Table
{
    std::vector<std::string> columns;
    std::vector<json> rows;

    void write(fs::path const& stem, std::string const& format) const
    {
        fs::path path = stem;
        path += format == "jsonl" ? ".jsonl" : ".csv";
        write_file_atomic(path, [&](std::ostream& os) {
            if (format == "jsonl")
            {
                for (auto const& r : rows)
                {
                    os << r.dump() << '\n';
                }
                return;
            }
            for (std::size_t i = 0; i < columns.size(); ++i)
            {
                os << (i ? "," : "") << columns[i];
            }
            os << '\n';
            for (auto const& r : rows)
            {
                for (std::size_t i = 0; i < columns.size(); ++i)
                {
                    os << (i ? "," : "") << cell(r.at(columns[i]));
                }
                os << '\n';
            }
        });
    }

    static std::string cell(json const& v)
    {
        if (v.is_number_float())
        {
            return format_double(v.get<double>());
        }
        if (v.is_boolean())
        {
            return v.get<bool>() ? "1" : "0";
        }
        if (v.is_string())
        {
            return v.get<std::string>();
        }
        return v.dump();
    }
};

void write_report(fs::path const& stem, std::string const& format,
                  json const& report)
{
    fs::path path = stem;
    path += format == "jsonl" ? ".json" : ".txt";
    write_file_atomic(path, [&](std::ostream& os) {
        if (format == "jsonl")
        {
            os << report.dump() << '\n';
            return;
        }
        for (auto const& [key, value] : report.items())
        {
            os << key << '=' << Table::cell(value) << '\n';
        }
    });
}

fs::path metadata_path(fs::path const& trace)
{
    fs::path p = trace;
    return p.replace_extension(".meta");
}

Trace load_trace(fs::path const& path, double default_dt)
{
    double dt = default_dt;
    bool discard = false;
    if (auto const meta = metadata_path(path); fs::exists(meta))
    {
        std::ifstream in(meta);
        auto const m = read_metadata(in);
        dt = m.dt_seconds;
        discard = m.discard;
    }
    std::ifstream in(path);
    if (!in)
    {
        throw ParseError("cannot open trace file '" + path.string() + "'");
    }
    try
    {
        Trace t = read_trace_csv(in, dt);
        t.discard = discard;
        return t;
    }
    catch (ParseError const& e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string trace_name(std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "trace_%04zu", i);
    return buf;
}

std::vector<double> default_temperatures()
{
    std::vector<double> t;
    for (int i = 0; i <= 10; ++i)
    {
        t.push_back(0.03 + 0.01 * i);
    }
    return t;
}

//---------------------------------------------------------------------------//
int cmd_rates(Options const& opts)
{
    auto const cfg = load(opts).run;
    auto const& dev = cfg.simulation.device;
    validate(dev);
    auto const temps
        = cfg.temperatures.empty() ? default_temperatures() : cfg.temperatures;
    double const x_ne = cfg.simulation.steady.bath.x_qp_ne;

    Table table;
    table.columns = {"T_kelvin", "gamma0_qp", "gamma1_qp", "gamma10",
                     "gamma01", "zeta", "x_low"};
    for (double t : temps)
    {
        QPBath const bath{t, x_ne, std::nullopt};
        auto const r = parity_switch_rates(dev, bath);
        table.rows.push_back({{"T_kelvin", t},
                              {"gamma0_qp", r.gamma0_qp},
                              {"gamma1_qp", r.gamma1_qp},
                              {"gamma10", r(1, 0)},
                              {"gamma01", r(0, 1)},
                              {"zeta", zeta(t, dev)},
                              {"x_low", xqp_low_film(t, dev, x_ne)}});
        std::printf("T = %6.1f mK  Gamma0 = %.4g /s  Gamma1 = %.4g /s\n",
                    t * 1e3, r.gamma0_qp, r.gamma1_qp);
    }
    fs::create_directories(opts.out);
    table.write(fs::path(opts.out) / "rates", opts.format);
    return 0;
}

//---------------------------------------------------------------------------//
int cmd_simulate(Options const& opts)
{
    auto const loaded = load(opts);
    auto const& cfg = loaded.run;
    auto const seed = opts.seed ? opts.seed : cfg.seed;
    if (!seed)
    {
        throw ConfigError("simulate needs --seed or [simulation] seed");
    }
    SimulationConfig sim = cfg.simulation;
    sim.record_truth = sim.record_truth || opts.truth;
    validate(sim);
    RateModel const model(sim);
    std::string const hash = fnv1a_hex(loaded.text);
    fs::path const out(opts.out);
    fs::create_directories(out);

    std::vector<std::string> lines(cfg.traces);
    parallel_for(cfg.traces, opts.threads, [&](std::size_t i, unsigned) {
        std::uint64_t const trace_seed = derive_seed(*seed, 0, i);
        Trace trace;
        auto const truth = simulate_trace_into(sim, model, trace_seed, trace);
        auto const stem = out / trace_name(i);

        fs::path csv = stem;
        csv += ".csv";
        write_file_atomic(csv, [&](std::ostream& os) { write_trace_csv(os, trace); });
        TraceMetadata const meta{sim.measurement.dt,
                                 sim.duration,
                                 trace_seed,
                                 sim.device.name,
                                 sim.record_truth,
                                 trace.discard,
                                 hash};
        write_file_atomic(metadata_path(csv),
                          [&](std::ostream& os) { write_metadata(os, meta); });
        if (sim.record_truth)
        {
            fs::path tp = out / ("truth_" + trace_name(i).substr(6) + ".jsonl");
            write_file_atomic(tp, [&](std::ostream& os) {
                for (auto const& b : truth.bursts)
                {
                    os << json{{"kind", "burst"},
                               {"onset_sample", b.onset_sample},
                               {"time", b.time},
                               {"energy_ev", b.energy / units::electron_volt},
                               {"x_peak", b.x_peak},
                               {"t_burst", b.t_burst}}
                              .dump()
                       << '\n';
                }
                for (auto const& e : truth.tls)
                {
                    os << json{{"kind", "tls"},
                               {"start_sample", e.start_sample},
                               {"end_sample", e.end_sample}}
                              .dump()
                       << '\n';
                }
            });
        }
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: %zu readouts, %zu bursts%s",
                      csv.filename().c_str(), trace.size(), truth.bursts.size(),
                      trace.discard ? ", discarded" : "");
        lines[i] = buf;
    });
    for (auto const& l : lines)
    {
        std::printf("%s\n", l.c_str());
    }
    return 0;
}

//---------------------------------------------------------------------------//
int cmd_detect(Options const& opts)
{
    auto const cfg = load(opts).run;
    if (opts.inputs.empty())
    {
        throw ConfigError("detect needs at least one trace file");
    }
    DetectionConfig const dc = cfg.detection;
    validate(dc);
    double const default_dt = cfg.simulation.measurement.dt;
    std::size_t const n = opts.inputs.size();

    // Pass 1: pooled window statistics fix one threshold for all traces
    std::optional<Trace> cached;
    std::vector<std::vector<WindowCounts>> windows(n);
    parallel_for(n, opts.threads, [&](std::size_t i, unsigned) {
        Trace t = load_trace(opts.inputs[i], default_dt);
        windows[i] = count_windows(t, dc.window_samples);
        if (n == 1)
        {
            cached = std::move(t);
        }
    });
    std::vector<WindowCounts> pooled;
    for (auto const& w : windows)
    {
        pooled.insert(pooled.end(), w.begin(), w.end());
    }
    ThresholdFit const threshold = resolve_threshold(pooled, dc);

    // Pass 2: events and recovery tallies
    RecoveryOptions ro = cfg.recovery;
    ro.two_state_inversion = ro.two_state_inversion || cfg.thermometry;
    std::vector<std::vector<BurstEvent>> events(n);
    std::vector<double> seconds(n, 0);
    std::vector<char> discarded(n, 0);
    double dt = default_dt;
    unsigned const workers = std::max(1u, opts.threads);
    std::vector<std::optional<RecoveryAccumulator>> acc(workers);
    std::mutex dt_mutex;
    parallel_for(n, opts.threads, [&](std::size_t i, unsigned w) {
        Trace t = cached ? std::move(*cached) : load_trace(opts.inputs[i], default_dt);
        {
            std::lock_guard<std::mutex> lock(dt_mutex);
            dt = t.dt;
        }
        auto det = detect_events(t, dc, threshold, i);
        discarded[i] = t.discard;
        if (!t.discard)
        {
            seconds[i] = t.duration();
            if (!acc[w])
            {
                acc[w].emplace(t.dt, ro);
            }
            for (auto const& e : det.events)
            {
                if (e.classification == EventClass::qp_burst)
                {
                    acc[w]->add(t, e.onset_index);
                }
            }
        }
        events[i] = std::move(det.events);
    });

    std::vector<BurstEvent> all;
    std::uint64_t bursts = 0;
    std::uint64_t tls = 0;
    double observed = 0;
    std::size_t n_discarded = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        for (auto const& e : events[i])
        {
            bursts += e.classification == EventClass::qp_burst;
            tls += e.classification == EventClass::tls;
        }
        all.insert(all.end(), events[i].begin(), events[i].end());
        observed += seconds[i];
        n_discarded += discarded[i] != 0;
    }

    fs::path const out(opts.out);
    fs::create_directories(out);
    write_file_atomic(out / "events.jsonl",
                      [&](std::ostream& os) { write_events_jsonl(os, all, dt); });
    for (std::size_t i = 0; i < n; ++i)
    {
        auto const name = "windows_" + fs::path(opts.inputs[i]).stem().string()
                          + ".csv";
        write_file_atomic(out / name, [&](std::ostream& os) {
            write_windows_csv(os, windows[i]);
        });
    }

    json report;
    report["traces"] = n;
    report["discarded_traces"] = n_discarded;
    report["observation_seconds"] = observed;
    report["threshold"] = threshold.threshold;
    report["threshold_mu"] = threshold.mu;
    report["threshold_fallback"] = threshold.fallback;
    report["qp_bursts"] = bursts;
    report["tls_events"] = tls;
    if (observed > 0)
    {
        auto const rate = burst_rate(bursts, observed);
        report["burst_rate_per_min"] = rate.rate;
        report["burst_rate_ci95_lower"] = rate.ci.lower;
        report["burst_rate_ci95_upper"] = rate.ci.upper;
    }

    std::optional<RecoveryAccumulator> merged;
    for (auto& a : acc)
    {
        if (!a)
        {
            continue;
        }
        if (merged)
        {
            merged->merge(*a);
        }
        else
        {
            merged = std::move(a);
        }
    }
    if (merged && merged->n_events() > 0)
    {
        auto const curve = merged->finish(
            cfg.thermometry ? &cfg.simulation.device : nullptr);
        write_file_atomic(out / "recovery.csv",
                          [&](std::ostream& os) { write_recovery_csv(os, curve); });
        double const end = cfg.recovery_fit_end.value_or(ro.t_after);
        std::vector<double> t;
        std::vector<double> y;
        std::vector<double> s;
        for (std::size_t i = 0; i < curve.size(); ++i)
        {
            if (curve.time[i] >= cfg.recovery_fit_start && curve.time[i] <= end)
            {
                t.push_back(curve.time[i]);
                y.push_back(curve.d_gamma10[i]);
                s.push_back(curve.d_gamma10_err[i]);
            }
        }
        report["events_averaged"] = curve.n_events_averaged;
        try
        {
            // Fixed zero baseline when the steady rate is subtracted explicitly
            auto const fit = fit_exponential(
                t, y, s,
                ro.gamma10_steady ? std::optional<double>(0.0) : std::nullopt);
            report["recovery_tau"] = fit.tau;
            report["recovery_tau_err"] = fit.tau_err;
            report["recovery_amplitude"] = fit.amplitude;
            report["recovery_chi2"] = fit.chi2;
            report["recovery_dof"] = fit.dof;
        }
        catch (ConvergenceError const& e)
        {
            std::fprintf(stderr, "warning: recovery fit failed: %s\n", e.what());
        }
    }
    write_report(out / "summary", opts.format, report);

    std::printf("%zu traces (%zu discarded), threshold %d%s: %llu bursts, "
                "%llu TLS events\n",
                n, n_discarded, threshold.threshold,
                threshold.fallback ? " (fallback)" : "",
                static_cast<unsigned long long>(bursts),
                static_cast<unsigned long long>(tls));
    if (report.contains("burst_rate_per_min"))
    {
        std::printf("burst rate %.4g /min, 95%% CI [%.4g, %.4g]\n",
                    report["burst_rate_per_min"].get<double>(),
                    report["burst_rate_ci95_lower"].get<double>(),
                    report["burst_rate_ci95_upper"].get<double>());
    }
    if (report.contains("recovery_tau"))
    {
        std::printf("recovery tau %.4g +- %.2g ms\n",
                    report["recovery_tau"].get<double>() * 1e3,
                    report["recovery_tau_err"].get<double>() * 1e3);
    }
    return 0;
}

//---------------------------------------------------------------------------//
int cmd_hmm_rate(Options const& opts)
{
    auto const cfg = load(opts).run;
    if (opts.inputs.empty())
    {
        throw ConfigError("hmm-rate needs at least one trace file");
    }
    std::size_t const n = opts.inputs.size();
    std::vector<json> rows(n);
    parallel_for(n, opts.threads, [&](std::size_t i, unsigned) {
        auto const trace = load_trace(opts.inputs[i], cfg.simulation.measurement.dt);
        auto const r = fit_switch_rate(parity_trace_from(trace), cfg.hmm_init);
        rows[i] = {{"trace", fs::path(opts.inputs[i]).filename().string()},
                   {"switch_rate", r.params.switch_rate},
                   {"assign_error", r.params.assign_error},
                   {"unknown_prob", r.params.unknown_prob},
                   {"ci68_lower", r.rate_ci.first},
                   {"ci68_upper", r.rate_ci.second},
                   {"ci95_lower", r.rate_ci95.first},
                   {"ci95_upper", r.rate_ci95.second},
                   {"log_likelihood", r.log_likelihood},
                   {"identifiability_flag", r.identifiability_flag},
                   {"at_lower_bound", r.at_lower_bound},
                   {"short_trace", r.short_trace}};
    });
    Table table;
    table.columns = {"trace", "switch_rate", "assign_error", "unknown_prob",
                     "ci68_lower", "ci68_upper", "ci95_lower", "ci95_upper",
                     "log_likelihood", "identifiability_flag",
                     "at_lower_bound", "short_trace"};
    table.rows = rows;
    fs::create_directories(opts.out);
    table.write(fs::path(opts.out) / "hmm", opts.format);
    for (auto const& r : rows)
    {
        std::printf("%s: Gamma = %.4g /s, 95%% CI [%.4g, %.4g], error %.3g%s\n",
                    r["trace"].get<std::string>().c_str(),
                    r["switch_rate"].get<double>(),
                    r["ci95_lower"].get<double>(), r["ci95_upper"].get<double>(),
                    r["assign_error"].get<double>(),
                    r["identifiability_flag"].get<bool>() ? " (unidentifiable)"
                                                          : "");
    }
    return 0;
}

//---------------------------------------------------------------------------//
int cmd_fit_temps(Options const& opts)
{
    auto const cfg = load(opts).run;
    if (opts.inputs.size() != 1)
    {
        throw ConfigError("fit-temps needs exactly one sweep CSV");
    }
    std::ifstream in(opts.inputs[0]);
    if (!in)
    {
        throw ParseError("cannot open sweep file '" + opts.inputs[0] + "'");
    }
    auto const data = read_sweep_csv(in);
    auto const& geometry = cfg.simulation.device;
    auto const fit
        = fit_temperature_sweep(data, geometry, cfg.fit_init, cfg.fit_options);

    fs::path const out(opts.out);
    fs::create_directories(out);
    if (opts.format == "jsonl")
    {
        json report;
        char const* names[fit_size]
            = {"x_ne", "delta", "d_delta", "gamma0_ph", "gamma1_ph"};
        double const values[fit_size]
            = {fit.params.x_ne, fit.params.delta, fit.params.d_delta,
               fit.params.gamma0_ph, fit.params.gamma1_ph};
        for (int k = 0; k < fit_size; ++k)
        {
            report[names[k]] = values[k];
            report[std::string(names[k]) + "_sigma"] = fit.sigma[k];
        }
        json cov = json::array();
        for (int r = 0; r < fit_size; ++r)
        {
            json row = json::array();
            for (int c = 0; c < fit_size; ++c)
            {
                row.push_back(fit.covariance(r, c));
            }
            cov.push_back(row);
        }
        report["covariance"] = cov;
        report["chi2"] = fit.chi2;
        report["dof"] = fit.dof;
        report["log_space"] = fit.log_space;
        report["covariance_reliable"] = fit.covariance_reliable;
        report["converged"] = fit.converged;
        write_file_atomic(out / "fit.json",
                          [&](std::ostream& os) { os << report.dump() << '\n'; });
    }
    else
    {
        write_file_atomic(out / "fit.txt",
                          [&](std::ostream& os) { write_fit_result(os, fit); });
    }

    Table model;
    model.columns = {"T_kelvin", "gamma0", "gamma1", "gamma0_model",
                     "gamma1_model"};
    for (auto const& p : data.points)
    {
        auto const [g0, g1] = sweep_model(p.temperature, geometry, fit.params);
        model.rows.push_back({{"T_kelvin", p.temperature},
                              {"gamma0", p.gamma0},
                              {"gamma1", p.gamma1},
                              {"gamma0_model", g0},
                              {"gamma1_model", g1}});
    }
    model.write(out / "fit_model", opts.format);

    std::printf("x_ne = %.3g +- %.2g\n", fit.params.x_ne, fit.sigma[fit_x_ne]);
    std::printf("Delta/h = %.3f +- %.3f GHz\n", fit.params.delta,
                fit.sigma[fit_delta]);
    std::printf("dDelta/h = %.3f +- %.3f GHz\n", fit.params.d_delta,
                fit.sigma[fit_d_delta]);
    std::printf("Gamma0_ph = %.3g +- %.2g /s, Gamma1_ph = %.3g +- %.2g /s\n",
                fit.params.gamma0_ph, fit.sigma[fit_gamma0_ph],
                fit.params.gamma1_ph, fit.sigma[fit_gamma1_ph]);
    std::printf("chi2 = %.4g for %d dof%s\n", fit.chi2, fit.dof,
                fit.covariance_reliable ? "" : " (covariance unreliable)");
    return 0;
}

//---------------------------------------------------------------------------//
int cmd_fit_gap_thickness(Options const& opts)
{
    if (opts.inputs.size() != 1)
    {
        throw ConfigError("fit-gap-thickness needs exactly one CSV");
    }
    std::ifstream in(opts.inputs[0]);
    if (!in)
    {
        throw ParseError("cannot open file '" + opts.inputs[0] + "'");
    }
    auto const fit = fit_gap_thickness(read_gap_thickness_csv(in));
    json const report{{"a_ghz_nm", fit.a},
                      {"a_err", fit.a_err},
                      {"delta0_ghz", fit.delta0},
                      {"delta0_err", fit.delta0_err},
                      {"covariance", fit.covariance},
                      {"chi2", fit.chi2},
                      {"dof", fit.dof}};
    fs::create_directories(opts.out);
    write_report(fs::path(opts.out) / "gap_fit", opts.format, report);
    std::printf("Delta/h = (%.4g +- %.2g) GHz nm / d + (%.4g +- %.2g) GHz, "
                "chi2 %.3g for %d dof\n",
                fit.a, fit.a_err, fit.delta0, fit.delta0_err, fit.chi2, fit.dof);
    return 0;
}

//---------------------------------------------------------------------------//
int cmd_debye(Options const& opts)
{
    auto const cfg = load(opts).run;
    validate(cfg.chip);
    Table table;
    table.columns = {"energy_ev", "temperature_k"};
    for (double e : cfg.deposit_energies_ev)
    {
        double const t = debye_temperature(e * units::electron_volt, cfg.chip);
        table.rows.push_back({{"energy_ev", e}, {"temperature_k", t}});
        std::printf("E = %.4g eV -> T = %.4g mK\n", e, t * 1e3);
    }
    fs::create_directories(opts.out);
    table.write(fs::path(opts.out) / "debye", opts.format);
    return 0;
}

//---------------------------------------------------------------------------//
int report_error(char const* kind, std::exception const& e, int code,
                 int line = 0)
{
    json err{{"error", kind}, {"message", e.what()}};
    if (line > 0)
    {
        err["line"] = line;
    }
    std::cerr << err.dump() << '\n';
    return code;
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Quasiparticle burst simulation and analysis"};
    app.require_subcommand(1);
    Options opts;

    auto add = [&](char const* name, char const* help, bool inputs) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opts.config, "INI configuration file")
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", opts.seed, "Root seed");
        sub->add_option("--out", opts.out, "Output directory");
        sub->add_option("--threads", opts.threads, "Worker threads")
            ->check(CLI::PositiveNumber);
        sub->add_option("--format", opts.format, "Table format")
            ->check(CLI::IsMember({"csv", "jsonl"}));
        if (inputs)
        {
            sub->add_option("inputs", opts.inputs, "Input files")
                ->check(CLI::ExistingFile);
        }
        return sub;
    };
    auto* rates = add("rates", "Steady-state QP tunneling rates over a grid", false);
    auto* simulate = add("simulate", "Simulate readout traces", false);
    simulate->add_flag("--truth", opts.truth, "Record hidden-state columns");
    auto* detect = add("detect", "Detect bursts and build recovery curves", true);
    auto* hmm = add("hmm-rate", "Parity-switching rate from a hidden Markov model", true);
    auto* temps = add("fit-temps", "Fit a temperature sweep", true);
    auto* gap = add("fit-gap-thickness", "Fit gap versus film thickness", true);
    auto* debye = add("debye", "Chip temperature after an energy deposit", false);

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*rates) return cmd_rates(opts);
        if (*simulate) return cmd_simulate(opts);
        if (*detect) return cmd_detect(opts);
        if (*hmm) return cmd_hmm_rate(opts);
        if (*temps) return cmd_fit_temps(opts);
        if (*gap) return cmd_fit_gap_thickness(opts);
        if (*debye) return cmd_debye(opts);
    }
    catch (ParseError const& e)
    {
        return report_error("parse", e, 2, e.line());
    }
    catch (ConfigError const& e)
    {
        return report_error("config", e, 2);
    }
    catch (DomainError const& e)
    {
        return report_error("domain", e, 3);
    }
    catch (ConvergenceError const& e)
    {
        return report_error("convergence", e, 4);
    }
    catch (std::exception const& e)
    {
        return report_error("runtime", e, 1);
    }
    return 1;
}
