// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qpburst/burst_analysis.hpp"
#include "qpburst/debye.hpp"
#include "qpburst/device.hpp"
#include "qpburst/error.hpp"
#include "qpburst/model_fitting.hpp"
#include "qpburst/parity_hmm.hpp"
#include "qpburst/random.hpp"
#include "qpburst/simulator.hpp"
#include "qpburst/tunneling.hpp"
#include "qpburst/units.hpp"

using namespace qpburst;

namespace
{
struct Outcome
{
    bool pass{false};
    std::string detail;
};

std::string fmt(char const* f, auto... args)
{
    char buf[1024];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel(double a, double b)
{
    return std::abs(a - b) / std::abs(b);
}

//---------------------------------------------------------------------------//
// Random draws shared by the structure-factor and detailed-balance checks
struct Draw
{
    DeviceParams dev;
    QPBath bath;
};

std::vector<Draw> parameter_draws()
{
    std::mt19937_64 gen(20240611);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Draw> draws;
    for (int i = 0; i < 100; ++i)
    {
        Draw d;
        d.dev.name = "draw";
        d.dev.e_c = 0.15 + 0.15 * u(gen);
        d.dev.e_j = 10 + 15 * u(gen);
        d.dev.f_q = std::sqrt(8 * d.dev.e_j * d.dev.e_c) - d.dev.e_c;
        d.dev.delta = 45 + 25 * u(gen);
        d.dev.d_delta = 0.3 * d.dev.delta * u(gen);
        d.dev.v_l = 1;
        d.dev.v_h = 0.5 + u(gen);
        double const kt = d.dev.delta * (0.005 + 0.045 * u(gen));
        d.bath.temperature = kt / units::kb_over_h;
        d.bath.x_qp_ne = std::pow(10.0, -9 + 3 * u(gen));
        draws.push_back(d);
    }
    return draws;
}

Outcome structure_factors()
{
    int worst_draw = -1;
    double worst_ratio = 0;
    int checked = 0;
    for (auto const& [dev, bath] : parameter_draws())
    {
        double const kt = units::thermal_energy(bath.temperature);
        for (double f : {dev.f_q, -dev.f_q, dev.f12(), 0.0})
        {
            double const tol = 2 * (dev.d_delta + std::abs(f) + kt)
                               / dev.delta_bar();
            for (Side side : {Side::low, Side::high})
            {
                for (Sign sign : {Sign::plus, Sign::minus})
                {
                    double const closed
                        = structure_factor_closed(side, sign, f, dev, bath);
                    double const exact = structure_factor_quadrature(
                        side, sign, f, dev, bath);
                    double const ratio = rel(closed, exact) / tol;
                    ++checked;
                    if (ratio > worst_ratio)
                    {
                        worst_ratio = ratio;
                        worst_draw = checked;
                    }
                }
            }
        }
    }
    return {worst_ratio <= 1,
            fmt("%d comparisons, worst error/tolerance %.3f (case %d)",
                checked, worst_ratio, worst_draw)};
}

Outcome detailed_balance()
{
    double worst = 0;
    for (auto const& [dev, bath] : parameter_draws())
    {
        double const g01 = qp_tunnel_rate(0, 1, dev, bath);
        double const g10 = qp_tunnel_rate(1, 0, dev, bath);
        double const boltz
            = std::exp(dev.f_q / units::thermal_energy(bath.temperature));
        worst = std::max(worst, rel(g01 * boltz, g10));
    }
    return {worst <= 1e-10, fmt("max relative deviation %.2e", worst)};
}

Outcome activation_factor()
{
    auto const p = find_preset("big");
    double const t = 0.025;
    double const factor = std::exp((p.device.d_delta - p.device.f_q)
                                   / units::thermal_energy(t));
    return {factor >= 5e3 && factor <= 2e4,
            fmt("exp((dDelta - h f_q)/kT) = %.0f at 25 mK", factor)};
}

Outcome debye_bracket()
{
    ChipThermalModel chip;
    chip.debye_prefactor = 0.23;
    chip.t_debye = 1000;
    double const lo = debye_temperature(100e3 * units::electron_volt, chip);
    double const hi = debye_temperature(1e6 * units::electron_volt, chip);
    bool const pass = rel(lo, 0.060) <= 0.10 && rel(hi, 0.100) <= 0.10;
    return {pass, fmt("100 keV -> %.1f mK, 1 MeV -> %.1f mK", lo * 1e3,
                      hi * 1e3)};
}

//---------------------------------------------------------------------------//
FitParams truth_of(DevicePreset const& p)
{
    return {p.x_ne, p.device.delta, p.device.d_delta, p.gamma0_ph,
            p.tied_photon_rates ? p.gamma0_ph : p.gamma1_ph};
}

std::vector<double> sweep_temperatures()
{
    std::vector<double> temps;
    for (int i = 0; i < 10; ++i)
    {
        temps.push_back(0.03 + 0.1 * i / 9.0);
    }
    return temps;
}

FitParams start_of(FitParams const& truth)
{
    FitParams init = truth;
    init.x_ne *= 3;
    init.delta *= 1.03;
    init.d_delta = 0;
    init.gamma0_ph *= 0.5;
    init.gamma1_ph *= 2;
    return init;
}

Outcome fit_round_trip()
{
    auto const temps = sweep_temperatures();
    double worst = 0;
    std::string noisy;
    bool pass = true;
    for (auto const& preset : all_presets())
    {
        FitParams const truth = truth_of(preset);
        SweepFitOptions options;
        options.tie_photon_rates = preset.tied_photon_rates;

        auto const clean
            = synthesize_sweep(preset.device, truth, temps, 0.0, 1);
        auto const fit = fit_temperature_sweep(clean, preset.device,
                                               start_of(truth), options);
        FitParams const& f = fit.params;
        for (auto [a, b] : {std::pair{f.x_ne, truth.x_ne},
                            {f.delta, truth.delta},
                            {f.gamma0_ph, truth.gamma0_ph},
                            {f.gamma1_ph, truth.gamma1_ph}})
        {
            worst = std::max(worst, rel(a, b));
        }
        // A vanishing gap difference is compared on the scale of the gap
        worst = std::max(worst, std::abs(f.d_delta - truth.d_delta)
                                    / std::max(truth.d_delta, truth.delta));

        int within = 0;
        double sq = 0;
        double sigma = 0;
        int fitted = 0;
        int const seeds = 50;
        for (int s = 0; s < seeds; ++s)
        {
            auto const data = synthesize_sweep(preset.device, truth, temps,
                                               0.10, derive_seed(5, 0, s));
            try
            {
                auto const r = fit_temperature_sweep(
                    data, preset.device, start_of(truth), options);
                double const err = r.params.d_delta - truth.d_delta;
                if (std::abs(err) <= preset.d_delta_err)
                {
                    ++within;
                }
                sq += err * err;
                sigma += r.sigma[fit_d_delta];
                ++fitted;
            }
            catch (Error const&)
            {
            }
        }
        pass = pass && within >= 40;
        noisy += fmt(" %s %d/50 (rms %.3f, mean fit sigma %.3f, quoted %.1f)",
                     preset.device.name.c_str(), within,
                     std::sqrt(sq / std::max(fitted, 1)),
                     sigma / std::max(fitted, 1), preset.d_delta_err);
    }
    pass = pass && worst <= 1e-6;
    return {pass, fmt("noiseless max relative error %.1e; noisy dDelta within "
                      "quoted uncertainty [GHz]:%s",
                      worst, noisy.c_str())};
}

//---------------------------------------------------------------------------//
SimulationConfig burst_config(DevicePreset const& p, double arrival_rate,
                              double gamma10_at_100kev)
{
    SimulationConfig c;
    c.device = p.device;
    c.steady.bath = {0.02, p.x_ne, std::nullopt};
    c.steady.gamma0_ph = p.gamma0_ph;
    c.steady.gamma1_ph = p.gamma1_ph;
    c.steady.t1 = p.t1;
    c.bursts.arrival_rate = arrival_rate;
    c.bursts.xqp_peak_per_joule = peak_coefficient_for_rate(
        p.device, 0.09, gamma10_at_100kev, 100e3 * units::electron_volt);
    c.duration = 90;
    c.discard_probability = 0.06;
    return c;
}

struct RateStudy
{
    int covered{0};
    int seeds{0};
    double mean_rate{0};
    std::optional<RecoveryCurve> recovery;
};

RateStudy rate_study(SimulationConfig const& config, int seeds,
                     int traces_per_seed, bool with_recovery)
{
    RateModel const model(config);
    DetectionConfig const detection;
    RecoveryOptions ro;
    ro.bin_width = 100e-6;
    ro.t_before = 1e-3;
    ro.t_after = 8e-3;
    ro.gamma10_steady = 1 / config.steady.t1;
    RecoveryAccumulator acc(config.measurement.dt, ro);

    RateStudy study;
    study.seeds = seeds;
    Trace trace;
    for (int s = 0; s < seeds; ++s)
    {
        std::uint64_t count = 0;
        double seconds = 0;
        for (int i = 0; i < traces_per_seed; ++i)
        {
            simulate_trace_into(config, model, derive_seed(6, s, i), trace);
            if (trace.discard)
            {
                continue;
            }
            auto const det = detect_events(trace, detection);
            seconds += trace.duration();
            for (auto const& e : det.events)
            {
                if (e.classification != EventClass::qp_burst)
                {
                    continue;
                }
                ++count;
                if (with_recovery)
                {
                    acc.add(trace, e.onset_index);
                }
            }
        }
        auto const r = burst_rate(count, seconds);
        study.mean_rate += r.rate / seeds;
        if (r.ci.lower <= config.bursts.arrival_rate
            && config.bursts.arrival_rate <= r.ci.upper)
        {
            ++study.covered;
        }
    }
    if (with_recovery)
    {
        study.recovery = acc.finish();
    }
    return study;
}

ExponentialFit fit_window(RecoveryCurve const& c,
                          std::vector<double> const& value,
                          std::vector<double> const& error, double t_lo,
                          double t_hi, std::optional<double> baseline)
{
    std::vector<double> t, y, e;
    for (std::size_t i = 0; i < c.size(); ++i)
    {
        if (c.time[i] > t_lo && c.time[i] < t_hi)
        {
            t.push_back(c.time[i]);
            y.push_back(value[i]);
            e.push_back(error[i]);
        }
    }
    return fit_exponential(t, y, e, baseline);
}

Outcome passive_thermometry()
{
    auto const p = find_preset("big");
    SimulationConfig c = burst_config(p, 10, 1e5);
    c.steady.bath.temperature = 0.05;
    c.measurement.reset_policy = ResetPolicy::passive;
    c.measurement.parity_readable = true;
    c.discard_probability = 0;
    RateModel const model(c);

    DetectionConfig dc;
    dc.use_1d = false;
    dc.two_way_transitions = true;
    dc.parity_threshold_2d = ThresholdLine::from_slope(0, 8);
    RecoveryOptions ro;
    ro.bin_width = 100e-6;
    ro.t_before = 2e-3;
    ro.t_after = 30e-3;
    ro.two_state_inversion = true;
    RecoveryAccumulator acc(c.measurement.dt, ro);

    Trace trace;
    for (int i = 0; i < 200; ++i)
    {
        simulate_trace_into(c, model, derive_seed(7, 0, i), trace);
        // The threshold is fixed: passive traces carry no 1D statistic
        auto const det = detect_events(trace, dc, ThresholdFit{35, 0, true});
        for (auto const& e : det.events)
        {
            acc.add(trace, e.onset_index);
        }
    }
    auto const curve = acc.finish(&c.device);
    auto const f = fit_window(curve, curve.t_q, curve.t_q_err, 0.3e-3, 30e-3,
                              std::nullopt);
    double const plateau = f.baseline + f.amplitude;
    bool const pass = rel(plateau, 0.090) <= 0.15 && rel(f.tau, 6.3e-3) <= 0.15;
    return {pass, fmt("T_q plateau %.1f mK, tau_temp %.2f ms (%zu events)",
                      plateau * 1e3, f.tau * 1e3, curve.n_events_averaged)};
}

Outcome burst_round_trip()
{
    int const seeds = 100;
    int const traces = 40;  // 40 x 90 s = 1 h per seed
    auto const small = rate_study(
        burst_config(find_preset("small"), 2.76, 3e5), seeds, traces, true);
    auto const big = rate_study(burst_config(find_preset("big"), 0.57, 1e5),
                                seeds, traces, false);

    auto const& curve = *small.recovery;
    auto const f = fit_window(curve, curve.d_gamma10, curve.d_gamma10_err,
                              3e-3, 8e-3, 0.0);
    auto const thermo = passive_thermometry();

    bool const pass = small.covered >= 95 && big.covered >= 95
                      && rel(f.tau, 0.7e-3) <= 0.10 && thermo.pass;
    return {pass,
            fmt("CI coverage small %d/100 (mean %.3f/min), big %d/100 (mean "
                "%.3f/min); dGamma10 tau %.3f ms; %s",
                small.covered, small.mean_rate, big.covered, big.mean_rate,
                f.tau * 1e3, thermo.detail.c_str())};
}

//---------------------------------------------------------------------------//
Outcome false_positives()
{
    std::size_t windows = 0;
    std::size_t flagged = 0;
    std::string detail;
    for (char const* name : {"small", "big"})
    {
        auto c = burst_config(find_preset(name), 0, 1e5);
        c.discard_probability = 0;
        c.duration = 60;
        RateModel const model(c);
        Trace trace;
        for (int i = 0; i < 2; ++i)
        {
            simulate_trace_into(c, model, derive_seed(8, 0, i), trace);
            auto const det = detect_events(trace, DetectionConfig{});
            windows += det.windows.size();
            flagged += det.events.size();
            if (i == 0)
            {
                detail += fmt(" %s threshold %d (mu %.2f)", name,
                              det.threshold.threshold, det.threshold.mu);
            }
        }
    }
    return {flagged == 0 && windows >= 200000,
            fmt("%zu flags over %zu burst-free windows;%s", flagged, windows,
                detail.c_str())};
}

Outcome hmm_calibration()
{
    HmmParams const truth{2.0, 0.05, 0};
    int covered = 0;
    for (int s = 0; s < 100; ++s)
    {
        auto const trace
            = synthesize_parity_trace(truth, 5e-3, 100000, derive_seed(9, 0, s));
        auto const r = fit_switch_rate(trace, {1.0, 0.1, 0});
        if (r.rate_ci95.first <= truth.switch_rate
            && truth.switch_rate <= r.rate_ci95.second)
        {
            ++covered;
        }
    }
    return {covered >= 90,
            fmt("true rate inside 95%% interval in %d/100 traces", covered)};
}

struct Criterion
{
    int number;
    char const* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv)
{
    std::vector<Criterion> const criteria{
        {1, "structure factors vs quadrature", 10, structure_factors},
        {2, "detailed balance", 10, detailed_balance},
        {3, "gap-engineering suppression", 1, activation_factor},
        {4, "Debye temperature bracket", 1, debye_bracket},
        {5, "temperature-sweep fit round trip", 300, fit_round_trip},
        {6, "burst pipeline round trip", 900, burst_round_trip},
        {7, "false-positive control", 120, false_positives},
        {8, "HMM rate calibration", 300, hmm_calibration},
    };
    int failures = 0;
    for (auto const& c : criteria)
    {
        // Optional arguments select criteria by number
        if (argc > 1
            && std::none_of(argv + 1, argv + argc, [&c](char const* a) {
                   return std::atoi(a) == c.number;
               }))
        {
            continue;
        }
        auto const start = std::chrono::steady_clock::now();
        Outcome out;
        try
        {
            out = c.run();
        }
        catch (std::exception const& e)
        {
            out = {false, std::string("exception: ") + e.what()};
        }
        double const elapsed = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - start)
                                   .count();
        bool const pass = out.pass && elapsed <= c.budget_seconds;
        failures += pass ? 0 : 1;
        std::printf("%s criterion %d (%s): %s [%.1f s of %.0f s]\n",
                    pass ? "PASS" : "FAIL", c.number, c.name,
                    out.detail.c_str(), elapsed, c.budget_seconds);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
