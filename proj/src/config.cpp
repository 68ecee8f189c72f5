#include "qpburst/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "qpburst/error.hpp"
#include "qpburst/units.hpp"

namespace qpburst
{
namespace
{
std::string trim(std::string const& s)
{
    auto const first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
    {
        return {};
    }
    auto const last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(std::string const& s)
{
    double v = 0;
    auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    {
        throw DomainError("expected a number, got '" + s + "'");
    }
    return v;
}

long long to_integer(std::string const& s)
{
    long long v = 0;
    auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    {
        throw DomainError("expected an integer, got '" + s + "'");
    }
    return v;
}

std::uint64_t to_unsigned(std::string const& s)
{
    std::uint64_t v = 0;
    auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    {
        throw DomainError("expected a non-negative integer, got '" + s + "'");
    }
    return v;
}

bool to_bool(std::string const& s)
{
    if (s == "true" || s == "yes" || s == "1" || s == "on")
    {
        return true;
    }
    if (s == "false" || s == "no" || s == "0" || s == "off")
    {
        return false;
    }
    throw DomainError("expected a boolean, got '" + s + "'");
}

std::vector<std::string> split(std::string const& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
    {
        out.push_back(trim(item));
    }
    return out;
}

std::vector<double> to_list(std::string const& s)
{
    std::vector<double> out;
    for (auto const& item : split(s, ','))
    {
        out.push_back(to_double(item));
    }
    return out;
}

// "t_min:t_max:n" expands to a linear grid, otherwise a plain list
std::vector<double> to_grid(std::string const& s)
{
    if (s.find(':') == std::string::npos)
    {
        return to_list(s);
    }
    auto const parts = split(s, ':');
    if (parts.size() != 3)
    {
        throw DomainError("grid must read min:max:count");
    }
    double const lo = to_double(parts[0]);
    double const hi = to_double(parts[1]);
    long long const n = to_integer(parts[2]);
    if (n < 1)
    {
        throw DomainError("grid count must be positive");
    }
    std::vector<double> out;
    for (long long i = 0; i < n; ++i)
    {
        out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1.0));
    }
    return out;
}

using Setter = std::function<void(std::string const&)>;

std::map<std::string, Setter> make_setters(RunConfig& c)
{
    auto& sim = c.simulation;
    auto& dev = sim.device;
    auto& st = sim.steady;
    auto& bp = sim.bursts;
    auto& meas = sim.measurement;
    auto& det = c.detection;
    auto& rec = c.recovery;
    auto num = [](double& target) {
        return [&target](std::string const& v) { target = to_double(v); };
    };
    auto flag = [](bool& target) {
        return [&target](std::string const& v) { target = to_bool(v); };
    };
    std::map<std::string, Setter> s;

    s["device.preset"] = [](std::string const&) {};
    s["device.name"] = [&dev](std::string const& v) { dev.name = v; };
    s["device.e_j"] = num(dev.e_j);
    s["device.e_c"] = num(dev.e_c);
    s["device.f_q"] = num(dev.f_q);
    s["device.f_12"] = [&dev](std::string const& v) { dev.f_12 = to_double(v); };
    s["device.delta"] = num(dev.delta);
    s["device.d_delta"] = num(dev.d_delta);
    s["device.v_l"] = num(dev.v_l);
    s["device.v_h"] = num(dev.v_h);
    s["device.nu_0"] = [&dev](std::string const& v) { dev.nu_0 = to_double(v); };

    s["bath.temperature"] = num(st.bath.temperature);
    s["bath.x_ne"] = num(st.bath.x_qp_ne);
    s["bath.mu"] = [&st](std::string const& v) { st.bath.mu = to_double(v); };

    s["steady.gamma0_ph"] = num(st.gamma0_ph);
    s["steady.gamma1_ph"] = num(st.gamma1_ph);
    s["steady.t1"] = num(st.t1);
    s["steady.leak_rate"] = num(st.leak_rate);

    s["bursts.arrival_rate"] = num(bp.arrival_rate);
    s["bursts.energy_min_ev"] = [&bp](std::string const& v) {
        bp.energy_min = to_double(v) * units::electron_volt;
    };
    s["bursts.energy_max_ev"] = [&bp](std::string const& v) {
        bp.energy_max = to_double(v) * units::electron_volt;
    };
    s["bursts.xqp_peak_per_joule"] = num(bp.xqp_peak_per_joule);
    s["bursts.tau_x"] = num(bp.tau_x);
    s["bursts.t_spike"] = num(bp.t_spike);
    s["bursts.tau_spike"] = num(bp.tau_spike);
    s["bursts.t_burst"] = num(bp.t_burst);
    s["bursts.tau_temp"] = num(bp.tau_temp);
    s["bursts.debye_prefactor"] = num(bp.chip.debye_prefactor);
    s["bursts.t_debye"] = num(bp.chip.t_debye);
    s["bursts.scheduled"] = [&sim](std::string const& v) {
        sim.scheduled_bursts.clear();
        for (auto const& item : split(v, ','))
        {
            auto const f = split(item, ':');
            if (f.size() < 2 || f.size() > 3)
            {
                throw DomainError("scheduled burst must read time:x_peak[:t_burst]");
            }
            ScheduledBurst b;
            b.time = to_double(f[0]);
            b.x_peak = to_double(f[1]);
            if (f.size() == 3)
            {
                b.t_burst = to_double(f[2]);
            }
            sim.scheduled_bursts.push_back(b);
        }
    };

    s["tls.arrival_rate"] = num(sim.tls.arrival_rate);
    s["tls.duration_mean"] = num(sim.tls.duration_mean);
    s["tls.rate_multiplier"] = num(sim.tls.rate_multiplier);
    s["tls.scheduled"] = [&sim](std::string const& v) {
        sim.scheduled_tls.clear();
        for (auto const& item : split(v, ','))
        {
            auto const f = split(item, ':');
            if (f.size() != 2)
            {
                throw DomainError("scheduled TLS must read start:duration");
            }
            sim.scheduled_tls.push_back({to_double(f[0]), to_double(f[1])});
        }
    };

    s["measurement.dt"] = num(meas.dt);
    s["measurement.level_confusion"] = [&meas](std::string const& v) {
        auto const vals = to_list(v);
        if (vals.size() != 9)
        {
            throw DomainError("level_confusion needs nine entries (row-major)");
        }
        for (int i = 0; i < 9; ++i)
        {
            meas.level_confusion[i / 3][i % 3] = vals[i];
        }
    };
    s["measurement.parity_readable"] = flag(meas.parity_readable);
    s["measurement.parity_error"] = num(meas.parity_error);
    s["measurement.unknown_prob"] = num(meas.unknown_prob);
    s["measurement.reset_policy"] = [&meas](std::string const& v) {
        if (v == "stabilize")
        {
            meas.reset_policy = ResetPolicy::stabilize_excited;
        }
        else if (v == "passive")
        {
            meas.reset_policy = ResetPolicy::passive;
        }
        else
        {
            throw DomainError("reset_policy must be 'stabilize' or 'passive'");
        }
    };

    s["simulation.duration"] = num(sim.duration);
    s["simulation.initial_level"] = [&sim](std::string const& v) {
        sim.initial_level = static_cast<int>(to_integer(v));
    };
    s["simulation.initial_parity"] = [&sim](std::string const& v) {
        if (v == "even" || v == "e")
        {
            sim.initial_parity = Parity::even;
        }
        else if (v == "odd" || v == "o")
        {
            sim.initial_parity = Parity::odd;
        }
        else
        {
            throw DomainError("initial_parity must be 'even' or 'odd'");
        }
    };
    s["simulation.record_truth"] = flag(sim.record_truth);
    s["simulation.discard_probability"] = num(sim.discard_probability);
    s["simulation.traces"] = [&c](std::string const& v) {
        c.traces = static_cast<std::size_t>(to_unsigned(v));
    };
    s["simulation.seed"] = [&c](std::string const& v) { c.seed = to_unsigned(v); };

    s["detection.window_samples"] = [&det](std::string const& v) {
        det.window_samples = static_cast<std::size_t>(to_unsigned(v));
    };
    s["detection.relax_threshold"] = [&det](std::string const& v) {
        if (v == "auto" || v == "auto-8-sigma")
        {
            det.relax_threshold.reset();
        }
        else
        {
            det.relax_threshold = static_cast<int>(to_integer(v));
        }
    };
    s["detection.auto_sigma"] = num(det.auto_sigma);
    s["detection.fallback_threshold"] = [&det](std::string const& v) {
        det.fallback_threshold = static_cast<int>(to_integer(v));
    };
    s["detection.line"] = [&det](std::string const& v) {
        auto const f = split(v, ',');
        if (f.size() == 1 && f[0] == "none")
        {
            det.parity_threshold_2d.reset();
        }
        else if (f.size() == 2 && f[0] == "vertical")
        {
            det.parity_threshold_2d = ThresholdLine::vertical(to_double(f[1]));
        }
        else if (f.size() == 2)
        {
            det.parity_threshold_2d
                = ThresholdLine::from_slope(to_double(f[0]), to_double(f[1]));
        }
        else
        {
            throw DomainError("line must read 'slope, intercept', "
                              "'vertical, x' or 'none'");
        }
    };
    s["detection.use_1d"] = flag(det.use_1d);
    s["detection.two_way_transitions"] = flag(det.two_way_transitions);
    s["detection.tls_min_span_windows"] = [&det](std::string const& v) {
        det.tls_min_span_windows = static_cast<int>(to_integer(v));
    };
    s["detection.tls_decay_test"] = flag(det.tls_decay_test);
    s["detection.tls_decay_time"] = num(det.tls_decay_time);
    s["detection.tls_sigma"] = num(det.tls_sigma);
    s["detection.onset_kernel"] = [&det](std::string const& v) {
        det.onset_kernel = static_cast<std::size_t>(to_unsigned(v));
    };
    s["detection.onset_search_windows"] = [&det](std::string const& v) {
        det.onset_search_windows = static_cast<int>(to_integer(v));
    };
    s["detection.onset_signal"] = [&det](std::string const& v) {
        if (v == "auto")
        {
            det.onset_signal = OnsetSignal::automatic;
        }
        else if (v == "ground")
        {
            det.onset_signal = OnsetSignal::ground;
        }
        else if (v == "excited")
        {
            det.onset_signal = OnsetSignal::excited;
        }
        else if (v == "parity")
        {
            det.onset_signal = OnsetSignal::parity;
        }
        else
        {
            throw DomainError(
                "onset_signal must be auto, ground, excited or parity");
        }
    };

    s["recovery.bin_width"] = num(rec.bin_width);
    s["recovery.t_before"] = num(rec.t_before);
    s["recovery.t_after"] = num(rec.t_after);
    s["recovery.gamma10_steady"] = [&rec](std::string const& v) {
        rec.gamma10_steady = to_double(v);
    };
    s["recovery.gamma01_steady"] = [&rec](std::string const& v) {
        rec.gamma01_steady = to_double(v);
    };
    s["recovery.thermometry"] = flag(c.thermometry);
    s["recovery.fit_start"] = num(c.recovery_fit_start);
    s["recovery.fit_end"] = [&c](std::string const& v) {
        c.recovery_fit_end = to_double(v);
    };

    s["hmm.switch_rate"] = num(c.hmm_init.switch_rate);
    s["hmm.assign_error"] = num(c.hmm_init.assign_error);

    s["fit.x_ne"] = num(c.fit_init.x_ne);
    s["fit.delta"] = num(c.fit_init.delta);
    s["fit.d_delta"] = num(c.fit_init.d_delta);
    s["fit.gamma0_ph"] = num(c.fit_init.gamma0_ph);
    s["fit.gamma1_ph"] = num(c.fit_init.gamma1_ph);
    s["fit.tie_photon_rates"] = flag(c.fit_options.tie_photon_rates);
    s["fit.log_residuals"] = [&c](std::string const& v) {
        c.fit_options.log_residuals = v == "auto" ? 0 : (to_bool(v) ? 1 : -1);
    };
    s["fit.d_delta_starts"] = [&c](std::string const& v) {
        c.fit_options.d_delta_starts = to_list(v);
    };
    s["fit.max_iterations"] = [&c](std::string const& v) {
        c.fit_options.max_iterations = static_cast<int>(to_integer(v));
    };

    s["rates.temperatures"] = [&c](std::string const& v) {
        c.temperatures = to_grid(v);
    };

    s["debye.prefactor"] = num(c.chip.debye_prefactor);
    s["debye.t_debye"] = num(c.chip.t_debye);
    s["debye.base_temperature"] = num(c.chip.base_temperature);
    s["debye.energies_ev"] = [&c](std::string const& v) {
        c.deposit_energies_ev = to_list(v);
    };
    return s;
}

}  // namespace

//---------------------------------------------------------------------------//
IniDocument parse_ini(std::istream& is)
{
    IniDocument doc;
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(is, raw))
    {
        ++line_no;
        auto const comment = raw.find_first_of("#;");
        std::string const line
            = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
        if (line.empty())
        {
            continue;
        }
        if (line.front() == '[')
        {
            if (line.back() != ']' || line.size() < 3)
            {
                throw ParseError("malformed section header", line_no);
            }
            section = trim(line.substr(1, line.size() - 2));
            doc[section];
            continue;
        }
        auto const eq = line.find('=');
        if (eq == std::string::npos)
        {
            throw ParseError("expected 'key = value'", line_no);
        }
        if (section.empty())
        {
            throw ParseError("key outside any section", line_no);
        }
        std::string const key = trim(line.substr(0, eq));
        std::string const value = trim(line.substr(eq + 1));
        if (key.empty())
        {
            throw ParseError("empty key", line_no);
        }
        auto& keys = doc[section];
        if (keys.count(key))
        {
            throw ParseError("duplicate key '" + key + "' in [" + section + "]",
                             line_no);
        }
        keys[key] = {value, line_no};
    }
    return doc;
}

void apply_preset(DevicePreset const& preset, RunConfig& config)
{
    auto& sim = config.simulation;
    sim.device = preset.device;
    sim.steady.bath.x_qp_ne = preset.x_ne;
    sim.steady.gamma0_ph = preset.gamma0_ph;
    sim.steady.gamma1_ph = preset.gamma1_ph;
    sim.steady.t1 = preset.t1;
    config.fit_init.x_ne = preset.x_ne;
    config.fit_init.delta = preset.device.delta;
    config.fit_init.d_delta = preset.device.d_delta;
    config.fit_init.gamma0_ph = preset.gamma0_ph;
    config.fit_init.gamma1_ph = preset.gamma1_ph;
    config.fit_options.tie_photon_rates = preset.tied_photon_rates;
}

RunConfig load_config(std::istream& is)
{
    IniDocument const doc = parse_ini(is);
    RunConfig config;
    if (auto sec = doc.find("device"); sec != doc.end())
    {
        if (auto it = sec->second.find("preset"); it != sec->second.end())
        {
            try
            {
                apply_preset(find_preset(it->second.value), config);
            }
            catch (Error const& e)
            {
                throw ParseError(std::string("[device] preset: ") + e.what(),
                                 it->second.line);
            }
        }
    }
    auto setters = make_setters(config);
    for (auto const& [section, keys] : doc)
    {
        for (auto const& [key, entry] : keys)
        {
            auto const it = setters.find(section + "." + key);
            if (it == setters.end())
            {
                throw ParseError("unknown key '" + key + "' in [" + section
                                     + "]",
                                 entry.line);
            }
            try
            {
                it->second(entry.value);
            }
            catch (Error const& e)
            {
                throw ParseError("[" + section + "] " + key + ": " + e.what(),
                                 entry.line);
            }
        }
    }
    return config;
}

RunConfig load_config_file(std::filesystem::path const& path)
{
    std::ifstream is(path);
    if (!is)
    {
        throw ParseError("cannot open config file '" + path.string() + "'");
    }
    return load_config(is);
}

}  // namespace qpburst
