#include "qpburst/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpburst/error.hpp"
#include "qpburst/random.hpp"

namespace qpburst
{
namespace
{
constexpr std::uint64_t never = std::numeric_limits<std::uint64_t>::max() / 2;
constexpr std::size_t table_size = 2048;
// Rates drop to the steady state after this many slowest decay times
constexpr double active_decay_times = 12.0;
// Truth flag marks this many density decay times after onset
constexpr double truth_decay_times = 5.0;
// Safety factor on the endpoint bound used for thinning
constexpr double thinning_margin = 1.05;

enum Stream : std::uint64_t
{
    schedule_stream = 1,
    dynamics_stream = 2,
    discard_stream = 3
};

double burst_temperature(SimulationConfig const& config, double energy,
                         double override_temp)
{
    if (override_temp > 0)
    {
        return override_temp;
    }
    if (config.bursts.t_burst > 0)
    {
        return config.bursts.t_burst;
    }
    ChipThermalModel chip = config.bursts.chip;
    chip.base_temperature = config.steady.bath.temperature;
    return debye_temperature(std::max(energy, 1e-30), chip);
}

double active_span(BurstProcess const& b)
{
    return active_decay_times * std::max({b.tau_x, b.tau_temp, b.tau_spike});
}

}  // namespace

//---------------------------------------------------------------------------//
void validate(SimulationConfig const& config)
{
    validate(config.device);
    validate(config.steady.bath, config.device);
    auto const& s = config.steady;
    if (!(s.t1 > 0) || !(s.gamma0_ph >= 0) || !(s.gamma1_ph >= 0)
        || !(s.leak_rate >= 0))
    {
        throw ConfigError("steady state: t1 > 0 and non-negative rates "
                          "required");
    }
    auto const& b = config.bursts;
    if (!(b.arrival_rate >= 0) || !(b.tau_x > 0) || !(b.tau_spike > 0)
        || !(b.tau_temp > 0) || !(b.tau_spike < b.tau_temp))
    {
        throw ConfigError("bursts: need arrival_rate >= 0, positive time "
                          "constants and tau_spike < tau_temp");
    }
    if (!(b.energy_min > 0) || !(b.energy_max >= b.energy_min)
        || !(b.xqp_peak_per_joule >= 0) || !(b.t_spike > 0))
    {
        throw ConfigError("bursts: invalid energy range, coefficient or "
                          "spike temperature");
    }
    auto const& tls = config.tls;
    if (!(tls.arrival_rate >= 0) || !(tls.duration_mean > 0)
        || !(tls.rate_multiplier > 0))
    {
        throw ConfigError("tls: rates and duration must be positive");
    }
    auto const& m = config.measurement;
    if (!(m.dt > 0))
    {
        throw ConfigError("measurement: dt must be positive");
    }
    for (auto const& row : m.level_confusion)
    {
        double sum = 0;
        for (double p : row)
        {
            if (!(p >= 0))
            {
                throw ConfigError("measurement: negative confusion entry");
            }
            sum += p;
        }
        if (std::fabs(sum - 1) > 1e-12)
        {
            throw ConfigError("measurement: confusion rows must sum to 1");
        }
    }
    if (!(m.parity_error >= 0 && m.parity_error < 0.5)
        || !(m.unknown_prob >= 0 && m.unknown_prob < 1))
    {
        throw ConfigError("measurement: parity_error in [0, 0.5) and "
                          "unknown_prob in [0, 1) required");
    }
    if (!(config.duration > 0))
    {
        throw ConfigError("duration must be positive");
    }
    if (sample_count(config.duration, m.dt) > 100'000'000)
    {
        throw ConfigError("trace longer than 1e8 samples");
    }
    if (config.initial_level > 2)
    {
        throw ConfigError("initial level must be 0, 1 or 2");
    }
    if (config.initial_parity == Parity::unknown)
    {
        throw ConfigError("initial parity must be even or odd");
    }
    if (!(config.discard_probability >= 0 && config.discard_probability <= 1))
    {
        throw ConfigError("discard probability must lie in [0, 1]");
    }
}

std::size_t sample_count(double duration, double dt)
{
    // Guard against 90/5.7e-6 style quotients landing just below an integer
    double const q = duration / dt;
    double const r = std::nearbyint(q);
    if (std::fabs(q - r) <= 1e-9 * std::max(1.0, r))
    {
        return static_cast<std::size_t>(r);
    }
    return static_cast<std::size_t>(std::floor(q));
}

//---------------------------------------------------------------------------//
RateModel::RateModel(SimulationConfig const& config) : config_(config)
{
    validate(config_);
    auto const& dev = config_.device;
    double const ts = config_.steady.bath.temperature;
    double const x_steady = xqp_low_film(ts, dev, config_.steady.bath.x_qp_ne);

    TunnelRates unit;
    try
    {
        unit = unit_tunnel_rates(ts, dev);
    }
    catch (SingularInputError const& e)
    {
        throw ConfigError(std::string("device sits on a tunneling "
                                      "resonance: ")
                          + e.what());
    }
    steady_qp_relax_ = x_steady * unit(1, 0);
    nonqp_relax_ = 1 / config_.steady.t1 - steady_qp_relax_;
    if (nonqp_relax_ < 0)
    {
        throw ConfigError("steady T1 is shorter than the QP relaxation time "
                          "alone");
    }
    BathSnapshot const steady_bath{ts, 0, x_steady};
    fill_with(unit, steady_bath, false, steady_);
    fill_with(unit, steady_bath, true, steady_tls_);

    // Interpolation table spanning every temperature a burst can reach
    auto const& b = config_.bursts;
    double t_hi = std::max({ts, b.t_spike, b.t_burst});
    if (b.t_burst <= 0 && (b.arrival_rate > 0 || !config_.scheduled_bursts.empty()))
    {
        t_hi = std::max(t_hi, burst_temperature(config_, b.energy_max, -1));
    }
    for (auto const& sb : config_.scheduled_bursts)
    {
        t_hi = std::max(t_hi, sb.t_burst);
    }
    t_hi *= 1.05;
    double const t_lo = 0.95 * ts;
    double const beta_max = 1 / t_lo;
    beta_min_ = 1 / t_hi;
    beta_step_ = (beta_max - beta_min_) / (table_size - 1);
    table_.resize(table_size);
    for (std::size_t n = 0; n < table_size; ++n)
    {
        double const t = 1 / (beta_min_ + beta_step_ * n);
        TunnelRates const u = unit_tunnel_rates(t, dev);
        for (int i = 0; i < 3; ++i)
        {
            for (int j = 0; j < 3; ++j)
            {
                double const g = u(i, j);
                table_[n][3 * i + j] = g > 0 ? std::log(g) : -1e300;
            }
        }
    }
}

TunnelRates RateModel::unit_rates(double temperature) const
{
    double const pos = (1 / temperature - beta_min_) / beta_step_;
    if (!(pos >= 0) || pos > table_size - 1)
    {
        return unit_tunnel_rates(temperature, config_.device);
    }
    std::size_t const n = std::min<std::size_t>(static_cast<std::size_t>(pos),
                                                table_size - 2);
    double const w = pos - n;
    TunnelRates r;
    for (int i = 0; i < 3; ++i)
    {
        for (int j = 0; j < 3; ++j)
        {
            int const idx = 3 * i + j;
            double const lg = (1 - w) * table_[n][idx] + w * table_[n + 1][idx];
            r.rate[i][j] = lg < -700 ? 0.0 : std::exp(lg);
        }
    }
    r.gamma0_qp = r.rate[0][0] + r.rate[0][1];
    r.gamma1_qp = r.rate[1][0] + r.rate[1][1] + r.rate[1][2];
    return r;
}

BathSnapshot
RateModel::bath_at(double t, std::span<InjectedBurst const> active) const
{
    auto const& b = config_.bursts;
    double const ts = config_.steady.bath.temperature;
    BathSnapshot s;
    s.temperature = ts;
    for (auto const& burst : active)
    {
        double const age = t - burst.time;
        if (age < 0)
        {
            continue;
        }
        s.temperature += (burst.t_burst - ts) * std::exp(-age / b.tau_temp)
                         + (b.t_spike - burst.t_burst)
                               * std::exp(-age / b.tau_spike);
        s.x_burst += burst.x_peak * std::exp(-age / b.tau_x);
    }
    s.temperature = std::max(s.temperature, 1e-6);
    s.x_low = xqp_low_film(s.temperature, config_.device,
                           config_.steady.bath.x_qp_ne)
              + s.x_burst;
    return s;
}

void RateModel::fill(BathSnapshot const& bath, bool tls_active,
                     RateMatrix& out) const
{
    fill_with(unit_rates(bath.temperature), bath, tls_active, out);
}

void RateModel::fill_with(TunnelRates const& unit, BathSnapshot const& bath,
                          bool tls_active, RateMatrix& out) const
{
    auto const& st = config_.steady;
    double const kt = units::thermal_energy(bath.temperature);
    double const relax = nonqp_relax_
                         * (tls_active ? config_.tls.rate_multiplier : 1.0);
    double const excite = relax * std::exp(-config_.device.f_q / kt);
    for (auto& row : out.rate)
    {
        row.fill(0);
    }
    for (int i = 0; i < 3; ++i)
    {
        double const photon = i == 0 ? st.gamma0_ph : st.gamma1_ph;
        for (int p = 0; p < 2; ++p)
        {
            auto& row = out.rate[2 * i + p];
            for (int j = std::max(0, i - 1); j <= std::min(2, i + 1); ++j)
            {
                row[2 * j + (1 - p)] += bath.x_low * unit(i, j);
            }
            row[2 * i + (1 - p)] += photon;
        }
    }
    for (int p = 0; p < 2; ++p)
    {
        out.rate[2 + p][p] += relax;
        out.rate[p][2 + p] += excite;
        out.rate[2 + p][4 + p] += st.leak_rate;
        out.rate[4 + p][2 + p] += 2 / st.t1;
    }
}

RateMatrix RateModel::instantaneous_rates(double t,
                                          std::span<InjectedBurst const> active,
                                          bool tls_active) const
{
    RateMatrix out;
    if (active.empty())
    {
        return steady_rates(tls_active);
    }
    fill(bath_at(t, active), tls_active, out);
    return out;
}

//---------------------------------------------------------------------------//
namespace
{
//! Tabulated exit rates for sampling destinations quickly.
struct ExitTable
{
    std::array<double, n_joint_states> total{};
    std::array<std::array<double, n_joint_states>, n_joint_states> rate{};

    void assign(RateMatrix const& m)
    {
        rate = m.rate;
        for (int s = 0; s < n_joint_states; ++s)
        {
            total[s] = m.total_out(s);
        }
    }
};

class Engine
{
  public:
    Engine(SimulationConfig const& config, RateModel const& model,
           std::uint64_t seed, Trace& out)
        : config_(config)
        , model_(model)
        , rng_(derive_seed(seed, dynamics_stream))
        , out_(out)
        , dt_(config.measurement.dt)
        , stabilize_(config.measurement.reset_policy
                     == ResetPolicy::stabilize_excited)
        , readable_(config.measurement.parity_readable)
    {
        auto const& m = config.measurement;
        for (int l = 0; l < 3; ++l)
        {
            misread_prob_[l] = 1 - m.level_confusion[l][l];
        }
        parity_anomaly_ = m.unknown_prob + (1 - m.unknown_prob) * m.parity_error;
        unknown_share_ = parity_anomaly_ > 0 ? m.unknown_prob / parity_anomaly_
                                             : 0;
        level_ = config.initial_level >= 0 ? config.initial_level
                                           : (stabilize_ ? 1 : 0);
        parity_ = static_cast<int>(config.initial_parity);
        next_parity_anomaly_ = readable_ ? rng_.geometric(parity_anomaly_)
                                         : never;
        truth_span_ = truth_decay_times * config.bursts.tau_x;
    }

    void run(SimulationTruth const& truth)
    {
        std::size_t const n = out_.size();
        std::uint64_t const span = static_cast<std::uint64_t>(
            std::ceil(active_span(config_.bursts) / dt_));

        std::vector<std::uint64_t> cuts{0, n};
        for (auto const& b : truth.bursts)
        {
            cuts.push_back(b.onset_sample);
            cuts.push_back(std::min<std::uint64_t>(n, b.onset_sample + span));
        }
        for (auto const& e : truth.tls)
        {
            cuts.push_back(e.start_sample);
            cuts.push_back(e.end_sample);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

        std::vector<InjectedBurst> active;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
        {
            std::uint64_t const a = cuts[c];
            std::uint64_t const b = cuts[c + 1];
            if (a >= n)
            {
                break;
            }
            bool tls = false;
            for (auto const& e : truth.tls)
            {
                tls = tls || (e.start_sample <= a && a < e.end_sample);
            }
            active.clear();
            for (auto const& burst : truth.bursts)
            {
                if (burst.onset_sample <= a && a < burst.onset_sample + span)
                {
                    active.push_back(burst);
                }
            }
            if (active.empty())
            {
                run_constant(a, b, tls);
            }
            else
            {
                run_active(a, b, active, tls);
            }
        }
    }

  private:
    SimulationConfig const& config_;
    RateModel const& model_;
    Rng rng_;
    Trace& out_;
    double dt_;
    bool stabilize_;
    bool readable_;

    std::array<double, 3> misread_prob_{};
    double parity_anomaly_{0};
    double unknown_share_{0};
    double truth_span_{0};

    int level_{1};
    int parity_{0};
    int misread_level_{-1};
    std::uint64_t next_misread_{0};
    std::uint64_t next_parity_anomaly_{never};

    int state() const { return 2 * level_ + parity_; }

    void jump(std::array<double, n_joint_states> const& row, double total)
    {
        double target = rng_.uniform() * total;
        int dest = n_joint_states - 1;
        for (int s = 0; s < n_joint_states; ++s)
        {
            target -= row[s];
            if (target < 0 && row[s] > 0)
            {
                dest = s;
                break;
            }
        }
        level_ = dest / 2;
        parity_ = dest % 2;
    }

    void sync_misread(std::uint64_t k)
    {
        if (level_ != misread_level_ || next_misread_ < k)
        {
            misread_level_ = level_;
            std::uint64_t const g = rng_.geometric(misread_prob_[level_]);
            next_misread_ = g >= never ? never : k + g;
        }
    }

    //! Record readout k; returns true if a pi pulse changed the state
    bool readout(std::uint64_t k, bool in_burst)
    {
        sync_misread(k);
        int reported = level_;
        if (next_misread_ == k)
        {
            auto const& row = config_.measurement.level_confusion[level_];
            double target = rng_.uniform() * misread_prob_[level_];
            for (int l = 0; l < 3; ++l)
            {
                if (l == level_)
                {
                    continue;
                }
                reported = l;
                target -= row[l];
                if (target < 0)
                {
                    break;
                }
            }
            std::uint64_t const g = rng_.geometric(misread_prob_[level_]);
            next_misread_ = g >= never ? never : k + 1 + g;
        }
        std::uint8_t par = static_cast<std::uint8_t>(Parity::unknown);
        if (readable_)
        {
            par = static_cast<std::uint8_t>(parity_);
            if (next_parity_anomaly_ == k)
            {
                par = rng_.uniform() < unknown_share_
                          ? static_cast<std::uint8_t>(Parity::unknown)
                          : static_cast<std::uint8_t>(1 - parity_);
                std::uint64_t const g = rng_.geometric(parity_anomaly_);
                next_parity_anomaly_ = g >= never ? never : k + 1 + g;
            }
        }
        out_.level[k] = static_cast<std::uint8_t>(reported);
        out_.parity[k] = par;
        out_.reset[k] = 0;
        if (out_.has_truth)
        {
            out_.true_level[k] = static_cast<std::uint8_t>(level_);
            out_.true_parity[k] = static_cast<std::uint8_t>(parity_);
            out_.in_burst[k] = in_burst ? 1 : 0;
        }
        if (stabilize_ && reported == 0)
        {
            out_.reset[k] = 1;
            if (level_ < 2)
            {
                level_ = 1 - level_;
                return true;
            }
        }
        return false;
    }

    //! Readouts k..j-1 with no event, misread, anomaly or pulse
    void fill_quiet(std::uint64_t k, std::uint64_t j)
    {
        if (j <= k)
        {
            return;
        }
        auto fill = [k, j](std::vector<std::uint8_t>& v, int value) {
            std::fill(v.begin() + k, v.begin() + j,
                      static_cast<std::uint8_t>(value));
        };
        fill(out_.level, level_);
        fill(out_.parity, readable_ ? parity_
                                    : static_cast<int>(Parity::unknown));
        fill(out_.reset, 0);
        if (out_.has_truth)
        {
            fill(out_.true_level, level_);
            fill(out_.true_parity, parity_);
            fill(out_.in_burst, 0);
        }
    }

    void run_constant(std::uint64_t a, std::uint64_t b, bool tls)
    {
        ExitTable exits;
        exits.assign(model_.steady_rates(tls));
        double const t_stop = b * dt_;
        double t_evt = a * dt_ + rng_.exponential(exits.total[state()]);
        std::uint64_t k = a;
        while (k < b)
        {
            sync_misread(k);
            std::uint64_t j = b;
            if (t_evt < t_stop)
            {
                j = std::max(k, static_cast<std::uint64_t>(t_evt / dt_));
            }
            j = std::min({j, next_misread_, next_parity_anomaly_});
            if (stabilize_ && level_ == 0)
            {
                j = k;
            }
            fill_quiet(k, j);
            k = j;
            if (k >= b)
            {
                break;
            }
            double const t_end = (k + 1) * dt_;
            while (t_evt <= t_end)
            {
                int const s = state();
                jump(exits.rate[s], exits.total[s]);
                t_evt += rng_.exponential(exits.total[state()]);
            }
            if (readout(k, false))
            {
                t_evt = t_end + rng_.exponential(exits.total[state()]);
            }
            ++k;
        }
    }

    void run_active(std::uint64_t a, std::uint64_t b,
                    std::vector<InjectedBurst> const& active, bool tls)
    {
        std::span<InjectedBurst const> const bursts(active);
        RateMatrix start;
        RateMatrix end;
        RateMatrix now;
        model_.fill(model_.bath_at(a * dt_, bursts), tls, start);
        for (std::uint64_t k = a; k < b; ++k)
        {
            double const t0 = k * dt_;
            double const t1 = t0 + dt_;
            model_.fill(model_.bath_at(t1, bursts), tls, end);
            double t = t0;
            while (true)
            {
                int const s = state();
                double const bound = thinning_margin
                                     * std::max(start.total_out(s),
                                                end.total_out(s));
                t += rng_.exponential(bound);
                if (t >= t1)
                {
                    break;
                }
                model_.fill(model_.bath_at(t, bursts), tls, now);
                double const total = now.total_out(s);
                if (rng_.uniform() * bound < total)
                {
                    jump(now.rate[s], total);
                }
            }
            bool in_burst = false;
            for (auto const& burst : active)
            {
                double const age = t1 - burst.time;
                in_burst = in_burst || (age >= 0 && age < truth_span_);
            }
            readout(k, in_burst);
            std::swap(start, end);
        }
    }
};

SimulationTruth draw_schedule(SimulationConfig const& config,
                              std::uint64_t seed, std::size_t n)
{
    SimulationTruth truth;
    Rng rng(derive_seed(seed, schedule_stream));
    double const dt = config.measurement.dt;
    auto const& bp = config.bursts;

    auto onset_of = [dt](double time) {
        return static_cast<std::uint64_t>(std::ceil(time / dt - 1e-9));
    };

    double const burst_rate = bp.arrival_rate / units::minute;
    double t = rng.exponential(burst_rate);
    while (t < config.duration)
    {
        double const u = rng.uniform();
        double const energy = bp.energy_min
                              * std::pow(bp.energy_max / bp.energy_min, u);
        InjectedBurst b;
        b.onset_sample = onset_of(t);
        b.time = b.onset_sample * dt;
        b.energy = energy;
        b.x_peak = bp.xqp_peak_per_joule * energy;
        b.t_burst = burst_temperature(config, energy, -1);
        truth.bursts.push_back(b);
        t += rng.exponential(burst_rate);
    }
    for (auto const& sb : config.scheduled_bursts)
    {
        InjectedBurst b;
        b.onset_sample = onset_of(sb.time);
        b.time = b.onset_sample * dt;
        b.x_peak = sb.x_peak;
        b.t_burst = burst_temperature(config, 0, sb.t_burst);
        truth.bursts.push_back(b);
    }
    std::erase_if(truth.bursts,
                  [n](InjectedBurst const& b) { return b.onset_sample >= n; });
    std::sort(truth.bursts.begin(), truth.bursts.end(),
              [](InjectedBurst const& l, InjectedBurst const& r) {
                  return l.onset_sample < r.onset_sample;
              });

    auto add_tls = [&](double start, double duration) {
        InjectedTls e;
        e.start_sample = std::min<std::uint64_t>(n, onset_of(start));
        e.end_sample = std::min<std::uint64_t>(n, onset_of(start + duration));
        if (e.end_sample > e.start_sample)
        {
            truth.tls.push_back(e);
        }
    };
    double const tls_rate = config.tls.arrival_rate / units::minute;
    t = rng.exponential(tls_rate);
    while (t < config.duration)
    {
        add_tls(t, rng.exponential(1 / config.tls.duration_mean));
        t += rng.exponential(tls_rate);
    }
    for (auto const& st : config.scheduled_tls)
    {
        add_tls(st.start, st.duration);
    }
    std::sort(truth.tls.begin(), truth.tls.end(),
              [](InjectedTls const& l, InjectedTls const& r) {
                  return l.start_sample < r.start_sample;
              });

    Rng discard_rng(derive_seed(seed, discard_stream));
    truth.discard = discard_rng.uniform() < config.discard_probability;
    return truth;
}

}  // namespace

//---------------------------------------------------------------------------//
SimulationTruth simulate_trace_into(SimulationConfig const& config,
                                    RateModel const& model,
                                    std::uint64_t seed, Trace& out)
{
    validate(config);
    std::size_t const n = sample_count(config.duration, config.measurement.dt);
    out.dt = config.measurement.dt;
    out.resize(n, config.record_truth);
    SimulationTruth truth = draw_schedule(config, seed, n);
    out.discard = truth.discard;
    Engine engine(config, model, seed, out);
    engine.run(truth);
    return truth;
}

SimulationTruth simulate_trace_into(SimulationConfig const& config,
                                    std::uint64_t seed, Trace& out)
{
    RateModel const model(config);
    return simulate_trace_into(config, model, seed, out);
}

Trace simulate_trace(SimulationConfig const& config, std::uint64_t seed,
                     SimulationTruth* truth)
{
    Trace out;
    SimulationTruth t = simulate_trace_into(config, seed, out);
    if (truth)
    {
        *truth = std::move(t);
    }
    return out;
}

double peak_coefficient_for_rate(DeviceParams const& dev, double temperature,
                                 double gamma10, double energy)
{
    if (!(gamma10 > 0) || !(energy > 0))
    {
        throw DomainError("target rate and energy must be positive");
    }
    TunnelRates const unit = unit_tunnel_rates(temperature, dev);
    return gamma10 / unit(1, 0) / energy;
}

}  // namespace qpburst
