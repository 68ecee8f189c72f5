#include "qpburst/burst_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <nlohmann/json.hpp>

#include "qpburst/error.hpp"
#include "qpburst/least_squares.hpp"
#include "qpburst/thermometry.hpp"
#include "qpburst/trace_io.hpp"
#include "qpburst/units.hpp"

namespace qpburst
{
namespace
{
constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint8_t unknown_parity = static_cast<std::uint8_t>(Parity::unknown);

std::vector<Candidate> runs_of(std::vector<bool> const& flagged,
                               std::span<WindowCounts const> windows,
                               bool two_way)
{
    std::vector<Candidate> out;
    for (std::size_t w = 0; w < flagged.size(); ++w)
    {
        if (!flagged[w])
        {
            continue;
        }
        std::uint32_t const c = transition_count(windows[w], two_way);
        if (!out.empty() && out.back().last_window + 1 == w)
        {
            out.back().last_window = w;
            out.back().peak_count = std::max(out.back().peak_count, c);
        }
        else
        {
            out.push_back({w, w, c});
        }
    }
    return out;
}

struct Conversion
{
    double g10{nan};
    double g01{nan};
    double e10{nan};
    double e01{nan};
};

double binomial_rate_error(std::uint64_t count, std::uint64_t cond, double dt)
{
    // Laplace-smoothed probability keeps empty bins from getting zero error
    double const n = static_cast<double>(cond);
    double const p = (static_cast<double>(count) + 0.5) / (n + 1);
    return std::sqrt(p * (1 - p) / n) / ((1 - p) * dt);
}

Conversion convert(std::uint64_t c10, std::uint64_t n10, std::uint64_t c01,
                   std::uint64_t n01, double dt, bool two_state)
{
    Conversion out;
    if (n10 > 0)
    {
        out.e10 = binomial_rate_error(c10, n10, dt);
    }
    if (n01 > 0)
    {
        out.e01 = binomial_rate_error(c01, n01, dt);
    }
    if (!two_state)
    {
        if (n10 > 0)
        {
            out.g10 = rate_from_probability(
                static_cast<double>(c10) / static_cast<double>(n10), dt);
        }
        if (n01 > 0)
        {
            out.g01 = rate_from_probability(
                static_cast<double>(c01) / static_cast<double>(n01), dt);
        }
        return out;
    }
    if (n10 == 0 || n01 == 0)
    {
        return out;
    }
    // Two-level chain over one cycle: p10 + p01 = 1 - exp(-(G10 + G01) dt)
    double const p10 = static_cast<double>(c10) / static_cast<double>(n10);
    double const p01 = static_cast<double>(c01) / static_cast<double>(n01);
    double const sum = p10 + p01;
    if (sum == 0)
    {
        out.g10 = 0;
        out.g01 = 0;
        return out;
    }
    if (sum >= 1)
    {
        return out;
    }
    double const total = -std::log1p(-sum) / dt;
    out.g10 = total * p10 / sum;
    out.g01 = total * p01 / sum;
    return out;
}

}  // namespace

//---------------------------------------------------------------------------//
void validate(DetectionConfig const& config)
{
    if (config.window_samples < 10)
    {
        throw ConfigError("window_samples must be at least 10");
    }
    if (config.relax_threshold && *config.relax_threshold < 0)
    {
        throw ConfigError("relax_threshold must be non-negative");
    }
    if (!(config.auto_sigma > 0) || !(config.tls_sigma >= 0))
    {
        throw ConfigError("threshold sigmas must be positive");
    }
    if (config.tls_min_span_windows < 1 || !(config.tls_decay_time > 0))
    {
        throw ConfigError("TLS span and decay time must be positive");
    }
    if (config.onset_kernel < 1 || config.onset_search_windows < 0)
    {
        throw ConfigError("onset kernel must be positive");
    }
}

std::vector<WindowCounts>
count_windows(Trace const& trace, std::size_t window_samples)
{
    if (window_samples < 10)
    {
        throw DomainError("window_samples must be at least 10");
    }
    std::size_t const n_windows = trace.size() / window_samples;
    std::vector<WindowCounts> out(n_windows);
    std::uint8_t const* level = trace.level.data();
    std::uint8_t const* reset = trace.reset.data();
    std::uint8_t const* parity = trace.parity.data();
    std::uint8_t last_parity = unknown_parity;
    for (std::size_t w = 0; w < n_windows; ++w)
    {
        WindowCounts& c = out[w];
        c.window_index = w;
        std::size_t const begin = w * window_samples;
        std::size_t const end = begin + window_samples;
        std::uint32_t relax = 0;
        std::uint32_t excite = 0;
        std::uint32_t excited = 0;
        std::uint32_t unknown = 0;
        for (std::size_t k = std::max<std::size_t>(begin, 1); k < end; ++k)
        {
            unsigned const lv = level[k];
            unsigned const pl = level[k - 1];
            unsigned const rs = reset[k - 1] != 0;
            relax += (lv == 0) & ((pl == 1) | rs);
            excite += (lv == 1) & (pl == 0) & (rs ^ 1u);
        }
        for (std::size_t k = begin; k < end; ++k)
        {
            excited += level[k] == 1;
            unknown += parity[k] == unknown_parity;
        }
        c.n_relax = relax;
        c.n_excite = excite;
        c.n_excited = excited;

        std::uint32_t switches = 0;
        if (unknown == window_samples)
        {
            c.n_parity = 0;
            continue;
        }
        if (unknown == 0)
        {
            switches += last_parity != unknown_parity
                        && parity[begin] != last_parity;
            for (std::size_t k = begin + 1; k < end; ++k)
            {
                switches += parity[k] != parity[k - 1];
            }
            last_parity = parity[end - 1];
        }
        else
        {
            for (std::size_t k = begin; k < end; ++k)
            {
                std::uint8_t const p = parity[k];
                if (p != unknown_parity)
                {
                    switches += last_parity != unknown_parity
                                && p != last_parity;
                    last_parity = p;
                }
            }
        }
        c.n_parity = switches;
    }
    return out;
}

//---------------------------------------------------------------------------//
double fit_mode_mean(std::span<std::uint32_t const> counts)
{
    if (counts.empty())
    {
        return -1;
    }
    std::uint32_t const top = *std::max_element(counts.begin(), counts.end());
    std::vector<std::uint64_t> hist(top + 1, 0);
    for (auto c : counts)
    {
        ++hist[c];
    }
    std::size_t const mode
        = std::max_element(hist.begin(), hist.end()) - hist.begin();
    if (mode == 0)
    {
        return -1;
    }
    std::size_t const cut = std::min<std::size_t>(2 * mode, top);
    double n = 0;
    double sum_k = 0;
    for (std::size_t k = 0; k <= cut; ++k)
    {
        n += static_cast<double>(hist[k]);
        sum_k += static_cast<double>(k) * static_cast<double>(hist[k]);
    }
    double const kcut = static_cast<double>(cut);
    auto neg_log_l = [&](double mu) {
        double const norm = boost::math::gamma_q(kcut + 1, mu);
        return -(sum_k * std::log(mu) - n * mu - n * std::log(norm));
    };
    double const lo = 1e-3;
    double const hi = 3 * (kcut + 1);
    auto const [mu, value]
        = boost::math::tools::brent_find_minima(neg_log_l, lo, hi, 40);
    if (!std::isfinite(value) || mu < 1.001 * lo || mu > 0.999 * hi)
    {
        return -1;
    }
    return mu;
}

ThresholdFit auto_threshold(std::span<std::uint32_t const> counts,
                            double sigma, int fallback)
{
    ThresholdFit out;
    if (counts.size() < 1000)
    {
        std::clog << "warning: " << counts.size()
                  << " windows are too few for an automatic threshold; using "
                  << fallback << '\n';
        out.threshold = fallback;
        out.fallback = true;
        return out;
    }
    double const mu = fit_mode_mean(counts);
    if (!(mu > 0))
    {
        std::clog << "warning: Poisson mode fit failed; using threshold "
                  << fallback << '\n';
        out.threshold = fallback;
        out.fallback = true;
        return out;
    }
    out.mu = mu;
    out.threshold = static_cast<int>(std::lround(mu + sigma * std::sqrt(mu)));
    return out;
}

ThresholdFit resolve_threshold(std::span<WindowCounts const> windows,
                               DetectionConfig const& config)
{
    std::vector<std::uint32_t> counts;
    counts.reserve(windows.size());
    for (auto const& w : windows)
    {
        counts.push_back(transition_count(w, config.two_way_transitions));
    }
    if (!config.relax_threshold)
    {
        return auto_threshold(counts, config.auto_sigma,
                              config.fallback_threshold);
    }
    ThresholdFit out;
    out.threshold = *config.relax_threshold;
    out.mu = fit_mode_mean(counts);
    if (!(out.mu > 0) && !counts.empty())
    {
        std::vector<std::uint32_t> sorted = counts;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                         sorted.end());
        out.mu = sorted[sorted.size() / 2];
    }
    return out;
}

//---------------------------------------------------------------------------//
std::vector<Candidate> detect_candidates(std::span<WindowCounts const> windows,
                                         int threshold, bool two_way)
{
    std::vector<bool> flagged(windows.size());
    for (std::size_t w = 0; w < windows.size(); ++w)
    {
        flagged[w] = static_cast<int>(transition_count(windows[w], two_way))
                     > threshold;
    }
    return runs_of(flagged, windows, two_way);
}

std::vector<Candidate> detect_2d(std::span<WindowCounts const> windows,
                                 ThresholdLine const& line,
                                 bool parity_available, bool two_way)
{
    if (!parity_available)
    {
        throw DomainError("2-D detection needs parity labels");
    }
    std::vector<bool> flagged(windows.size());
    for (std::size_t w = 0; w < windows.size(); ++w)
    {
        flagged[w] = line.above(transition_count(windows[w], two_way),
                                windows[w].n_parity);
    }
    return runs_of(flagged, windows, two_way);
}

std::vector<Candidate> merge_candidates(std::span<Candidate const> a,
                                        std::span<Candidate const> b,
                                        std::span<WindowCounts const> windows,
                                        bool two_way)
{
    std::vector<bool> flagged(windows.size());
    for (auto set : {a, b})
    {
        for (auto const& c : set)
        {
            for (std::size_t w = c.first_window;
                 w <= c.last_window && w < windows.size();
                 ++w)
            {
                flagged[w] = true;
            }
        }
    }
    return runs_of(flagged, windows, two_way);
}

Onset locate_onset(Trace const& trace, Candidate const& candidate,
                   DetectionConfig const& config)
{
    std::size_t const n = trace.size();
    std::size_t const w = config.window_samples;
    std::size_t const kernel = config.onset_kernel;
    std::size_t const reach = static_cast<std::size_t>(config.onset_search_windows);
    std::size_t const start = candidate.first_window * w;
    if (start >= n)
    {
        throw DomainError("candidate lies outside the trace");
    }
    Onset fallback{start, true};
    if (n < 2 * kernel + 1)
    {
        return fallback;
    }
    std::size_t const lo = std::max(kernel, (candidate.first_window > reach
                                                 ? candidate.first_window - reach
                                                 : 0)
                                                * w);
    std::size_t const hi
        = std::min(n - kernel, (candidate.first_window + reach + 1) * w);
    if (lo >= hi)
    {
        return fallback;
    }

    OnsetSignal signal = config.onset_signal;
    if (signal == OnsetSignal::automatic)
    {
        auto const first = static_cast<std::ptrdiff_t>(lo - kernel);
        auto const last = static_cast<std::ptrdiff_t>(hi + kernel);
        if (std::any_of(trace.reset.begin() + first, trace.reset.begin() + last,
                        [](std::uint8_t r) { return r != 0; }))
        {
            signal = OnsetSignal::ground;
        }
        else if (std::any_of(trace.parity.begin() + first,
                             trace.parity.begin() + last, [](std::uint8_t q) {
                                 return q != static_cast<std::uint8_t>(Parity::unknown);
                             }))
        {
            signal = OnsetSignal::parity;
        }
        else
        {
            signal = OnsetSignal::excited;
        }
    }
    auto indicator = [&trace, signal](std::size_t k) {
        switch (signal)
        {
            case OnsetSignal::ground:
                return trace.level[k] == 0;
            case OnsetSignal::parity: {
                auto const unknown = static_cast<std::uint8_t>(Parity::unknown);
                return k > 0 && trace.parity[k] != unknown
                       && trace.parity[k - 1] != unknown
                       && trace.parity[k] != trace.parity[k - 1];
            }
            default:
                return trace.level[k] != 0;
        }
    };
    // Prefix sums of the indicator over [lo - kernel, hi + kernel)
    std::size_t const base = lo - kernel;
    std::vector<int> prefix(hi + kernel - base + 1, 0);
    for (std::size_t k = base; k < hi + kernel; ++k)
    {
        prefix[k - base + 1] = prefix[k - base] + (indicator(k) ? 1 : 0);
    }
    int best = 0;
    std::size_t best_k = start;
    for (std::size_t k = lo; k < hi; ++k)
    {
        std::size_t const i = k - base;
        int const after = prefix[i + kernel] - prefix[i];
        int const before = prefix[i] - prefix[i - kernel];
        if (after - before > best)
        {
            best = after - before;
            best_k = k;
        }
    }
    if (best <= 0)
    {
        return fallback;
    }
    return {best_k, false};
}

char const* to_string(EventClass c)
{
    switch (c)
    {
        case EventClass::qp_burst:
            return "qp_burst";
        case EventClass::tls:
            return "tls";
        case EventClass::discarded:
            return "discarded";
    }
    return "unknown";
}

EventClass classify_tls(std::span<WindowCounts const> windows,
                        std::size_t onset_window, double mu,
                        DetectionConfig const& config, double dt)
{
    double const level = mu + config.tls_sigma * std::sqrt(std::max(mu, 0.0));
    bool const two_way = config.two_way_transitions;
    std::size_t span = 0;
    std::size_t w = onset_window;
    // The onset window may hold only the start of the event
    if (w < windows.size() && transition_count(windows[w], two_way) <= level)
    {
        ++w;
    }
    std::size_t const first = w;
    while (w < windows.size() && transition_count(windows[w], two_way) > level)
    {
        ++span;
        ++w;
    }
    if (static_cast<int>(span) < config.tls_min_span_windows)
    {
        return EventClass::qp_burst;
    }
    if (!config.tls_decay_test)
    {
        return EventClass::tls;
    }
    // Log-linear fit of the excess count against window number
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < span; ++i)
    {
        double const x = static_cast<double>(i);
        double const y = std::log(
            static_cast<double>(transition_count(windows[first + i], two_way))
            - mu);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double const m = static_cast<double>(span);
    double const slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    if (!(slope < 0))
    {
        return EventClass::tls;
    }
    double const window_time = static_cast<double>(config.window_samples) * dt;
    double const tau = -window_time / slope;
    return tau > config.tls_decay_time ? EventClass::tls : EventClass::qp_burst;
}

TraceDetection detect_events(Trace const& trace, DetectionConfig const& config,
                             std::optional<ThresholdFit> const& threshold,
                             std::size_t trace_id)
{
    validate(config);
    TraceDetection out;
    out.windows = count_windows(trace, config.window_samples);
    out.threshold = threshold ? *threshold
                              : resolve_threshold(out.windows, config);
    bool const two_way = config.two_way_transitions;

    std::vector<Candidate> cands;
    if (config.use_1d || !config.parity_threshold_2d)
    {
        cands = detect_candidates(out.windows, out.threshold.threshold, two_way);
    }
    if (config.parity_threshold_2d)
    {
        bool const readable = std::any_of(
            trace.parity.begin(), trace.parity.end(),
            [](std::uint8_t p) { return p != unknown_parity; });
        auto const two_d = detect_2d(out.windows, *config.parity_threshold_2d,
                                     readable, two_way);
        cands = merge_candidates(cands, two_d, out.windows, two_way);
    }

    for (auto const& c : cands)
    {
        Onset const onset = locate_onset(trace, c, config);
        if (!out.events.empty()
            && onset.index < out.events.back().onset_index + config.onset_kernel
            && onset.index + config.onset_kernel > out.events.back().onset_index)
        {
            auto& prev = out.events.back();
            prev.last_window = std::max(prev.last_window, c.last_window);
            prev.peak_window_count = std::max(prev.peak_window_count,
                                              c.peak_count);
            continue;
        }
        BurstEvent e;
        e.trace_id = trace_id;
        e.onset_index = onset.index;
        e.low_confidence = onset.low_confidence;
        e.first_window = c.first_window;
        e.last_window = c.last_window;
        e.peak_window_count = c.peak_count;
        e.classification
            = trace.discard
                  ? EventClass::discarded
                  : classify_tls(out.windows,
                                 onset.index / config.window_samples,
                                 out.threshold.mu, config, trace.dt);
        out.events.push_back(e);
    }
    std::sort(out.events.begin(), out.events.end(),
              [](BurstEvent const& l, BurstEvent const& r) {
                  return l.onset_index < r.onset_index;
              });
    return out;
}

//---------------------------------------------------------------------------//
double rate_from_probability(double p, double dt)
{
    if (!(p >= 0) || p > 1 || !(dt > 0))
    {
        throw DomainError("probability must lie in [0, 1] and dt be positive");
    }
    if (p == 1)
    {
        return nan;
    }
    return -std::log1p(-p) / dt;
}

RecoveryAccumulator::RecoveryAccumulator(double dt,
                                         RecoveryOptions const& options)
    : dt_(dt), options_(options)
{
    if (!(dt > 0) || !(options.bin_width > 0) || !(options.t_before >= 0)
        || !(options.t_after > 0))
    {
        throw DomainError("recovery binning must be positive");
    }
    bin_samples_ = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(options.bin_width / dt)));
    double const bin_time = static_cast<double>(bin_samples_) * dt;
    std::size_t const before_bins
        = static_cast<std::size_t>(std::lround(options.t_before / bin_time));
    std::size_t const after_bins = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(options.t_after / bin_time)));
    before_samples_ = before_bins * bin_samples_;
    n_bins_ = before_bins + after_bins;
    cond10_.assign(n_bins_, 0);
    count10_.assign(n_bins_, 0);
    cond01_.assign(n_bins_, 0);
    count01_.assign(n_bins_, 0);
}

void RecoveryAccumulator::add(Trace const& trace, std::size_t onset)
{
    std::size_t const n = trace.size();
    if (onset >= n)
    {
        throw DomainError("event onset outside the trace");
    }
    // Offset o = k + before - onset runs over [0, n_bins * bin_samples)
    std::size_t const first = onset >= before_samples_ ? onset - before_samples_
                                                       : 0;
    std::size_t const stop
        = std::min(n, onset + n_bins_ * bin_samples_ - before_samples_);
    for (std::size_t k = std::max<std::size_t>(first, 1); k < stop; ++k)
    {
        std::size_t const b = (k + before_samples_ - onset) / bin_samples_;
        std::uint8_t const pl = trace.level[k - 1];
        std::uint8_t const lv = trace.level[k];
        if (pl == 1 || trace.reset[k - 1])
        {
            ++cond10_[b];
            count10_[b] += lv == 0;
        }
        else if (pl == 0)
        {
            ++cond01_[b];
            count01_[b] += lv == 1;
        }
    }
    ++n_events_;
}

void RecoveryAccumulator::merge(RecoveryAccumulator const& other)
{
    if (other.n_bins_ != n_bins_ || other.bin_samples_ != bin_samples_
        || other.before_samples_ != before_samples_)
    {
        throw DomainError("cannot merge accumulators with different binning");
    }
    for (std::size_t b = 0; b < n_bins_; ++b)
    {
        cond10_[b] += other.cond10_[b];
        count10_[b] += other.count10_[b];
        cond01_[b] += other.cond01_[b];
        count01_[b] += other.count01_[b];
    }
    n_events_ += other.n_events_;
}

RecoveryCurve RecoveryAccumulator::finish(DeviceParams const* dev) const
{
    RecoveryCurve c;
    c.n_events_averaged = n_events_;
    c.cond10 = cond10_;
    c.count10 = count10_;
    c.cond01 = cond01_;
    c.count01 = count01_;
    bool const two_state = options_.two_state_inversion;

    // Baselines from the bins that end before the onset
    std::uint64_t p10 = 0, q10 = 0, p01 = 0, q01 = 0;
    std::size_t const before_bins = before_samples_ / bin_samples_;
    for (std::size_t b = 0; b < before_bins; ++b)
    {
        p10 += count10_[b];
        q10 += cond10_[b];
        p01 += count01_[b];
        q01 += cond01_[b];
    }
    Conversion const pre = convert(p10, q10, p01, q01, dt_, two_state);
    c.baseline10 = options_.gamma10_steady ? *options_.gamma10_steady : pre.g10;
    c.baseline01 = options_.gamma01_steady ? *options_.gamma01_steady : pre.g01;
    if (std::isnan(c.baseline10))
    {
        c.baseline10 = 0;
    }
    if (std::isnan(c.baseline01))
    {
        c.baseline01 = 0;
    }

    double const bin_time = static_cast<double>(bin_samples_) * dt_;
    double const before_time = static_cast<double>(before_samples_) * dt_;
    for (std::size_t b = 0; b < n_bins_; ++b)
    {
        Conversion const r = convert(count10_[b], cond10_[b], count01_[b],
                                     cond01_[b], dt_, two_state);
        c.time.push_back((static_cast<double>(b) + 0.5) * bin_time
                         - before_time);
        c.gamma10.push_back(r.g10);
        c.gamma01.push_back(r.g01);
        c.d_gamma10.push_back(r.g10 - c.baseline10);
        c.d_gamma10_err.push_back(r.e10);
        c.d_gamma01.push_back(r.g01 - c.baseline01);
        c.d_gamma01_err.push_back(r.e01);
        if (dev)
        {
            double tq = nan;
            if (r.g01 > 0 && r.g10 > r.g01)
            {
                tq = qubit_temperature(r.g10, r.g01, dev->f_q);
            }
            c.t_q.push_back(tq);
            // dT/T = dln(g10/g01) / ln(g10/g01)
            c.t_q_err.push_back(tq * std::hypot(r.e10 / r.g10, r.e01 / r.g01)
                                / std::log(r.g10 / r.g01));
            double x = nan;
            double const e10 = r.g10 - c.baseline10;
            double const e01 = r.g01 - c.baseline01;
            if (tq > 0 && e10 >= 0 && e01 >= 0 && e10 + e01 > 0)
            {
                x = xqp_from_excess(e10, e01, tq, *dev);
            }
            c.x_qp.push_back(x);
        }
    }
    return c;
}

RecoveryCurve recovery_curve(std::span<Trace const> traces,
                             std::span<BurstEvent const> events,
                             RecoveryOptions const& options)
{
    if (traces.empty())
    {
        throw DomainError("no traces to average");
    }
    RecoveryAccumulator acc(traces.front().dt, options);
    for (auto const& e : events)
    {
        if (e.classification != EventClass::qp_burst)
        {
            continue;
        }
        if (e.trace_id >= traces.size())
        {
            throw DomainError("event refers to a missing trace");
        }
        acc.add(traces[e.trace_id], e.onset_index);
    }
    if (acc.n_events() == 0)
    {
        throw DomainError("no burst events to average");
    }
    return acc.finish();
}

RecoveryCurve thermometry_curve(std::span<Trace const> traces,
                                std::span<BurstEvent const> events,
                                RecoveryOptions options,
                                DeviceParams const& dev)
{
    if (traces.empty())
    {
        throw DomainError("no traces to average");
    }
    options.two_state_inversion = true;
    RecoveryAccumulator acc(traces.front().dt, options);
    for (auto const& e : events)
    {
        if (e.classification != EventClass::qp_burst)
        {
            continue;
        }
        if (e.trace_id >= traces.size())
        {
            throw DomainError("event refers to a missing trace");
        }
        acc.add(traces[e.trace_id], e.onset_index);
    }
    if (acc.n_events() == 0)
    {
        throw DomainError("no burst events to average");
    }
    return acc.finish(&dev);
}

//---------------------------------------------------------------------------//
ExponentialFit fit_exponential(std::span<double const> t,
                               std::span<double const> y,
                               std::span<double const> sigma,
                               std::optional<double> fixed_baseline)
{
    if (t.size() != y.size() || t.size() != sigma.size())
    {
        throw DomainError("fit arrays differ in length");
    }
    std::vector<double> tt, yy, ss;
    for (std::size_t i = 0; i < t.size(); ++i)
    {
        if (std::isfinite(t[i]) && std::isfinite(y[i]) && sigma[i] > 0
            && std::isfinite(sigma[i]))
        {
            tt.push_back(t[i]);
            yy.push_back(y[i]);
            ss.push_back(sigma[i]);
        }
    }
    bool const free_base = !fixed_baseline.has_value();
    Eigen::Index const n_par = free_base ? 3 : 2;
    if (tt.size() < 5 || static_cast<Eigen::Index>(tt.size()) <= n_par)
    {
        throw ConvergenceError("exponential fit needs at least five bins", 0);
    }

    // Starting point from a log-linear fit above the baseline guess
    double b0 = fixed_baseline.value_or(0);
    if (free_base)
    {
        std::size_t const tail = std::max<std::size_t>(1, tt.size() / 5);
        b0 = 0;
        for (std::size_t i = tt.size() - tail; i < tt.size(); ++i)
        {
            b0 += yy[i];
        }
        b0 /= static_cast<double>(tail);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
    for (std::size_t i = 0; i < tt.size(); ++i)
    {
        double const d = yy[i] - b0;
        if (d > 0)
        {
            sx += tt[i];
            sy += std::log(d);
            sxx += tt[i] * tt[i];
            sxy += tt[i] * std::log(d);
            m += 1;
        }
    }
    double tau0 = (tt.back() - tt.front()) / 3;
    double a0 = std::abs(yy.front() - b0) + 1e-300;
    if (m >= 2 && m * sxx - sx * sx > 0)
    {
        double const slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        if (slope < 0)
        {
            tau0 = -1 / slope;
            a0 = std::exp((sy - slope * sx) / m);
        }
    }
    double const t_span = tt.back() - tt.front();
    tau0 = std::clamp(tau0, 1e-3 * t_span, 1e3 * t_span);

    // Parameters: amplitude, ln(tau), [baseline]
    double const scale = std::max(a0, 1e-300);
    auto resid = [&](Eigen::VectorXd const& p, Eigen::VectorXd& r) {
        double const a = p[0] * scale;
        double const tau = std::exp(p[1]);
        double const base = free_base ? p[2] * scale : *fixed_baseline;
        for (std::size_t i = 0; i < tt.size(); ++i)
        {
            double const model = base + a * std::exp(-tt[i] / tau);
            r[static_cast<Eigen::Index>(i)] = (model - yy[i]) / ss[i];
        }
    };
    Eigen::VectorXd x0(n_par);
    Eigen::VectorXd lower(n_par);
    Eigen::VectorXd upper(n_par);
    x0[0] = a0 / scale;
    x0[1] = std::log(tau0);
    lower[0] = -1e6;
    upper[0] = 1e6;
    lower[1] = std::log(1e-6 * t_span);
    upper[1] = std::log(1e6 * t_span);
    if (free_base)
    {
        x0[2] = b0 / scale;
        lower[2] = -1e12;
        upper[2] = 1e12;
    }
    LsqOptions opts;
    opts.max_iterations = 500;
    auto const res = levenberg_marquardt(resid, x0,
                                         static_cast<Eigen::Index>(tt.size()),
                                         lower, upper, opts);
    ExponentialFit out;
    out.amplitude = res.params[0] * scale;
    out.tau = std::exp(res.params[1]);
    out.baseline = free_base ? res.params[2] * scale : *fixed_baseline;
    out.chi2 = res.chi2;
    out.dof = static_cast<int>(tt.size()) - static_cast<int>(n_par);
    if (!(out.amplitude > 0))
    {
        throw ConvergenceError("exponential fit gave a non-positive amplitude",
                               out.amplitude);
    }
    double const inflate = out.dof > 0 ? std::max(1.0, out.chi2 / out.dof) : 1.0;
    Eigen::MatrixXd const cov = res.covariance * inflate;
    out.amplitude_err = std::sqrt(std::max(cov(0, 0), 0.0)) * scale;
    out.tau_err = out.tau * std::sqrt(std::max(cov(1, 1), 0.0));
    if (free_base)
    {
        out.baseline_err = std::sqrt(std::max(cov(2, 2), 0.0)) * scale;
    }
    return out;
}

BurstRate burst_rate(std::uint64_t count, double observation_seconds,
                     double confidence)
{
    if (!(observation_seconds > 0))
    {
        throw DomainError("observation time must be positive");
    }
    BurstRate r;
    r.count = count;
    r.minutes = observation_seconds / units::minute;
    r.rate = static_cast<double>(count) / r.minutes;
    PoissonInterval const ci = poisson_interval(count, confidence);
    r.ci = {ci.lower / r.minutes, ci.upper / r.minutes};
    return r;
}

//---------------------------------------------------------------------------//
void write_events_jsonl(std::ostream& os, std::span<BurstEvent const> events,
                        double dt)
{
    for (auto const& e : events)
    {
        nlohmann::ordered_json j;
        j["trace_id"] = e.trace_id;
        j["onset_index"] = e.onset_index;
        j["onset_seconds"] = static_cast<double>(e.onset_index) * dt;
        j["low_confidence"] = e.low_confidence;
        j["first_window"] = e.first_window;
        j["last_window"] = e.last_window;
        j["peak_window_counts"] = e.peak_window_count;
        j["classification"] = to_string(e.classification);
        os << j.dump() << '\n';
    }
}

void write_recovery_csv(std::ostream& os, RecoveryCurve const& curve)
{
    os << "t_seconds,d_gamma10,d_gamma10_err,d_gamma01,d_gamma01_err,t_q,x_qp\n";
    for (std::size_t i = 0; i < curve.size(); ++i)
    {
        os << format_double(curve.time[i]) << ','
           << format_double(curve.d_gamma10[i]) << ','
           << format_double(curve.d_gamma10_err[i]) << ','
           << format_double(curve.d_gamma01[i]) << ','
           << format_double(curve.d_gamma01_err[i]) << ','
           << (curve.t_q.empty() ? "nan" : format_double(curve.t_q[i])) << ','
           << (curve.x_qp.empty() ? "nan" : format_double(curve.x_qp[i]))
           << '\n';
    }
}

void write_windows_csv(std::ostream& os, std::span<WindowCounts const> windows)
{
    os << "window_index,n_relax,n_parity,n_excited,n_excite\n";
    for (auto const& w : windows)
    {
        os << w.window_index << ',' << w.n_relax << ',' << w.n_parity << ','
           << w.n_excited << ',' << w.n_excite << '\n';
    }
}

}  // namespace qpburst
