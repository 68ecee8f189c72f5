#include "qpburst/parity_hmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <boost/math/tools/minima.hpp>

#include "qpburst/error.hpp"
#include "qpburst/optimize.hpp"
#include "qpburst/random.hpp"

namespace qpburst
{
namespace
{
constexpr double max_logit = 12.0;  // assign_error just below 0.5
constexpr double min_logit = -30.0;  // assign_error ~ 5e-14

double error_from_logit(double y)
{
    return 0.5 / (1 + std::exp(-y));
}

double logit_from_error(double e)
{
    double const q = std::clamp(e / 0.5, 1e-12, 1 - 1e-6);
    return std::log(q / (1 - q));
}

struct LabelCounts
{
    std::size_t known{0};
    std::size_t unknown{0};
};

LabelCounts count_labels(ParityTrace const& trace)
{
    LabelCounts c;
    for (Parity p : trace.outcomes)
    {
        (p == Parity::unknown ? c.unknown : c.known) += 1;
    }
    return c;
}

// Log-likelihood of the resolved labels only (unknown emissions factor out).
double parity_log_likelihood(ParityTrace const& trace, double flip,
                             double error)
{
    double const stay = 1 - flip;
    double const right = 1 - error;
    double a0 = 0.5;
    double a1 = 0.5;
    double log_l = 0;
    bool first = true;
    for (Parity obs : trace.outcomes)
    {
        if (!first)
        {
            double const n0 = a0 * stay + a1 * flip;
            double const n1 = a1 * stay + a0 * flip;
            a0 = n0;
            a1 = n1;
        }
        first = false;
        if (obs == Parity::unknown)
        {
            continue;
        }
        if (obs == Parity::even)
        {
            a0 *= right;
            a1 *= error;
        }
        else
        {
            a0 *= error;
            a1 *= right;
        }
        double const norm = a0 + a1;
        log_l += std::log(norm);
        a0 /= norm;
        a1 /= norm;
    }
    return log_l;
}

void check_trace(ParityTrace const& trace)
{
    if (trace.outcomes.empty())
    {
        throw DomainError("parity trace must not be empty");
    }
    if (!(trace.dt > 0))
    {
        throw DomainError("parity trace dt must be positive");
    }
}

}  // namespace

double flip_probability(double switch_rate, double dt)
{
    return -0.5 * std::expm1(-2 * switch_rate * dt);
}

double hmm_log_likelihood(ParityTrace const& trace, HmmParams const& params)
{
    check_trace(trace);
    if (!(params.switch_rate >= 0) || !(params.assign_error >= 0)
        || !(params.assign_error < 0.5) || !(params.unknown_prob >= 0)
        || !(params.unknown_prob < 1))
    {
        throw DomainError("invalid HMM parameters");
    }
    LabelCounts const c = count_labels(trace);
    double log_l = parity_log_likelihood(
        trace, flip_probability(params.switch_rate, trace.dt),
        params.assign_error);
    log_l += c.known * std::log1p(-params.unknown_prob);
    if (c.unknown > 0)
    {
        log_l += c.unknown * std::log(params.unknown_prob);
    }
    return log_l;
}

HmmFitResult fit_switch_rate(ParityTrace const& trace, HmmParams const& init)
{
    check_trace(trace);
    HmmFitResult result;
    std::size_t const n = trace.outcomes.size();
    result.short_trace = n < 1000;
    if (result.short_trace)
    {
        std::clog << "warning: parity trace has only " << n
                  << " samples; rate estimate may be unreliable\n";
    }
    LabelCounts const c = count_labels(trace);
    if (c.known == 0)
    {
        throw DomainError("parity trace has no resolved labels");
    }
    double const u = static_cast<double>(c.unknown) / n;

    double const dt = trace.dt;
    double const span = n * dt;
    // Rates from far below one switch per trace up to flip probability 0.49
    double const log_rate_lo = std::log(1e-3 / span);
    double const log_rate_hi = std::log(-std::log(1 - 2 * 0.49) / (2 * dt));

    auto negative_ll = [&](double log_rate, double y) {
        double const flip = flip_probability(std::exp(log_rate), dt);
        return -parity_log_likelihood(trace, flip, error_from_logit(y));
    };

    double const start_rate = init.switch_rate > 0 ? init.switch_rate
                                                   : 1.0 / span;
    std::vector<double> x0{
        std::clamp(std::log(start_rate), log_rate_lo, log_rate_hi),
        std::clamp(logit_from_error(std::max(init.assign_error, 1e-3)),
                   min_logit, max_logit)};
    NelderMeadOptions opts;
    opts.max_evaluations = 2000;
    opts.f_tolerance = 1e-9;
    opts.x_tolerance = 1e-7;
    opts.initial_step = 0.5;
    auto const nm = nelder_mead(
        [&](std::span<double const> x) { return negative_ll(x[0], x[1]); },
        x0, opts, {log_rate_lo, min_logit}, {log_rate_hi, max_logit});
    result.evaluations = nm.evaluations;
    if (!nm.converged)
    {
        throw ConvergenceError(
            "HMM fit did not converge within 2000 evaluations; best rate "
                + std::to_string(std::exp(nm.x[0])),
            nm.value);
    }

    double const theta = nm.x[0];
    result.params.switch_rate = std::exp(theta);
    result.params.assign_error = error_from_logit(nm.x[1]);
    result.params.unknown_prob = u;
    result.log_likelihood = -nm.value
                            + c.known * std::log1p(-u)
                            + (c.unknown > 0 ? c.unknown * std::log(u) : 0.0);
    // Labels at chance carry no rate information either
    result.identifiability_flag = theta >= log_rate_hi - 1e-6
                                  || result.params.assign_error > 0.45;
    result.at_lower_bound = theta <= log_rate_lo + 1e-6;

    // Profile over the assignment error at fixed ln(rate)
    auto profile = [&](double log_rate) {
        auto const r = boost::math::tools::brent_find_minima(
            [&](double y) { return negative_ll(log_rate, y); }, min_logit,
            max_logit, 40);
        return -r.second;
    };

    double const l0 = -nm.value;
    double sigma = 0;
    if (!result.at_lower_bound && !result.identifiability_flag)
    {
        double const h = 0.02;
        double const lp = profile(theta + h);
        double const lm = profile(theta - h);
        double const l_mid = std::max(l0, profile(theta));
        double const curvature = (lp - 2 * l_mid + lm) / (h * h);
        if (curvature < 0)
        {
            sigma = 1 / std::sqrt(-curvature);
        }
    }
    if (sigma > 0)
    {
        result.rate_ci = {std::exp(theta - sigma), std::exp(theta + sigma)};
        result.rate_ci95 = {std::exp(theta - 1.96 * sigma),
                            std::exp(theta + 1.96 * sigma)};
    }
    else
    {
        // Flat or one-sided likelihood: scan upward for the drop
        auto upper_at = [&](double drop) {
            double t = theta;
            while (t < log_rate_hi)
            {
                t += 0.05;
                if (l0 - profile(t) >= drop)
                {
                    break;
                }
            }
            return std::exp(std::min(t, log_rate_hi));
        };
        result.rate_ci = {0.0, upper_at(0.5)};
        result.rate_ci95 = {0.0, upper_at(1.92)};
    }
    return result;
}

ParityTrace synthesize_parity_trace(HmmParams const& params, double dt,
                                    std::size_t n, std::uint64_t seed)
{
    if (!(dt > 0) || n == 0)
    {
        throw DomainError("synthetic trace needs dt > 0 and n > 0");
    }
    Rng rng(seed);
    double const flip = flip_probability(params.switch_rate, dt);
    ParityTrace trace;
    trace.dt = dt;
    trace.outcomes.resize(n);
    int hidden = rng.bernoulli(0.5) ? 1 : 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        if (i > 0 && rng.bernoulli(flip))
        {
            hidden = 1 - hidden;
        }
        if (rng.bernoulli(params.unknown_prob))
        {
            trace.outcomes[i] = Parity::unknown;
            continue;
        }
        int const label = rng.bernoulli(params.assign_error) ? 1 - hidden
                                                             : hidden;
        trace.outcomes[i] = static_cast<Parity>(label);
    }
    return trace;
}

ParityTrace parity_trace_from(Trace const& trace)
{
    ParityTrace out;
    out.dt = trace.dt;
    out.outcomes.reserve(trace.size());
    for (std::uint8_t p : trace.parity)
    {
        out.outcomes.push_back(static_cast<Parity>(p));
    }
    return out;
}

}  // namespace qpburst
