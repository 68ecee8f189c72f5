#include <cmath>
#include <vector>

#include "doctest.h"
#include "qpburst/error.hpp"
#include "qpburst/parity_hmm.hpp"

using namespace qpburst;
using doctest::Approx;

namespace
{
ParityTrace constant_trace(std::size_t n, double dt)
{
    return {std::vector<Parity>(n, Parity::even), dt};
}

// Sum over every hidden path; feasible for a handful of samples
double brute_force_likelihood(ParityTrace const& t, HmmParams const& h)
{
    double const p = flip_probability(h.switch_rate, t.dt);
    auto emit = [&](int hidden, Parity seen) {
        if (seen == Parity::unknown)
        {
            return h.unknown_prob;
        }
        double const known = 1 - h.unknown_prob;
        bool const match = static_cast<int>(seen) == hidden;
        return known * (match ? 1 - h.assign_error : h.assign_error);
    };
    std::size_t const n = t.outcomes.size();
    double total = 0;
    for (std::size_t path = 0; path < (std::size_t{1} << n); ++path)
    {
        double prob = 0.5;
        int prev = -1;
        for (std::size_t i = 0; i < n; ++i)
        {
            int const s = static_cast<int>((path >> i) & 1u);
            if (prev >= 0)
            {
                prob *= (s == prev) ? 1 - p : p;
            }
            prob *= emit(s, t.outcomes[i]);
            prev = s;
        }
        total += prob;
    }
    return std::log(total);
}
}  // namespace

TEST_CASE("flip probability")
{
    CHECK(flip_probability(0, 1e-3) == 0);
    CHECK(flip_probability(1, 1e-3)
          == Approx(0.5 * (1 - std::exp(-2e-3))).epsilon(1e-14));
    CHECK(flip_probability(1e9, 1) == Approx(0.5));
    // Small-rate limit is G dt
    CHECK(flip_probability(1, 1e-8) == Approx(1e-8).epsilon(1e-7));
}

TEST_CASE("likelihood")
{
    SUBCASE("single sample")
    {
        ParityTrace t{{Parity::odd}, 1e-3};
        CHECK(hmm_log_likelihood(t, {5, 0, 0}) == Approx(std::log(0.5)));
        CHECK(hmm_log_likelihood(t, {5, 0.1, 0}) == Approx(std::log(0.5)));
        t.outcomes = {Parity::unknown};
        CHECK(hmm_log_likelihood(t, {5, 0.1, 0.2}) == Approx(std::log(0.2)));
    }
    SUBCASE("constant trace without assignment errors")
    {
        for (double rate : {0.1, 3.0, 200.0})
        {
            auto const t = constant_trace(1000, 1e-3);
            double const p = flip_probability(rate, t.dt);
            double const expected = std::log(0.5) + 999 * std::log1p(-p);
            CHECK(hmm_log_likelihood(t, {rate, 0, 0})
                  == Approx(expected).epsilon(1e-10));
        }
    }
    SUBCASE("agrees with path enumeration")
    {
        ParityTrace t{{Parity::even, Parity::even, Parity::odd,
                       Parity::unknown, Parity::odd, Parity::even,
                       Parity::odd, Parity::odd, Parity::unknown,
                       Parity::even},
                      2e-3};
        for (HmmParams h : {HmmParams{10, 0.05, 0.2}, HmmParams{300, 0.2, 0.1},
                            HmmParams{0.5, 0.0, 0.3}})
        {
            CHECK(hmm_log_likelihood(t, h)
                  == Approx(brute_force_likelihood(t, h)).epsilon(1e-12));
        }
    }
    SUBCASE("depends on rate and dt only through their product")
    {
        auto t = synthesize_parity_trace({4, 0.05, 0.02}, 1e-3, 5000, 17);
        double const a = hmm_log_likelihood(t, {4, 0.05, 0.02});
        t.dt = 2e-3;
        CHECK(hmm_log_likelihood(t, {2, 0.05, 0.02})
              == Approx(a).epsilon(1e-12));
    }
    SUBCASE("invalid parameters")
    {
        auto const t = constant_trace(10, 1e-3);
        CHECK_THROWS_AS(hmm_log_likelihood(t, {-1, 0, 0}), DomainError);
        CHECK_THROWS_AS(hmm_log_likelihood(t, {1, 0.7, 0}), DomainError);
    }
}

TEST_CASE("switching-rate fit")
{
    SUBCASE("likelihood peaks near the true rate")
    {
        auto const t = synthesize_parity_trace({1, 0.05, 0}, 1e-3, 1000000, 3);
        double best_rate = 0;
        double best = -INFINITY;
        for (int i = 0; i <= 60; ++i)
        {
            double const rate = std::pow(10.0, -1 + i / 30.0);
            double const ll = hmm_log_likelihood(t, {rate, 0.05, 0});
            if (ll > best)
            {
                best = ll;
                best_rate = rate;
            }
        }
        CHECK(best_rate == Approx(1).epsilon(0.1));

        auto const fit = fit_switch_rate(t, {0.3, 0.1, 0});
        CHECK(fit.params.switch_rate == Approx(1).epsilon(0.15));
        CHECK(fit.params.assign_error == Approx(0.05).epsilon(0.05));
        CHECK(fit.rate_ci95.first < fit.params.switch_rate);
        CHECK(fit.rate_ci95.second > fit.params.switch_rate);
        CHECK(fit.rate_ci.first > fit.rate_ci95.first);
        CHECK(fit.rate_ci.second < fit.rate_ci95.second);
        CHECK_FALSE(fit.identifiability_flag);
        CHECK_FALSE(fit.at_lower_bound);
        CHECK(fit.log_likelihood >= best - 1e-6);
    }
    SUBCASE("identical labels bound the rate")
    {
        std::size_t const n = 20000;
        double const dt = 1e-3;
        auto const fit = fit_switch_rate(constant_trace(n, dt), {1, 0.1, 0});
        CHECK(fit.params.switch_rate <= 3 / (n * dt));
        CHECK(fit.at_lower_bound);
        CHECK(fit.rate_ci95.first == 0);
        CHECK(fit.rate_ci95.second > 0);
    }
    SUBCASE("unknown fraction is its frequency")
    {
        auto const t = synthesize_parity_trace({20, 0.02, 0.1}, 1e-3, 50000, 5);
        auto const fit = fit_switch_rate(t, {5, 0.1, 0});
        double unknown = 0;
        for (auto o : t.outcomes)
        {
            unknown += o == Parity::unknown ? 1 : 0;
        }
        CHECK(fit.params.unknown_prob
              == Approx(unknown / t.outcomes.size()).epsilon(1e-12));
        CHECK(fit.params.switch_rate == Approx(20).epsilon(0.15));
    }
    SUBCASE("dt doubling halves nothing but the sampling")
    {
        // Every other sample of a fast trace estimates the same rate
        auto const fine = synthesize_parity_trace({10, 0.03, 0}, 1e-3, 400000, 8);
        ParityTrace coarse{{}, 2e-3};
        for (std::size_t i = 0; i < fine.outcomes.size(); i += 2)
        {
            coarse.outcomes.push_back(fine.outcomes[i]);
        }
        auto const a = fit_switch_rate(fine, {3, 0.1, 0});
        auto const b = fit_switch_rate(coarse, {3, 0.1, 0});
        CHECK(b.params.switch_rate > a.rate_ci95.first);
        CHECK(b.params.switch_rate < a.rate_ci95.second);
        CHECK(b.params.switch_rate == Approx(10).epsilon(0.1));
    }
    SUBCASE("rates beyond the sampling limit are flagged")
    {
        auto const t = synthesize_parity_trace({1e5, 0.02, 0}, 1e-3, 20000, 9);
        auto const fit = fit_switch_rate(t, {10, 0.1, 0});
        CHECK(fit.identifiability_flag);
    }
    SUBCASE("short traces are flagged")
    {
        auto const t = synthesize_parity_trace({1, 0.02, 0}, 1e-3, 50, 2);
        CHECK(fit_switch_rate(t, {1, 0.1, 0}).short_trace);
    }
}

TEST_CASE("parity column of a readout trace")
{
    Trace t;
    t.dt = 4e-6;
    t.push_back({0, 1, Parity::even, false, std::nullopt});
    t.push_back({1, 0, Parity::unknown, true, std::nullopt});
    t.push_back({2, 1, Parity::odd, false, std::nullopt});
    auto const p = parity_trace_from(t);
    CHECK(p.dt == 4e-6);
    REQUIRE(p.outcomes.size() == 3);
    CHECK(p.outcomes[0] == Parity::even);
    CHECK(p.outcomes[1] == Parity::unknown);
    CHECK(p.outcomes[2] == Parity::odd);
}
