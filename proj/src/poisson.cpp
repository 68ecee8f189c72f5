#include "qpburst/poisson.hpp"

#include <cmath>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "qpburst/error.hpp"

namespace qpburst
{
PoissonInterval poisson_interval(std::uint64_t count, double confidence)
{
    if (!(confidence > 0 && confidence < 1))
    {
        throw DomainError("confidence must lie in (0, 1)");
    }
    double const alpha = 1 - confidence;
    double const k = static_cast<double>(count);
    PoissonInterval ci;
    if (count > 0)
    {
        boost::math::chi_squared lo(2 * k);
        ci.lower = 0.5 * boost::math::quantile(lo, alpha / 2);
    }
    boost::math::chi_squared hi(2 * k + 2);
    ci.upper = 0.5 * boost::math::quantile(hi, 1 - alpha / 2);
    return ci;
}

double poisson_log_pmf(std::uint64_t k, double mean)
{
    double const kk = static_cast<double>(k);
    if (mean <= 0)
    {
        return k == 0 ? 0.0 : -INFINITY;
    }
    return kk * std::log(mean) - mean - std::lgamma(kk + 1);
}

double poisson_upper_tail(std::uint64_t k, double mean)
{
    if (mean <= 0)
    {
        return 0;
    }
    // P(X <= k) = Q(k + 1, mean)
    return boost::math::gamma_p(static_cast<double>(k) + 1, mean);
}

}  // namespace qpburst
