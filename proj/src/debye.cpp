#include "qpburst/debye.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "qpburst/error.hpp"

namespace qpburst
{
namespace
{
// x^3/(e^x - 1) is below 1e-70 past this point
constexpr double x_cutoff = 200.0;

double debye_integral(double upper)
{
    using boost::math::quadrature::gauss_kronrod;
    auto integrand = [](double x) {
        if (x < 1e-8)
        {
            return x * x;
        }
        return x * x * x / std::expm1(x);
    };
    double const top = std::min(upper, x_cutoff);
    // Split at the peak region so the adaptive rule sees the bulk
    double result = 0;
    double const mid = std::min(top, 10.0);
    result += gauss_kronrod<double, 31>::integrate(integrand, 0.0, mid, 15,
                                                   1e-14);
    if (top > mid)
    {
        result += gauss_kronrod<double, 31>::integrate(integrand, mid, top,
                                                       15, 1e-14);
    }
    return result;
}

}  // namespace

void validate(ChipThermalModel const& model)
{
    if (!(model.debye_prefactor > 0) || !(model.t_debye > 0)
        || !(model.base_temperature >= 0))
    {
        throw DomainError("invalid chip thermal model");
    }
}

double debye_energy(double temperature, ChipThermalModel const& model)
{
    validate(model);
    if (!(temperature > 0))
    {
        throw DomainError("temperature must be positive");
    }
    double const ratio = temperature / model.t_debye;
    return model.debye_prefactor * temperature * ratio * ratio * ratio
           * debye_integral(model.t_debye / temperature);
}

double debye_temperature(double energy, ChipThermalModel const& model)
{
    validate(model);
    if (!(energy > 0))
    {
        throw DomainError("deposited energy must be positive");
    }
    double const target = energy
                          + (model.base_temperature > 0
                                 ? debye_energy(model.base_temperature, model)
                                 : 0.0);
    double const log_target = std::log(target);
    auto residual = [&](double log_t) {
        return std::log(debye_energy(std::exp(log_t), model)) - log_target;
    };

    // Bracket in log temperature; U grows at least linearly in T
    double lo = std::log(std::max(model.base_temperature, 1e-9));
    double hi = lo + 1.0;
    while (residual(hi) < 0)
    {
        lo = hi;
        hi += 2.0;
        if (hi > 50)
        {
            throw DomainError("deposited energy too large for Debye model");
        }
    }
    if (residual(lo) >= 0)
    {
        return std::exp(lo);
    }
    std::uintmax_t max_iter = 200;
    auto const [a, b] = boost::math::tools::toms748_solve(
        residual, lo, hi, boost::math::tools::eps_tolerance<double>(50),
        max_iter);
    return std::exp(0.5 * (a + b));
}

}  // namespace qpburst
