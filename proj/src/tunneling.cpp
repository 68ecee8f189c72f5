#include "qpburst/tunneling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qpburst/bessel.hpp"
#include "qpburst/error.hpp"
#include "qpburst/units.hpp"

namespace qpburst
{
namespace
{
// Integration extends this many kT beyond the lower limit.
constexpr double tail_kt = 60.0;

// Closed-form structure factor per unit low-film density.
double closed_per_unit(Side side, Sign sign, double f, DeviceParams const& dev,
                       double kt)
{
    double const y = side == Side::low ? dev.d_delta + f : dev.d_delta - f;
    double const ay = std::fabs(y);
    // exp(-(dD + hf)/2kT) combined with the exp(x) of the scaled Bessel
    double const expo = side == Side::low
                            ? std::max(dev.d_delta + f, 0.0) / kt
                            : std::max(dev.d_delta, f) / kt;
    double const pref = std::sqrt(dev.delta / (2 * units::pi * kt))
                        * std::exp(-expo);
    if (sign == Sign::plus)
    {
        if (ay == 0)
        {
            throw SingularInputError(
                "structure factor: K0 argument is exactly zero");
        }
        return pref * bessel_k_scaled(0, ay / (2 * kt));
    }
    double const ybar = ay == 0 ? 2 * kt
                                : ay * bessel_k_scaled(1, ay / (2 * kt));
    return pref * ybar / (2 * dev.delta_bar());
}

double rate_per_unit(int i, int j, DeviceParams const& dev, double kt)
{
    if (i < 0 || i > 2 || j < 0 || j > 2)
    {
        throw DomainError("qubit level outside supported range 0..2");
    }
    double const prefactor = 16 * dev.e_j * units::ghz;
    if (i == j)
    {
        return prefactor
               * (closed_per_unit(Side::low, Sign::minus, 0, dev, kt)
                  + closed_per_unit(Side::high, Sign::minus, 0, dev, kt));
    }
    if (std::abs(i - j) > 1)
    {
        return 0;
    }
    double const f = dev.transition_frequency(i, j);
    double const matrix_element = std::max(i, j)
                                  * std::sqrt(dev.e_c / (8 * dev.e_j));
    return prefactor * matrix_element
           * (closed_per_unit(Side::low, Sign::plus, f, dev, kt)
              + closed_per_unit(Side::high, Sign::plus, f, dev, kt));
}

}  // namespace

//---------------------------------------------------------------------------//
double structure_factor_closed(Side side, Sign sign, double f_ij,
                               DeviceParams const& dev, QPBath const& bath)
{
    validate(dev);
    validate(bath, dev);
    double const x = xqp_low_film(bath.temperature, dev, bath.x_qp_ne);
    double const kt = units::thermal_energy(bath.temperature);
    return x * closed_per_unit(side, sign, f_ij, dev, kt);
}

//---------------------------------------------------------------------------//
double structure_factor_quadrature(Side side, Sign sign, double f_ij,
                                   DeviceParams const& dev,
                                   QPBath const& bath, double rel_tol)
{
    using boost::math::quadrature::gauss_kronrod;

    validate(dev);
    validate(bath, dev);
    double const kt = units::thermal_energy(bath.temperature);
    double const x = xqp_low_film(bath.temperature, dev, bath.x_qp_ne);

    // Initial and final gaps of the tunneling QP
    double const d1 = side == Side::low ? dev.delta : dev.delta_high();
    double const d2 = side == Side::low ? dev.delta_high() : dev.delta;
    double const a = 0.5 * (d2 - d1 + f_ij);
    double const abs_a = std::fabs(a);
    double const cross = sign == Sign::plus ? 2 * d1 * d2 : 0.0;

    // Numerator e(e - hf) +- D1 D2 in terms of z = e - D1 - a
    auto numerator = [&](double z) {
        return z * z + (d1 + d2) * z + a * (a - f_ij) + cross;
    };
    auto outer = [&](double z) {
        return std::sqrt((z + a + 2 * d1) * (z - a + 2 * d2));
    };

    double const shift = abs_a + a + d1 - dev.delta;
    double const norm = x * std::sqrt(dev.delta / (2 * units::pi * kt))
                        * std::exp(-shift / kt) / dev.delta_bar();

    double value = 0;
    double error = 0;
    constexpr unsigned max_depth = 30;
    double const request = 0.1 * rel_tol;
    if (abs_a == 0)
    {
        if (sign == Sign::plus)
        {
            throw SingularInputError(
                "structure factor: integrand not integrable at zero offset");
        }
        // sqrt(z^2 - a^2) = z cancels against the numerator
        auto integrand = [&](double z) {
            return (z + d1 + d2) / outer(z) * std::exp(-z / kt);
        };
        value = gauss_kronrod<double, 15>::integrate(
            integrand, 0.0, tail_kt * kt, max_depth, request, &error);
    }
    else
    {
        // z = |a| cosh u removes the inverse-square-root endpoint
        auto integrand = [&](double u) {
            double const s = std::sinh(0.5 * u);
            double const excess = 2 * abs_a * s * s;
            double const z = abs_a + excess;
            return numerator(z) / outer(z) * std::exp(-excess / kt);
        };
        double const u_max = std::acosh(1 + tail_kt * kt / abs_a);
        value = gauss_kronrod<double, 15>::integrate(
            integrand, 0.0, u_max, max_depth, request, &error);
    }
    if (!(value > 0) || error > rel_tol * std::fabs(value))
    {
        throw ConvergenceError("structure factor quadrature did not converge",
                               value != 0 ? error / std::fabs(value) : error);
    }
    return norm * value;
}

//---------------------------------------------------------------------------//
double qp_tunnel_rate(int i, int j, DeviceParams const& dev,
                      QPBath const& bath)
{
    validate(dev);
    validate(bath, dev);
    double const kt = units::thermal_energy(bath.temperature);
    double const x = xqp_low_film(bath.temperature, dev, bath.x_qp_ne);
    return x * rate_per_unit(i, j, dev, kt);
}

TunnelRates unit_tunnel_rates(double temperature, DeviceParams const& dev)
{
    if (!(temperature > 0))
    {
        throw DomainError("temperature must be positive");
    }
    double const kt = units::thermal_energy(temperature);
    TunnelRates result;
    for (int i = 0; i < 3; ++i)
    {
        for (int j = std::max(0, i - 1); j <= std::min(2, i + 1); ++j)
        {
            result.rate[i][j] = rate_per_unit(i, j, dev, kt);
        }
    }
    result.gamma0_qp = result.rate[0][0] + result.rate[0][1];
    result.gamma1_qp = result.rate[1][0] + result.rate[1][1]
                       + result.rate[1][2];
    return result;
}

TunnelRates parity_switch_rates(DeviceParams const& dev, QPBath const& bath)
{
    validate(dev);
    validate(bath, dev);
    double const x = xqp_low_film(bath.temperature, dev, bath.x_qp_ne);
    TunnelRates result = unit_tunnel_rates(bath.temperature, dev);
    for (auto& row : result.rate)
    {
        for (double& r : row)
        {
            r *= x;
        }
    }
    result.gamma0_qp *= x;
    result.gamma1_qp *= x;
    return result;
}

//---------------------------------------------------------------------------//
AsymptoticRates
asymptotic_rates(Regime regime, DeviceParams const& dev, QPBath const& bath)
{
    validate(dev);
    validate(bath, dev);
    double const kt = units::thermal_energy(bath.temperature);
    double const x = bath.x_qp_ne;
    double const ej = 16 * dev.e_j * units::ghz;
    double const detuning = dev.d_delta - dev.f_q;
    constexpr double margin = 5.0;

    AsymptoticRates result;
    switch (regime)
    {
        case Regime::zero: {
            double const dilution = 1 + dev.v_h / dev.v_l;
            result.gamma10 = std::sqrt(8 * dev.delta * dev.f_q) * units::ghz
                             * x / dilution;
            result.gamma11 = ej * std::sqrt(2 * kt / (units::pi * dev.delta))
                             * x / dilution;
            result.regime_satisfied = margin * dev.d_delta <= kt
                                      && margin * kt <= dev.f_q;
            break;
        }
        case Regime::resonant: {
            if (detuning == 0)
            {
                throw SingularInputError(
                    "resonant limit diverges at d_delta = h f_q");
            }
            result.gamma10 = dev.f_q * units::ghz
                             * std::sqrt(2 * dev.delta / (units::pi * kt))
                             * std::log(4 * kt / std::fabs(detuning)) * x;
            result.gamma11 = ej * std::sqrt(dev.d_delta / (2 * dev.delta))
                             * std::exp(-dev.d_delta / kt) * x;
            result.regime_satisfied = margin * std::fabs(detuning) <= kt;
            break;
        }
        case Regime::big: {
            if (!(detuning > 0))
            {
                throw DomainError("big-gap limit requires d_delta > h f_q");
            }
            result.gamma10 = dev.f_q * units::ghz
                             * std::sqrt(2 * dev.delta / detuning)
                             * std::exp(-detuning / kt) * x;
            result.gamma11 = ej * std::sqrt(dev.d_delta / (2 * dev.delta))
                             * std::exp(-dev.d_delta / kt) * x;
            result.regime_satisfied = detuning >= margin * kt;
            break;
        }
    }
    return result;
}

}  // namespace qpburst
