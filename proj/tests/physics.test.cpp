#include <cmath>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "doctest.h"
#include "qpburst/bessel.hpp"
#include "qpburst/debye.hpp"
#include "qpburst/device.hpp"
#include "qpburst/error.hpp"
#include "qpburst/thermometry.hpp"
#include "qpburst/tunneling.hpp"
#include "qpburst/units.hpp"

using namespace qpburst;
using doctest::Approx;

namespace
{
QPBath bath_at(double t, double x)
{
    return {t, x, std::nullopt};
}

double rel(double a, double b)
{
    return std::abs(a - b) / std::abs(b);
}
}  // namespace

TEST_CASE("bessel K small-argument asymptotes")
{
    double const k0_lead = std::log(2e6) - units::euler_gamma;
    CHECK(rel(bessel_k(0, 1e-6), k0_lead) < 1e-4);
    CHECK(rel(bessel_k(1, 1e-6), 1e6) < 1e-4);
    CHECK(bessel_k(0, 720) == 0);
    CHECK_THROWS_AS(bessel_k(0, 0), DomainError);
    CHECK_THROWS_AS(bessel_k(2, 1), DomainError);
}

TEST_CASE("bessel K0 against its integral representation")
{
    // K0(x) = int_0^inf exp(-x cosh u) du
    boost::math::quadrature::exp_sinh<double> integrator;
    for (double x : {1e-3, 0.3, 1.0, 2.0, 2.5, 10.0, 50.0})
    {
        double const k0 = integrator.integrate(
            [x](double u) { return std::exp(-x * std::cosh(u)); });
        CAPTURE(x);
        CHECK(rel(bessel_k(0, x), k0) < 1e-9);
    }
}

TEST_CASE("bessel K against boost")
{
    for (double x = 1e-5; x < 700; x *= 1.7)
    {
        CAPTURE(x);
        CHECK(rel(bessel_k(0, x), boost::math::cyl_bessel_k(0, x)) < 1e-10);
        CHECK(rel(bessel_k(1, x), boost::math::cyl_bessel_k(1, x)) < 1e-10);
        CHECK(rel(bessel_k_scaled(1, x),
                  std::exp(x) * boost::math::cyl_bessel_k(1, x))
              < 1e-10);
    }
    CHECK(y_bessel_k1(0, 0.3) == Approx(0.6));
}

TEST_CASE("structure factors")
{
    auto const big = big_gap_preset();
    DeviceParams const& dev = big.device;
    QPBath const bath = bath_at(0.1, 6.3e-10);
    double const kt = units::thermal_energy(0.1);

    SUBCASE("closed form against quadrature for the big device")
    {
        double const tol = 2 * (dev.d_delta + dev.f_q + kt) / dev.delta_bar();
        for (Side s : {Side::low, Side::high})
        {
            for (Sign g : {Sign::plus, Sign::minus})
            {
                double const a = structure_factor_closed(s, g, dev.f_q, dev, bath);
                double const b
                    = structure_factor_quadrature(s, g, dev.f_q, dev, bath);
                CHECK(rel(a, b) < tol);
            }
        }
    }
    SUBCASE("detailed balance of the plus factor")
    {
        // The high side at f pairs with the low side at -f
        double const f = 3.0;
        double const fwd
            = structure_factor_closed(Side::high, Sign::plus, f, dev, bath);
        double const back
            = structure_factor_closed(Side::low, Sign::plus, -f, dev, bath);
        CHECK(fwd * std::exp(f / kt) == Approx(back).epsilon(1e-12));

        DeviceParams flat = dev;
        flat.d_delta = 0;
        double const lf
            = structure_factor_closed(Side::low, Sign::plus, f, flat, bath);
        double const lb
            = structure_factor_closed(Side::low, Sign::plus, -f, flat, bath);
        CHECK(lf * std::exp(f / kt) == Approx(lb).epsilon(1e-12));
    }
    SUBCASE("minus factor at zero gap difference and frequency")
    {
        DeviceParams flat = dev;
        flat.d_delta = 0;
        flat.v_h = 0;
        QPBath const cold = bath_at(0.05, 1e-8);
        double const kt_c = units::thermal_energy(cold.temperature);
        double const x_l = xqp_low_film(cold.temperature, flat, 1e-8);
        double const pref = x_l * std::sqrt(flat.delta / (2 * units::pi * kt_c));
        double const low
            = structure_factor_closed(Side::low, Sign::minus, 0, flat, cold);
        double const high
            = structure_factor_closed(Side::high, Sign::minus, 0, flat, cold);
        CHECK(low == Approx(pref * kt_c / flat.delta_bar()).epsilon(1e-12));
        CHECK(low + high
              == Approx(pref * 2 * kt_c / flat.delta_bar()).epsilon(1e-12));
        double const exact = structure_factor_quadrature(Side::low, Sign::minus,
                                                         0, flat, cold);
        CHECK(rel(low, exact) < 0.01);
    }
    SUBCASE("quadrature decreases with gap difference")
    {
        DeviceParams d = dev;
        double prev = INFINITY;
        for (double dd = 0.5; dd <= 12; dd += 0.5)
        {
            d.d_delta = dd;
            double const s
                = structure_factor_quadrature(Side::low, Sign::plus, -0.25, d, bath);
            CHECK(s < prev);
            prev = s;
        }
    }
    SUBCASE("closed form converges to quadrature")
    {
        for (Side side : {Side::low, Side::high})
        {
            for (Sign sign : {Sign::plus, Sign::minus})
            {
                double prev_err = INFINITY;
                for (double scale : {1.0, 0.5, 0.25, 0.125, 0.0625})
                {
                    DeviceParams d = dev;
                    d.d_delta = 2.0 * scale;
                    double const f = 1.5 * scale;
                    QPBath const b = bath_at(0.08 * scale, 1e-9);
                    double const err = rel(
                        structure_factor_closed(side, sign, f, d, b),
                        structure_factor_quadrature(side, sign, f, d, b));
                    CHECK(err < prev_err);
                    prev_err = err;
                }
                CHECK(prev_err < 2e-3);
            }
        }
    }
    SUBCASE("resonant plus factor is singular")
    {
        CHECK_THROWS_AS(structure_factor_closed(Side::high, Sign::plus,
                                                dev.d_delta, dev, bath),
                        SingularInputError);
    }
}

TEST_CASE("tunneling rates")
{
    auto const big = big_gap_preset();
    DeviceParams const& dev = big.device;

    SUBCASE("detailed balance")
    {
        for (double t : {0.02, 0.05, 0.1, 0.2})
        {
            QPBath const b = bath_at(t, 6.3e-10);
            double const ratio
                = qp_tunnel_rate(0, 1, dev, b) / qp_tunnel_rate(1, 0, dev, b);
            CHECK(rel(ratio, std::exp(-dev.f_q / units::thermal_energy(t)))
                  < 1e-10);
        }
    }
    SUBCASE("1->2 is twice 0->1 when f_12 = f_q")
    {
        DeviceParams d = dev;
        d.f_12 = d.f_q;
        QPBath const b = bath_at(0.08, 6.3e-10);
        CHECK(qp_tunnel_rate(1, 2, d, b)
              == Approx(2 * qp_tunnel_rate(0, 1, d, b)).epsilon(1e-12));
    }
    SUBCASE("big gap-difference limit")
    {
        QPBath const b = bath_at(0.07, 6.3e-10);
        double const kt = units::thermal_energy(0.07);
        double const act = dev.d_delta - dev.f_q;
        double const limit = dev.f_q * 1e9 * std::sqrt(2 * dev.delta / act)
                             * std::exp(-act / kt) * 6.3e-10;
        CHECK(rel(qp_tunnel_rate(1, 0, dev, b), limit) < 0.2);
    }
    SUBCASE("Arrhenius slope in the big regime")
    {
        // Least-squares slope of ln(gamma10) against 1/T
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (double t = 0.04; t <= 0.0901; t += 0.005)
        {
            auto const a = asymptotic_rates(Regime::big, dev, bath_at(t, 1e-9));
            double const x = 1 / t;
            double const y = std::log(a.gamma10);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
        double const slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        double const expected = -(dev.d_delta - dev.f_q) / units::kb_over_h;
        CHECK(rel(slope, expected) < 0.02);
    }
    SUBCASE("zero gap-difference limit")
    {
        DeviceParams d = small_gap_preset().device;
        d.v_h = d.v_l;
        QPBath const b = bath_at(0.03, 1e-9);
        auto const a = asymptotic_rates(Regime::zero, d, b);
        double const expected
            = std::sqrt(8 * d.delta * d.f_q) * 1e9 * 1e-9 / 2;
        CHECK(a.gamma10 == Approx(expected).epsilon(1e-12));
    }
    SUBCASE("zero density and cold bath give zero rates")
    {
        auto const r = parity_switch_rates(dev, bath_at(0.005, 0));
        for (int i = 0; i < 3; ++i)
        {
            for (int j = 0; j < 3; ++j)
            {
                CHECK(r(i, j) < 1e-150);
            }
        }
    }
    SUBCASE("linear in the resident density")
    {
        auto const r1 = parity_switch_rates(dev, bath_at(0.03, 1e-9));
        auto const r2 = parity_switch_rates(dev, bath_at(0.03, 2e-9));
        CHECK(r2.gamma1_qp == Approx(2 * r1.gamma1_qp).epsilon(1e-9));
        CHECK(r2.gamma0_qp == Approx(2 * r1.gamma0_qp).epsilon(1e-9));
        CHECK(r2(1, 0) == Approx(2 * r1(1, 0)).epsilon(1e-9));
    }
    SUBCASE("small device relaxation is flat over 30-90 mK")
    {
        auto const small = small_gap_preset();
        double lo = INFINITY, hi = 0;
        for (double t = 0.03; t <= 0.0901; t += 0.01)
        {
            double const g
                = parity_switch_rates(small.device, bath_at(t, small.x_ne))(1, 0);
            lo = std::min(lo, g);
            hi = std::max(hi, g);
        }
        CHECK(hi / lo < 1.25);
    }
}

TEST_CASE("low-film density")
{
    auto const dev = big_gap_preset().device;
    CHECK(zeta(0.005, dev) == Approx(1).epsilon(1e-9));
    CHECK(xqp_low_film(0.005, dev, 1e-9) == Approx(1e-9).epsilon(1e-9));

    DeviceParams no_high = dev;
    no_high.v_h = 0;
    CHECK(zeta(0.1, no_high) == 1);

    DeviceParams tiny = dev;
    tiny.d_delta = 0.01;
    double const t = 100 * tiny.d_delta / units::kb_over_h;
    double const limit = tiny.v_l / (tiny.v_l + tiny.v_h);
    // Leading corrections are of order dDelta / kT
    CHECK(rel(zeta(t, tiny), limit) < 0.01 + tiny.d_delta / tiny.delta);
}

TEST_CASE("thermometry")
{
    double const f_q = 4.27;
    CHECK(qubit_temperature(1.0, std::exp(-2.0), f_q)
          == Approx(f_q / (2 * units::kb_over_h)).epsilon(1e-12));
    CHECK(qubit_temperature(1.0, 0.0, f_q) == 0);
    CHECK_THROWS_AS(qubit_temperature(1.0, 2.0, f_q), DomainError);

    auto const dev = big_gap_preset().device;
    for (double t : {0.03, 0.09, 0.15})
    {
        QPBath const b = bath_at(t, 3e-6);
        double const g10 = qp_tunnel_rate(1, 0, dev, b);
        double const g01 = qp_tunnel_rate(0, 1, dev, b);
        CHECK(rel(qubit_temperature(g10, g01, dev.f_q), t) < 1e-10);

        double const x_l = xqp_low_film(t, dev, 3e-6);
        CHECK(rel(xqp_from_excess(g10, g01, t, dev), x_l) < 1e-8);
        CHECK(xqp_from_excess(2 * g10, 2 * g01, t, dev)
              == Approx(2 * xqp_from_excess(g10, g01, t, dev)));
    }
    // Excess relaxation of 1e4 /s at 90 mK
    double const d10 = 1e4;
    double const d01 = d10 * std::exp(-dev.f_q / units::thermal_energy(0.09));
    double const x = xqp_from_excess(d10, d01, 0.09, dev);
    CHECK(x > 1e-8);
    CHECK(x < 1e-5);
}

TEST_CASE("Debye chip heating")
{
    ChipThermalModel m;
    m.debye_prefactor = 0.23;
    m.t_debye = 1000;
    double const t = 0.1;
    double const low_t = m.debye_prefactor * std::pow(units::pi, 4) / 15
                         * std::pow(t, 4) / std::pow(m.t_debye, 3);
    CHECK(debye_energy(t, m) / low_t == Approx(1).epsilon(1e-6));

    for (double e = 1e-16; e <= 1e-12; e *= 10)
    {
        CHECK(rel(debye_energy(debye_temperature(e, m), m), e) < 1e-8);
    }
    double const lo = debye_temperature(100e3 * units::electron_volt, m);
    double const hi = debye_temperature(1e6 * units::electron_volt, m);
    CHECK(lo == Approx(0.060).epsilon(0.10));
    CHECK(hi == Approx(0.100).epsilon(0.10));
}
