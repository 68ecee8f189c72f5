#include "qpburst/bessel.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qpburst/error.hpp"
#include "qpburst/units.hpp"

namespace qpburst
{
namespace
{
constexpr double series_cutoff = 2.0;
constexpr double underflow_x = 710.0;

struct KPair
{
    double k0;
    double k1;
};

// Power series about x = 0. Terms of (x^2/4)^k / (k!)^2 decay fast for x<=2.
KPair series_k(double x)
{
    double const y = 0.25 * x * x;
    double const log_half = std::log(0.5 * x);

    // K0 = -(ln(x/2) + gamma) I0 + sum_{k>=1} t_k H_k
    // K1 = 1/x + ln(x/2) I1 - (x/4) sum_{k>=0} u_k (psi(k+1) + psi(k+2))
    double t = 1.0;  // y^k / (k!)^2
    double u = 1.0;  // y^k / (k! (k+1)!)
    double harmonic = 0.0;
    double i0 = 1.0;
    double i1_over_halfx = 1.0;
    double k0_sum = 0.0;
    double psi_sum = -2.0 * units::euler_gamma + 1.0;  // psi(1) + psi(2)
    double k1_sum = psi_sum;
    for (int k = 1; k < 60; ++k)
    {
        double const kd = k;
        t *= y / (kd * kd);
        u *= y / (kd * (kd + 1.0));
        harmonic += 1.0 / kd;
        i0 += t;
        i1_over_halfx += u;
        k0_sum += t * harmonic;
        // psi(k+1) + psi(k+2) = -2 gamma + 2 H_k + 1/(k+1)
        psi_sum = -2.0 * units::euler_gamma + 2.0 * harmonic
                  + 1.0 / (kd + 1.0);
        k1_sum += u * psi_sum;
        if (t < 1e-18 * i0 && u < 1e-18 * i1_over_halfx)
        {
            break;
        }
    }
    double const i1 = 0.5 * x * i1_over_halfx;
    KPair result;
    result.k0 = -(log_half + units::euler_gamma) * i0 + k0_sum;
    result.k1 = 1.0 / x + log_half * i1 - 0.25 * x * k1_sum;
    return result;
}

// Steed's method for the second continued fraction (Temme 1975), nu = 0.
// Returns exp(x) * K0(x), exp(x) * K1(x).
KPair scaled_cf2(double x)
{
    constexpr double eps = 1e-17;
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    double const a1 = 0.25;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 1; i < 100000; ++i)
    {
        a -= 2 * i;
        c = -a * c / (i + 1.0);
        double const qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        double const dels = q * delh;
        s += dels;
        if (std::fabs(dels / s) < eps)
        {
            break;
        }
    }
    h = a1 * h;
    KPair result;
    result.k0 = std::sqrt(units::pi / (2.0 * x)) / s;
    result.k1 = result.k0 * (x + 0.5 - h) / x;
    return result;
}

void check_args(int order, double x)
{
    if (order != 0 && order != 1)
    {
        throw DomainError("bessel_k: unsupported order "
                          + std::to_string(order));
    }
    if (!(x > 0.0))
    {
        throw DomainError("bessel_k: argument must be positive");
    }
}

}  // namespace

double bessel_k(int order, double x)
{
    check_args(order, x);
    if (x > underflow_x)
    {
        return 0.0;
    }
    if (x <= series_cutoff)
    {
        KPair const k = series_k(x);
        return order == 0 ? k.k0 : k.k1;
    }
    KPair const k = scaled_cf2(x);
    return (order == 0 ? k.k0 : k.k1) * std::exp(-x);
}

double bessel_k_scaled(int order, double x)
{
    check_args(order, x);
    if (x <= series_cutoff)
    {
        KPair const k = series_k(x);
        return (order == 0 ? k.k0 : k.k1) * std::exp(x);
    }
    KPair const k = scaled_cf2(x);
    return order == 0 ? k.k0 : k.k1;
}

double y_bessel_k1(double y, double scale)
{
    double const x = std::fabs(y) / (2.0 * scale);
    if (x < 1e-290)
    {
        // x K1(x) -> 1
        return 2.0 * scale;
    }
    return std::fabs(y) * bessel_k(1, x);
}

}  // namespace qpburst
