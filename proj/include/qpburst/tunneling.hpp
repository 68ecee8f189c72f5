#pragma once

#include <array>

#include "device.hpp"

namespace qpburst
{
//! Film the tunneling quasiparticle starts in.
enum class Side
{
    low,
    high
};

//! Particle-hole interference: constructive (+) or destructive (-).
enum class Sign
{
    plus,
    minus
};

//---------------------------------------------------------------------------//
/*!
 * Leading-order structure factor S_sign^side[f_ij].
 *
 * With alpha = (dD + h f)/2 and Dbar = D + dD/2, the low side evaluates
 * x^L sqrt(D / 2 pi kT) K0(|dD + hf| / 2kT) exp(-(dD + hf) / 2kT) for the
 * plus sign and the same with K0 replaced by |dD + hf| / (2 Dbar) K1(...)
 * for the minus sign. The high side replaces |dD + hf| by |dD - hf| in the
 * Bessel argument only. Throws SingularInputError for a plus-sign factor
 * whose Bessel argument is exactly zero.
 */
double structure_factor_closed(Side side, Sign sign, double f_ij,
                               DeviceParams const& dev, QPBath const& bath);

//---------------------------------------------------------------------------//
/*!
 * Structure factor from the untruncated energy integral.
 *
 * Integrates the full coherence-factor integrand with both square-root
 * densities of states. Used as an oracle for the closed form. Throws
 * ConvergenceError with the achieved relative error estimate when the
 * tolerance is not met.
 */
double structure_factor_quadrature(Side side, Sign sign, double f_ij,
                                   DeviceParams const& dev,
                                   QPBath const& bath, double rel_tol = 1e-8);

//---------------------------------------------------------------------------//
/*!
 * QP tunneling rates between qubit levels 0..2 [1/s].
 */
struct TunnelRates
{
    std::array<std::array<double, 3>, 3> rate{};
    double gamma0_qp{0};
    double gamma1_qp{0};

    double operator()(int i, int j) const { return rate[i][j]; }
};

//! Rate i -> j summed over both tunneling directions [1/s].
double qp_tunnel_rate(int i, int j, DeviceParams const& dev,
                      QPBath const& bath);

//! All partial rates and the state-conditioned totals.
TunnelRates parity_switch_rates(DeviceParams const& dev, QPBath const& bath);

//! Rates per unit low-film density x^L at the given temperature.
TunnelRates unit_tunnel_rates(double temperature, DeviceParams const& dev);

//---------------------------------------------------------------------------//
enum class Regime
{
    zero,
    resonant,
    big
};

struct AsymptoticRates
{
    double gamma10{0};
    double gamma11{0};
    //! Whether the regime inequalities hold by at least a factor of 5
    bool regime_satisfied{false};
};

//! Limiting forms of the 1->0 and 1->1 rates in terms of x_qp_ne.
AsymptoticRates
asymptotic_rates(Regime regime, DeviceParams const& dev, QPBath const& bath);

}  // namespace qpburst
