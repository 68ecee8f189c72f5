#pragma once

#include "device.hpp"

namespace qpburst
{
//---------------------------------------------------------------------------//
/*!
 * Effective qubit temperature from the detailed-balance ratio [K].
 *
 * Returns 0 when the excitation rate vanishes. Throws DomainError when the
 * excitation rate is not smaller than the relaxation rate.
 */
double qubit_temperature(double gamma10, double gamma01, double f_q);

//---------------------------------------------------------------------------//
/*!
 * Low-film QP density implied by excess transition rates at temperature t_q.
 *
 * Divides the summed excess rates by the summed 1->0 and 0->1 tunneling
 * rates per unit density. The result is the density x^L in the low-gap
 * film, which is the density the tunneling rates respond to.
 */
double xqp_from_excess(double d_gamma10, double d_gamma01, double t_q,
                       DeviceParams const& dev);

}  // namespace qpburst
