#pragma once

namespace qpburst
{
//---------------------------------------------------------------------------//
/*!
 * Modified Bessel functions of the second kind, orders 0 and 1.
 *
 * Power series for x <= 2, Steed's continued fraction (CF2) above. Relative
 * error is near machine precision over [1e-300, 700]; values underflow to
 * zero beyond x = 710. Throws DomainError for x <= 0 or order not in {0, 1}.
 */
double bessel_k(int order, double x);

//! exp(x) * K_order(x), finite for all x > 0.
double bessel_k_scaled(int order, double x);

//! x * K_1(x / 2) as a function of (x, scale); finite limit 2 at x -> 0.
//! Evaluates y*K1(y/(2s)) with the y = 0 limit 2s handled exactly.
double y_bessel_k1(double y, double scale);

}  // namespace qpburst
