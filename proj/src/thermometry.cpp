#include "qpburst/thermometry.hpp"

#include <cmath>

#include "qpburst/error.hpp"
#include "qpburst/tunneling.hpp"
#include "qpburst/units.hpp"

namespace qpburst
{
double qubit_temperature(double gamma10, double gamma01, double f_q)
{
    if (!(f_q > 0))
    {
        throw DomainError("qubit frequency must be positive");
    }
    if (gamma01 == 0)
    {
        return 0;
    }
    if (!(gamma01 > 0) || !(gamma10 > gamma01))
    {
        throw DomainError(
            "non-physical populations: excitation rate must be below "
            "relaxation rate");
    }
    return f_q / (units::kb_over_h * std::log(gamma10 / gamma01));
}

double xqp_from_excess(double d_gamma10, double d_gamma01, double t_q,
                       DeviceParams const& dev)
{
    if (!(t_q > 0))
    {
        throw DomainError("qubit temperature must be positive");
    }
    if (!(d_gamma10 >= 0) || !(d_gamma01 >= 0)
        || d_gamma10 + d_gamma01 == 0)
    {
        throw DomainError("excess rates must be non-negative, not both zero");
    }
    validate(dev);
    TunnelRates const unit = unit_tunnel_rates(t_q, dev);
    double const denom = unit(1, 0) + unit(0, 1);
    if (!(denom > 0) || !std::isfinite(denom))
    {
        throw DomainError("tunneling rates underflow at this temperature");
    }
    return (d_gamma10 + d_gamma01) / denom;
}

}  // namespace qpburst
