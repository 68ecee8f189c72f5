#include "qpburst/device.hpp"

#include <cmath>

#include "qpburst/error.hpp"
#include "qpburst/units.hpp"

namespace qpburst
{
double DeviceParams::transition_frequency(int i, int j) const
{
    auto level = [this](int k) {
        if (k < 0 || k > 2)
        {
            throw DomainError("qubit level " + std::to_string(k)
                              + " outside supported range 0..2");
        }
        double const e[] = {0.0, f_q, f_q + f12()};
        return e[k];
    };
    return level(j) - level(i);
}

void validate(DeviceParams const& dev)
{
    if (!(dev.e_j > 0) || !(dev.e_c > 0))
    {
        throw DomainError("e_j and e_c must be positive");
    }
    if (!(dev.e_j / dev.e_c > 10))
    {
        throw DomainError("e_j/e_c must exceed 10 (transmon limit)");
    }
    if (!(dev.f_q > 0))
    {
        throw DomainError("f_q must be positive");
    }
    if (!(dev.delta > 0) || dev.delta < 5 * dev.f_q)
    {
        throw DomainError("delta must be positive and at least 5 f_q");
    }
    if (!(dev.d_delta >= 0))
    {
        throw DomainError("d_delta must be non-negative");
    }
    if (!(dev.v_l > 0) || !(dev.v_h >= 0))
    {
        throw DomainError("film volumes must satisfy v_l > 0, v_h >= 0");
    }
    if (dev.f_12 && !(*dev.f_12 > 0))
    {
        throw DomainError("f_12 must be positive");
    }
}

void validate(QPBath const& bath, DeviceParams const& dev)
{
    if (!(bath.temperature > 0))
    {
        throw DomainError("bath temperature must be positive");
    }
    if (!(bath.x_qp_ne >= 0))
    {
        throw DomainError("x_qp_ne must be non-negative");
    }
    if (bath.mu)
    {
        double const expected = chemical_potential(
            QPBath{bath.temperature, bath.x_qp_ne, std::nullopt}, dev);
        double const kt = units::thermal_energy(bath.temperature);
        // Relative tolerance on x translates to absolute tolerance on mu/kT
        if (std::fabs(*bath.mu - expected) > 1e-9 * kt)
        {
            throw DomainError("chemical potential inconsistent with density");
        }
    }
}

double zeta(double temperature, DeviceParams const& dev)
{
    if (!(temperature > 0))
    {
        throw DomainError("temperature must be positive");
    }
    double const kt = units::thermal_energy(temperature);
    double const ratio = dev.v_h / dev.v_l;
    return 1.0
           / (1.0
              + ratio * std::sqrt(dev.delta_high() / dev.delta)
                    * std::exp(-dev.d_delta / kt));
}

double xqp_low_film(double temperature, DeviceParams const& dev, double x_ne)
{
    double const z = zeta(temperature, dev);
    double const kt = units::thermal_energy(temperature);
    double const thermal = std::sqrt(2 * units::pi * kt / dev.delta)
                           * std::exp(-dev.delta / kt);
    return z * x_ne + thermal;
}

double chemical_potential(QPBath const& bath, DeviceParams const& dev)
{
    double const kt = units::thermal_energy(bath.temperature);
    double const x = xqp_low_film(bath.temperature, dev, bath.x_qp_ne);
    return dev.delta
           + kt * std::log(x * std::sqrt(dev.delta / (2 * units::pi * kt)));
}

//---------------------------------------------------------------------------//
// Film volumes are taken proportional to the junction film thicknesses
// (thin high-gap film / thick low-gap film).

DevicePreset big_gap_preset()
{
    DevicePreset p;
    p.device.name = "big";
    p.device.e_j = 5.78;
    p.device.e_c = 0.34;
    p.device.f_q = 3.57;
    p.device.delta = 45.2;
    p.device.d_delta = 8.2;
    p.device.v_l = 83;
    p.device.v_h = 17;
    p.x_ne = 6.3e-10;
    p.gamma0_ph = 0.22;
    p.gamma1_ph = 0.40;
    p.t1 = 115e-6;
    p.d_delta_err = 0.4;
    p.delta_err = 0.4;
    return p;
}

DevicePreset medium_gap_preset()
{
    DevicePreset p;
    p.device.name = "medium";
    p.device.e_j = 9.55;
    p.device.e_c = 0.35;
    p.device.f_q = 4.78;
    p.device.delta = 46.1;
    p.device.d_delta = 5.8;
    p.device.v_l = 123;
    p.device.v_h = 23;
    p.x_ne = 1.0e-10;
    p.gamma0_ph = 0.24;
    p.gamma1_ph = 0.24;
    p.tied_photon_rates = true;
    p.t1 = 82e-6;
    p.d_delta_err = 0.1;
    p.delta_err = 0.1;
    return p;
}

DevicePreset small_gap_preset()
{
    DevicePreset p;
    p.device.name = "small";
    p.device.e_j = 7.71;
    p.device.e_c = 0.35;
    p.device.f_q = 4.27;
    p.device.delta = 45.1;
    p.device.d_delta = 0.0;
    p.device.v_l = 106;
    p.device.v_h = 85;
    p.x_ne = 1.9e-10;
    p.gamma0_ph = 0.52;
    p.gamma1_ph = 0.52;
    p.tied_photon_rates = true;
    p.t1 = 88e-6;
    p.d_delta_err = 1.1;
    p.delta_err = 0.4;
    return p;
}

std::vector<DevicePreset> all_presets()
{
    return {big_gap_preset(), medium_gap_preset(), small_gap_preset()};
}

DevicePreset find_preset(std::string const& name)
{
    for (auto const& p : all_presets())
    {
        if (p.device.name == name)
        {
            return p;
        }
    }
    throw DomainError("unknown device preset '" + name + "'");
}

}  // namespace qpburst
