#pragma once

#include <optional>
#include <string>
#include <vector>

namespace qpburst
{
//---------------------------------------------------------------------------//
/*!
 * Static transmon and junction parameters.
 *
 * Energies are frequencies in GHz. The junction is formed by a low-gap film
 * (gap \c delta) and a high-gap film (gap \c delta + \c d_delta).
 */
struct DeviceParams
{
    std::string name;
    double e_j{0};  //!< Josephson energy [GHz]
    double e_c{0};  //!< Charging energy [GHz]
    double f_q{0};  //!< 0-1 transition frequency [GHz]
    std::optional<double> f_12;  //!< 1-2 frequency [GHz], default f_q - e_c
    double delta{0};  //!< Low-gap film gap [GHz]
    double d_delta{0};  //!< Gap difference [GHz]
    double v_l{1};  //!< Low-gap film volume
    double v_h{0};  //!< High-gap film volume
    std::optional<double> nu_0;  //!< Normal-state DOS (unused by rates)

    //! Average gap across the junction
    double delta_bar() const { return delta + 0.5 * d_delta; }
    //! Gap of the high-gap film
    double delta_high() const { return delta + d_delta; }
    //! 1-2 transition frequency
    double f12() const { return f_12 ? *f_12 : f_q - e_c; }
    //! Frequency absorbed by the qubit for the transition i -> j [GHz]
    double transition_frequency(int i, int j) const;
};

//! Throw DomainError if the device violates the transmon-limit invariants.
void validate(DeviceParams const& dev);

//---------------------------------------------------------------------------//
/*!
 * Quasiparticle environment.
 *
 * The optional chemical potential is a derived quantity; when present it must
 * reproduce the low-film density at the bath temperature.
 */
struct QPBath
{
    double temperature{0};  //!< [K]
    double x_qp_ne{0};  //!< Resident density in Cooper-pair units
    std::optional<double> mu;  //!< Chemical potential [GHz]
};

void validate(QPBath const& bath, DeviceParams const& dev);

//! Fraction of resident QPs that stay in the low-gap film.
double zeta(double temperature, DeviceParams const& dev);

//! Total QP density in the low-gap film: resident plus thermal.
double xqp_low_film(double temperature, DeviceParams const& dev, double x_ne);

//! Chemical potential [GHz] for the bath's low-film density.
double chemical_potential(QPBath const& bath, DeviceParams const& dev);

//---------------------------------------------------------------------------//
/*!
 * Measured device with its fitted steady-state environment.
 */
struct DevicePreset
{
    DeviceParams device;
    double x_ne{0};
    double gamma0_ph{0};  //!< [1/s]
    double gamma1_ph{0};  //!< [1/s]
    bool tied_photon_rates{false};
    double t1{0};  //!< Steady relaxation time [s]
    double d_delta_err{0};  //!< Quoted fit uncertainty of d_delta [GHz]
    double delta_err{0};
};

DevicePreset big_gap_preset();
DevicePreset medium_gap_preset();
DevicePreset small_gap_preset();
std::vector<DevicePreset> all_presets();
//! Look up "big", "medium" or "small"; throws DomainError otherwise
DevicePreset find_preset(std::string const& name);

}  // namespace qpburst
