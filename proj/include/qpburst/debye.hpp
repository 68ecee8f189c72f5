#pragma once

namespace qpburst
{
//! Debye heat-capacity model of the chip substrate.
struct ChipThermalModel
{
    double debye_prefactor{0.23};  //!< 9 N k_B [J/K]
    double t_debye{1000};  //!< Debye temperature [K]
    double base_temperature{0};  //!< Temperature before energy deposit [K]
};

void validate(ChipThermalModel const& model);

//! Internal energy U(T) relative to T = 0 [J].
double debye_energy(double temperature, ChipThermalModel const& model);

/*!
 * Temperature reached after depositing \c energy [J] on a chip that starts at
 * the model's base temperature. With zero base temperature this inverts
 * debye_energy.
 */
double debye_temperature(double energy, ChipThermalModel const& model);

}  // namespace qpburst
