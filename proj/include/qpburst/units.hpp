#pragma once

//! \file units.hpp
//! Unit conventions: energies in GHz (E/h), rates in 1/s, temperature in K.

namespace qpburst::units
{
//! Boltzmann constant over Planck constant [GHz/K]
inline constexpr double kb_over_h = 20.836619;
//! GHz to 1/s
inline constexpr double ghz = 1.0e9;
//! Boltzmann constant [J/K]
inline constexpr double boltzmann = 1.380649e-23;
//! Electron-volt [J]
inline constexpr double electron_volt = 1.602176634e-19;
//! Seconds per minute
inline constexpr double minute = 60.0;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double euler_gamma = 0.57721566490153286061;

//! Thermal energy k_B T in GHz
constexpr double thermal_energy(double kelvin)
{
    return kb_over_h * kelvin;
}

}  // namespace qpburst::units
