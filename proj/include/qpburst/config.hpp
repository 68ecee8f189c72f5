#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "burst_analysis.hpp"
#include "debye.hpp"
#include "model_fitting.hpp"
#include "parity_hmm.hpp"
#include "simulator.hpp"

namespace qpburst
{
//---------------------------------------------------------------------------//
//! Value of one key with the line it was read from.
struct IniEntry
{
    std::string value;
    int line{0};
};

//! Sections of key = value pairs; '#' and ';' start comments.
using IniDocument = std::map<std::string, std::map<std::string, IniEntry>>;

//! Throws ParseError with the offending line number.
IniDocument parse_ini(std::istream& is);

//---------------------------------------------------------------------------//
//! Every parameter a command can read from a config file.
struct RunConfig
{
    SimulationConfig simulation;
    std::size_t traces{1};
    std::optional<std::uint64_t> seed;

    DetectionConfig detection;
    RecoveryOptions recovery;
    bool thermometry{false};
    //! Exponential fit window of the recovery curve [s]; end defaults to t_after
    double recovery_fit_start{3e-3};
    std::optional<double> recovery_fit_end;

    HmmParams hmm_init{1.0, 0.05, 0};

    FitParams fit_init;
    SweepFitOptions fit_options;

    std::vector<double> temperatures;  //!< Grid for rate tables [K]

    ChipThermalModel chip;
    std::vector<double> deposit_energies_ev{100e3, 1e6};
};

/*!
 * Read a run configuration.
 *
 * A device preset named in [device] is applied before any other key, so
 * explicit keys override it. Unknown sections or keys are errors.
 */
RunConfig load_config(std::istream& is);
RunConfig load_config_file(std::filesystem::path const& path);

//! Apply a Table-I preset to the device, steady state and fit start.
void apply_preset(DevicePreset const& preset, RunConfig& config);

}  // namespace qpburst
