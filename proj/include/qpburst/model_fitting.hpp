#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>
#include <Eigen/Dense>

#include "device.hpp"

namespace qpburst
{
//---------------------------------------------------------------------------//
// PARITY-SWITCHING RATE VS EXCITED POPULATION
//---------------------------------------------------------------------------//
struct PopulationPoint
{
    double p1{0};  //!< Excited-state population
    double gamma{0};  //!< Measured parity-switching rate [1/s]
    double gamma_err{0};
};

struct StateRates
{
    double gamma0{0};
    double gamma0_err{0};
    double gamma1{0};
    double gamma1_err{0};
    double covariance{0};
};

//! Weighted line through Gamma(p1), evaluated at p1 = 0 and p1 = 1.
StateRates extrapolate_gamma01(std::span<PopulationPoint const> points);

//---------------------------------------------------------------------------//
// TEMPERATURE SWEEP
//---------------------------------------------------------------------------//
struct SweepPoint
{
    double temperature{0};  //!< [K]
    double gamma0{0};  //!< [1/s]
    double gamma0_err{0};
    double gamma1{0};
    double gamma1_err{0};
};

struct TempSweepData
{
    std::vector<SweepPoint> points;
};

void validate(TempSweepData const& data);

struct FitParams
{
    double x_ne{0};
    double delta{0};  //!< [GHz]
    double d_delta{0};  //!< [GHz]
    double gamma0_ph{0};  //!< [1/s]
    double gamma1_ph{0};  //!< [1/s]
};

//! Order of parameters in covariance matrices.
enum FitIndex
{
    fit_x_ne = 0,
    fit_delta,
    fit_d_delta,
    fit_gamma0_ph,
    fit_gamma1_ph,
    fit_size
};

struct SweepFitOptions
{
    bool tie_photon_rates{false};  //!< Fit a single photon rate
    //! 0: automatic (log residuals when rates span over two decades)
    int log_residuals{0};
    //! Starting gap differences; empty uses a grid over [0, Delta/4]
    std::vector<double> d_delta_starts;
    int max_iterations{300};
};

struct FitResult
{
    FitParams params;
    Eigen::Matrix<double, fit_size, fit_size> covariance;
    std::array<double, fit_size> sigma{};
    double chi2{0};
    int dof{0};
    bool log_space{false};
    bool covariance_reliable{true};
    bool converged{false};
    int starts{0};
};

//! Model parity-switching rates (Gamma_0, Gamma_1) including photons.
std::pair<double, double> sweep_model(double temperature,
                                      DeviceParams const& geometry,
                                      FitParams const& params);

/*!
 * Fit the steady-state tunneling model to a temperature sweep.
 *
 * The geometry supplies E_J, E_C, f_q and the film volumes; its gaps are
 * replaced by the fitted ones. Multi-starts over the gap difference avoid
 * the resonances with f_q and f_12.
 */
FitResult fit_temperature_sweep(TempSweepData const& data,
                                DeviceParams const& geometry,
                                FitParams const& init,
                                SweepFitOptions const& options = {});

//! Chi-square of given parameters with the same residuals as the fit.
double sweep_chi2(TempSweepData const& data, DeviceParams const& geometry,
                  FitParams const& params, bool log_space);

//! Model rates at \c temps, optionally with multiplicative Gaussian noise.
TempSweepData synthesize_sweep(DeviceParams const& geometry,
                               FitParams const& truth,
                               std::span<double const> temps,
                               double relative_noise, std::uint64_t seed);

//---------------------------------------------------------------------------//
// DERIVED QUANTITIES
//---------------------------------------------------------------------------//
struct NormalizedRate
{
    double value{0};  //!< [1/s]
    bool below_photon_floor{false};
};

//! (gamma1 - gamma1_ph) / x_ne
NormalizedRate normalized_rate(double gamma1, double gamma1_ph, double x_ne);

struct GapThicknessPoint
{
    double thickness{0};  //!< [nm]
    double delta{0};  //!< [GHz]
    double delta_err{0};
};

struct GapThicknessFit
{
    double a{0};  //!< [GHz nm]
    double a_err{0};
    double delta0{0};  //!< [GHz]
    double delta0_err{0};
    double covariance{0};
    double chi2{0};
    int dof{0};
};

//! Weighted fit of Delta = a / d + Delta_0.
GapThicknessFit fit_gap_thickness(std::span<GapThicknessPoint const> points);

//! Q = 2 pi f_q T1, with f_q in GHz and T1 in seconds.
double quality_factor(double f_q, double t1);

//---------------------------------------------------------------------------//
// FILES
//---------------------------------------------------------------------------//
//! Columns T_kelvin,gamma0,gamma0_err,gamma1,gamma1_err
TempSweepData read_sweep_csv(std::istream& is);
void write_sweep_csv(std::ostream& os, TempSweepData const& data);

//! Key-value report with parameters, sigmas, covariance and chi-square.
void write_fit_result(std::ostream& os, FitResult const& result);

//! Columns thickness_nm,delta_ghz,delta_err
std::vector<GapThicknessPoint> read_gap_thickness_csv(std::istream& is);

}  // namespace qpburst
