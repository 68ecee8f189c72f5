#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "debye.hpp"
#include "device.hpp"
#include "trace.hpp"
#include "tunneling.hpp"
#include "units.hpp"

namespace qpburst
{
//---------------------------------------------------------------------------//
//! Poisson-arriving QP bursts with a time-dependent density and temperature.
struct BurstProcess
{
    double arrival_rate{0};  //!< [1/min]
    double energy_min{100e3 * units::electron_volt};  //!< [J]
    double energy_max{1e6 * units::electron_volt};  //!< [J]
    double xqp_peak_per_joule{1.6e8};  //!< Peak x_QP per deposited joule
    double tau_x{0.7e-3};  //!< QP density decay [s]
    double t_spike{0.2};  //!< Initial temperature [K]
    double tau_spike{50e-6};  //!< Spike decay [s]
    double t_burst{0.09};  //!< Plateau temperature [K]; <= 0 uses Debye
    double tau_temp{6.3e-3};  //!< Plateau decay [s]
    ChipThermalModel chip;
};

//! Episodes of enhanced non-QP relaxation from a lossy defect.
struct TlsProcess
{
    double arrival_rate{0};  //!< [1/min]
    double duration_mean{50e-3};  //!< [s]
    double rate_multiplier{5};
};

enum class ResetPolicy
{
    stabilize_excited,  //!< pi pulse whenever the readout reports |0>
    passive
};

struct MeasurementModel
{
    double dt{5.7e-6};  //!< Readout cycle [s]
    //! Row: true level, column: reported level
    std::array<std::array<double, 3>, 3> level_confusion{
        {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    bool parity_readable{false};
    double parity_error{0};  //!< Probability of reporting the wrong parity
    double unknown_prob{0};  //!< Probability of an unresolved parity
    ResetPolicy reset_policy{ResetPolicy::stabilize_excited};
};

//! Burst-free environment of the qubit.
struct SteadyState
{
    QPBath bath{0.02, 0, std::nullopt};
    double gamma0_ph{0};  //!< Photon-assisted parity switching in |0> [1/s]
    double gamma1_ph{0};  //!< Same in |1> and |2> [1/s]
    double t1{100e-6};  //!< Steady relaxation time [s]
    double leak_rate{0};  //!< Non-QP 1 -> 2 rate [1/s]
};

//! Burst placed at a fixed time, in addition to the random ones.
struct ScheduledBurst
{
    double time{0};  //!< [s]
    double x_peak{0};
    double t_burst{-1};  //!< <= 0 uses the process setting
};

struct ScheduledTls
{
    double start{0};
    double duration{0};
};

struct SimulationConfig
{
    DeviceParams device;
    SteadyState steady;
    BurstProcess bursts;
    TlsProcess tls;
    MeasurementModel measurement;
    double duration{90};  //!< [s]
    int initial_level{-1};  //!< < 0: |1> if stabilizing, else |0>
    Parity initial_parity{Parity::even};
    bool record_truth{false};
    double discard_probability{0.06};
    std::vector<ScheduledBurst> scheduled_bursts;
    std::vector<ScheduledTls> scheduled_tls;
};

void validate(SimulationConfig const& config);

//! Number of readouts in a trace: floor(duration / dt)
std::size_t sample_count(double duration, double dt);

//---------------------------------------------------------------------------//
//! Burst as realized in a simulated trace.
struct InjectedBurst
{
    double time{0};  //!< Onset [s], aligned to a cycle boundary
    std::uint64_t onset_sample{0};  //!< First readout affected
    double energy{0};  //!< [J], zero for scheduled bursts
    double x_peak{0};
    double t_burst{0};  //!< [K]
};

struct InjectedTls
{
    std::uint64_t start_sample{0};
    std::uint64_t end_sample{0};
};

struct SimulationTruth
{
    std::vector<InjectedBurst> bursts;
    std::vector<InjectedTls> tls;
    bool discard{false};
};

//---------------------------------------------------------------------------//
//! Joint (level, parity) index: 2 * level + parity.
inline constexpr int n_joint_states = 6;

struct RateMatrix
{
    std::array<std::array<double, n_joint_states>, n_joint_states> rate{};

    double total_out(int s) const
    {
        double sum = 0;
        for (double r : rate[s])
        {
            sum += r;
        }
        return sum;
    }
};

struct BathSnapshot
{
    double temperature{0};  //!< [K]
    double x_burst{0};  //!< Burst contribution to the low-film density
    double x_low{0};  //!< Total low-film density
};

//---------------------------------------------------------------------------//
/*!
 * Transition rates over joint (level, parity) states.
 *
 * QP tunneling flips parity and may change the level; photon absorption
 * flips parity only. Non-QP relaxation supplies the rest of 1/T1 in the
 * steady state and is scaled during TLS episodes; its excitation partner
 * obeys detailed balance at the instantaneous temperature.
 */
class RateModel
{
  public:
    explicit RateModel(SimulationConfig const& config);

    BathSnapshot
    bath_at(double t, std::span<InjectedBurst const> active) const;

    void fill(BathSnapshot const& bath, bool tls_active, RateMatrix& out) const;

    RateMatrix instantaneous_rates(double t,
                                   std::span<InjectedBurst const> active,
                                   bool tls_active) const;

    //! Burst-free rates without interpolation
    RateMatrix const& steady_rates(bool tls_active) const
    {
        return tls_active ? steady_tls_ : steady_;
    }

    //! QP part of the steady 1 -> 0 rate
    double steady_qp_relaxation() const { return steady_qp_relax_; }
    //! Non-QP part of the steady 1 -> 0 rate
    double nonqp_relaxation() const { return nonqp_relax_; }

    //! Per-unit-density tunneling rates, interpolated when in range
    TunnelRates unit_rates(double temperature) const;

  private:
    SimulationConfig config_;
    double steady_qp_relax_{0};
    double nonqp_relax_{0};
    RateMatrix steady_;
    RateMatrix steady_tls_;

    // ln(gamma_ij) on a grid uniform in inverse temperature
    double beta_min_{0};
    double beta_step_{0};
    std::vector<std::array<double, 9>> table_;

    void fill_with(TunnelRates const& unit, BathSnapshot const& bath,
                   bool tls_active, RateMatrix& out) const;
};

//---------------------------------------------------------------------------//
/*!
 * Simulate one readout trace into reusable storage.
 *
 * The same (config, seed) pair always produces the same trace. Returns the
 * injected bursts and TLS episodes.
 */
SimulationTruth simulate_trace_into(SimulationConfig const& config,
                                    RateModel const& model,
                                    std::uint64_t seed, Trace& out);

SimulationTruth simulate_trace_into(SimulationConfig const& config,
                                    std::uint64_t seed, Trace& out);

Trace simulate_trace(SimulationConfig const& config, std::uint64_t seed,
                     SimulationTruth* truth = nullptr);

//! Peak density per joule giving a QP relaxation rate \c gamma10 [1/s] for
//! a burst of \c energy [J] at \c temperature.
double peak_coefficient_for_rate(DeviceParams const& dev, double temperature,
                                 double gamma10, double energy);

}  // namespace qpburst
