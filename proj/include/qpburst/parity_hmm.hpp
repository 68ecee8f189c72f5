#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "trace.hpp"

namespace qpburst
{
//! Observed parity labels at a fixed sampling interval.
struct ParityTrace
{
    std::vector<Parity> outcomes;
    double dt{0};  //!< [s]
};

struct HmmParams
{
    double switch_rate{0};  //!< [1/s]
    double assign_error{0};  //!< Probability of reading the opposite label
    double unknown_prob{0};  //!< Probability of an unresolved label
};

struct HmmFitResult
{
    HmmParams params;
    double log_likelihood{0};
    std::pair<double, double> rate_ci{0, 0};  //!< 68% interval [1/s]
    std::pair<double, double> rate_ci95{0, 0};  //!< 95% interval [1/s]
    //! Flip probability or assignment error pinned near 1/2
    bool identifiability_flag{false};
    //! Estimate sits at the lower rate bound (no resolvable switching)
    bool at_lower_bound{false};
    bool short_trace{false};
    int evaluations{0};
};

//! Per-step flip probability of the hidden parity: (1 - exp(-2 G dt)) / 2
double flip_probability(double switch_rate, double dt);

//! Exact log-likelihood from the scaled two-state forward filter.
double hmm_log_likelihood(ParityTrace const& trace, HmmParams const& params);

/*!
 * Maximum-likelihood switching rate and assignment error.
 *
 * The unknown-label probability is its observed frequency. Intervals come
 * from the curvature of the profile likelihood in ln(rate).
 */
HmmFitResult fit_switch_rate(ParityTrace const& trace, HmmParams const& init);

//! Draw a trace from the hidden Markov model.
ParityTrace synthesize_parity_trace(HmmParams const& params, double dt,
                                    std::size_t n, std::uint64_t seed);

//! Parity column of a readout trace.
ParityTrace parity_trace_from(Trace const& trace);

}  // namespace qpburst
