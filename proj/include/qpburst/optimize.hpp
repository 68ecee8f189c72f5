#pragma once

#include <functional>
#include <span>
#include <vector>

namespace qpburst
{
struct NelderMeadOptions
{
    int max_evaluations{2000};
    double f_tolerance{1e-10};  //!< Absolute spread of simplex values
    double x_tolerance{1e-9};  //!< Simplex diameter
    double initial_step{0.5};
};

struct NelderMeadResult
{
    std::vector<double> x;
    double value{0};
    int evaluations{0};
    bool converged{false};
};

using Objective = std::function<double(std::span<double const>)>;

/*!
 * Minimize a function with the Nelder-Mead simplex method.
 *
 * Trial points are clamped into [lower, upper] when bounds are given.
 */
NelderMeadResult nelder_mead(Objective const& f, std::vector<double> x0,
                             NelderMeadOptions const& options = {},
                             std::vector<double> const& lower = {},
                             std::vector<double> const& upper = {});

}  // namespace qpburst
