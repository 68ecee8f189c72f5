#include "qpburst/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qpburst/error.hpp"

namespace qpburst
{
NelderMeadResult nelder_mead(Objective const& f, std::vector<double> x0,
                             NelderMeadOptions const& options,
                             std::vector<double> const& lower,
                             std::vector<double> const& upper)
{
    std::size_t const n = x0.size();
    if (n == 0)
    {
        throw DomainError("nelder_mead: empty parameter vector");
    }
    if ((!lower.empty() && lower.size() != n)
        || (!upper.empty() && upper.size() != n))
    {
        throw DomainError("nelder_mead: bound size mismatch");
    }
    auto clamp = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < n; ++i)
        {
            if (!lower.empty())
            {
                x[i] = std::max(x[i], lower[i]);
            }
            if (!upper.empty())
            {
                x[i] = std::min(x[i], upper[i]);
            }
        }
    };

    int evals = 0;
    auto eval = [&](std::vector<double> const& x) {
        ++evals;
        double const v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };

    clamp(x0);
    std::vector<std::vector<double>> simplex(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i)
    {
        simplex[i + 1][i] += options.initial_step;
        clamp(simplex[i + 1]);
        if (simplex[i + 1][i] == x0[i])
        {
            simplex[i + 1][i] -= options.initial_step;
            clamp(simplex[i + 1]);
        }
    }
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
    {
        values[i] = eval(simplex[i]);
    }

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n);
    std::vector<double> trial(n);
    std::vector<double> trial2(n);
    bool converged = false;

    auto point = [&](double coef, std::vector<double>& out) {
        // centroid + coef * (centroid - worst)
        std::vector<double> const& worst = simplex[order[n]];
        for (std::size_t i = 0; i < n; ++i)
        {
            out[i] = centroid[i] + coef * (centroid[i] - worst[i]);
        }
        clamp(out);
    };

    while (evals < options.max_evaluations)
    {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return values[a] < values[b];
        });
        double diameter = 0;
        for (std::size_t k = 1; k <= n; ++k)
        {
            for (std::size_t i = 0; i < n; ++i)
            {
                diameter = std::max(
                    diameter,
                    std::fabs(simplex[order[k]][i] - simplex[order[0]][i]));
            }
        }
        if (values[order[n]] - values[order[0]] <= options.f_tolerance
            && diameter <= options.x_tolerance)
        {
            converged = true;
            break;
        }
        if (diameter <= 1e-3 * options.x_tolerance)
        {
            // Collapsed onto a bound or a flat ridge
            converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k = 0; k < n; ++k)
        {
            for (std::size_t i = 0; i < n; ++i)
            {
                centroid[i] += simplex[order[k]][i] / n;
            }
        }
        std::size_t const worst = order[n];
        double const best_v = values[order[0]];
        double const second_v = values[order[n - 1]];

        point(1.0, trial);
        double const fr = eval(trial);
        if (fr < best_v)
        {
            point(2.0, trial2);
            double const fe = eval(trial2);
            if (fe < fr)
            {
                simplex[worst] = trial2;
                values[worst] = fe;
            }
            else
            {
                simplex[worst] = trial;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < second_v)
        {
            simplex[worst] = trial;
            values[worst] = fr;
            continue;
        }
        bool const outside = fr < values[worst];
        point(outside ? 0.5 : -0.5, trial2);
        double const fc = eval(trial2);
        if (fc < std::min(fr, values[worst]))
        {
            simplex[worst] = trial2;
            values[worst] = fc;
            continue;
        }
        // Shrink toward the best vertex
        std::vector<double> const& best = simplex[order[0]];
        for (std::size_t k = 1; k <= n; ++k)
        {
            auto& v = simplex[order[k]];
            for (std::size_t i = 0; i < n; ++i)
            {
                v[i] = best[i] + 0.5 * (v[i] - best[i]);
            }
            clamp(v);
            values[order[k]] = eval(v);
        }
    }

    std::size_t const best = static_cast<std::size_t>(
        std::min_element(values.begin(), values.end()) - values.begin());
    NelderMeadResult result;
    result.x = simplex[best];
    result.value = values[best];
    result.evaluations = evals;
    result.converged = converged;
    return result;
}

}  // namespace qpburst
