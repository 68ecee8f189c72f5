#include "qpburst/least_squares.hpp"

#include <algorithm>
#include <cmath>

#include "qpburst/error.hpp"

namespace qpburst
{
namespace
{
Eigen::VectorXd clamp_to(Eigen::VectorXd x, Eigen::VectorXd const& lower,
                         Eigen::VectorXd const& upper)
{
    return x.cwiseMax(lower).cwiseMin(upper);
}

bool all_finite(Eigen::VectorXd const& v)
{
    return v.allFinite();
}

}  // namespace

Eigen::MatrixXd numerical_jacobian(ResidualFunction const& f,
                                   Eigen::VectorXd const& x,
                                   Eigen::Index n_residuals, double step,
                                   Eigen::VectorXd const& lower,
                                   Eigen::VectorXd const& upper)
{
    Eigen::Index const n = x.size();
    Eigen::MatrixXd jac(n_residuals, n);
    Eigen::VectorXd r_plus(n_residuals);
    Eigen::VectorXd r_minus(n_residuals);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        double const h = step * std::max(1.0, std::abs(x[i]));
        double const hi = std::min(x[i] + h, upper[i]);
        double const lo = std::max(x[i] - h, lower[i]);
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        xp[i] = hi;
        xm[i] = lo;
        if (hi == lo)
        {
            jac.col(i).setZero();
            continue;
        }
        f(xp, r_plus);
        f(xm, r_minus);
        jac.col(i) = (r_plus - r_minus) / (hi - lo);
    }
    return jac;
}

LsqResult levenberg_marquardt(ResidualFunction const& f, Eigen::VectorXd x0,
                              Eigen::Index n_residuals,
                              Eigen::VectorXd const& lower,
                              Eigen::VectorXd const& upper,
                              LsqOptions const& options)
{
    Eigen::Index const n = x0.size();
    if (lower.size() != n || upper.size() != n)
    {
        throw DomainError("bounds must match the parameter count");
    }
    LsqResult result;
    Eigen::VectorXd x = clamp_to(std::move(x0), lower, upper);
    Eigen::VectorXd r(n_residuals);
    f(x, r);
    ++result.evaluations;
    if (!all_finite(r))
    {
        throw ConvergenceError("residuals not finite at the starting point",
                               INFINITY);
    }
    double chi2 = r.squaredNorm();
    double lambda = options.initial_damping;

    Eigen::VectorXd r_new(n_residuals);
    for (int iter = 0; iter < options.max_iterations; ++iter)
    {
        result.iterations = iter + 1;
        if (chi2 == 0)
        {
            result.converged = true;
            break;
        }
        Eigen::MatrixXd const jac = numerical_jacobian(
            f, x, n_residuals, options.jacobian_step, lower, upper);
        result.evaluations += static_cast<int>(2 * n);
        Eigen::MatrixXd const a = jac.transpose() * jac;
        Eigen::VectorXd const g = jac.transpose() * r;
        if (g.cwiseAbs().maxCoeff() <= options.g_tolerance * chi2)
        {
            result.converged = true;
            break;
        }
        Eigen::VectorXd diag = a.diagonal();
        double const diag_floor = 1e-12 * std::max(diag.maxCoeff(), 1e-300);
        diag = diag.cwiseMax(diag_floor);

        bool accepted = false;
        bool small_step = false;
        while (!accepted)
        {
            Eigen::MatrixXd damped = a;
            damped.diagonal() += lambda * diag;
            Eigen::VectorXd const delta = damped.ldlt().solve(-g);
            Eigen::VectorXd const x_new = clamp_to(x + delta, lower, upper);
            Eigen::VectorXd const step = x_new - x;
            if (step.norm()
                <= options.x_tolerance * (x.norm() + options.x_tolerance))
            {
                small_step = true;
                break;
            }
            f(x_new, r_new);
            ++result.evaluations;
            double const chi2_new
                = all_finite(r_new) ? r_new.squaredNorm() : INFINITY;
            if (chi2_new < chi2)
            {
                double const rel = (chi2 - chi2_new) / chi2;
                x = x_new;
                r = r_new;
                chi2 = chi2_new;
                lambda = std::max(lambda / 3, 1e-15);
                accepted = true;
                if (rel < options.f_tolerance)
                {
                    small_step = true;
                }
            }
            else
            {
                lambda *= 4;
                if (lambda > 1e16)
                {
                    small_step = true;
                    break;
                }
            }
        }
        if (small_step)
        {
            result.converged = true;
            break;
        }
    }

    result.params = x;
    result.chi2 = chi2;

    Eigen::MatrixXd const jac = numerical_jacobian(
        f, x, n_residuals, options.jacobian_step, lower, upper);
    Eigen::MatrixXd const a = jac.transpose() * jac;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    Eigen::VectorXd const values = eig.eigenvalues();
    double const vmax = values.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        if (values[i] > 1e-13 * vmax && vmax > 0)
        {
            inv[i] = 1 / values[i];
        }
        else
        {
            result.covariance_reliable = false;
        }
    }
    result.covariance = eig.eigenvectors() * inv.asDiagonal()
                        * eig.eigenvectors().transpose();
    return result;
}

}  // namespace qpburst
