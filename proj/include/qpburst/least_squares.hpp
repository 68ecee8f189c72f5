#pragma once

#include <functional>
#include <Eigen/Dense>

namespace qpburst
{
//! Fills the residual vector for a parameter vector.
using ResidualFunction
    = std::function<void(Eigen::VectorXd const&, Eigen::VectorXd&)>;

struct LsqOptions
{
    int max_iterations{200};
    double f_tolerance{1e-14};  //!< Relative chi-square decrease
    double x_tolerance{1e-12};  //!< Relative step size
    double g_tolerance{1e-14};  //!< Scaled gradient norm
    double jacobian_step{1e-6};
    double initial_damping{1e-3};
};

struct LsqResult
{
    Eigen::VectorXd params;
    double chi2{0};
    Eigen::MatrixXd covariance;  //!< Inverse Gauss-Newton Hessian
    int iterations{0};
    int evaluations{0};
    bool converged{false};
    bool covariance_reliable{true};
};

//! Central-difference Jacobian, with steps shrunk to stay within bounds.
Eigen::MatrixXd numerical_jacobian(ResidualFunction const& f,
                                   Eigen::VectorXd const& x,
                                   Eigen::Index n_residuals, double step,
                                   Eigen::VectorXd const& lower,
                                   Eigen::VectorXd const& upper);

/*!
 * Bounded Levenberg-Marquardt minimization of the sum of squared residuals.
 *
 * Steps are projected onto the box [lower, upper]. A residual function that
 * produces non-finite values rejects the trial step.
 */
LsqResult levenberg_marquardt(ResidualFunction const& f, Eigen::VectorXd x0,
                              Eigen::Index n_residuals,
                              Eigen::VectorXd const& lower,
                              Eigen::VectorXd const& upper,
                              LsqOptions const& options = {});

}  // namespace qpburst
