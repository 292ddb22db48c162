#ifndef PL_FIT_HPP
#define PL_FIT_HPP

#include <Eigen/Dense>

#include <functional>

namespace pl::fit
{

/// Fills `residuals` (already weighted) for the parameter vector.
using ResidualFunction = std::function<void(const Eigen::VectorXd &params, Eigen::VectorXd &residuals)>;

struct LmOptions
{
    double relative_tolerance = 1e-8;
    int max_iterations = 500;
    double initial_damping = 1e-3;
    /// Relative forward-difference step for the Jacobian.
    double jacobian_step = 1e-7;
    /// Scale the covariance by the reduced chi-square (unknown noise level).
    bool scale_covariance = false;
};

struct LmResult
{
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
};

Eigen::MatrixXd forward_difference_jacobian(const ResidualFunction &f, const Eigen::VectorXd &p,
                                            Eigen::Index residual_count, double relative_step);
Eigen::MatrixXd central_difference_jacobian(const ResidualFunction &f, const Eigen::VectorXd &p,
                                            Eigen::Index residual_count, double relative_step);

/// Damped Gauss-Newton (Levenberg-Marquardt) minimization of the sum of
/// squared residuals. Stops when the relative decrease of chi2 and the
/// relative step size both drop below the tolerance; on hitting the
/// iteration cap it returns the best iterate with converged = false.
LmResult levenberg_marquardt(const ResidualFunction &f, Eigen::VectorXd initial, Eigen::Index residual_count,
                             const LmOptions &options = {});

} // namespace pl::fit

#endif
