#include "pl/fit.hpp"

#include <cmath>
#include <limits>

namespace pl::fit
{

namespace
{

double step_for(double value, double relative_step)
{
    return relative_step * std::max(std::abs(value), 1.0);
}

} // namespace

Eigen::MatrixXd forward_difference_jacobian(const ResidualFunction &f, const Eigen::VectorXd &p,
                                            Eigen::Index residual_count, double relative_step)
{
    Eigen::VectorXd r0(residual_count), r1(residual_count);
    f(p, r0);
    Eigen::MatrixXd jac(residual_count, p.size());
    Eigen::VectorXd q = p;
    for (Eigen::Index k = 0; k < p.size(); ++k)
    {
        const double h = step_for(p(k), relative_step);
        q(k) = p(k) + h;
        f(q, r1);
        jac.col(k) = (r1 - r0) / h;
        q(k) = p(k);
    }
    return jac;
}

Eigen::MatrixXd central_difference_jacobian(const ResidualFunction &f, const Eigen::VectorXd &p,
                                            Eigen::Index residual_count, double relative_step)
{
    Eigen::VectorXd plus(residual_count), minus(residual_count);
    Eigen::MatrixXd jac(residual_count, p.size());
    Eigen::VectorXd q = p;
    for (Eigen::Index k = 0; k < p.size(); ++k)
    {
        const double h = step_for(p(k), relative_step);
        q(k) = p(k) + h;
        f(q, plus);
        q(k) = p(k) - h;
        f(q, minus);
        jac.col(k) = (plus - minus) / (2.0 * h);
        q(k) = p(k);
    }
    return jac;
}

LmResult levenberg_marquardt(const ResidualFunction &f, Eigen::VectorXd p, Eigen::Index residual_count,
                             const LmOptions &options)
{
    Eigen::VectorXd r(residual_count), trial_r(residual_count);
    f(p, r);
    double chi2 = r.squaredNorm();
    double damping = options.initial_damping;

    LmResult result;
    int it = 0;
    for (; it < options.max_iterations; ++it)
    {
        const Eigen::MatrixXd jac = forward_difference_jacobian(f, p, residual_count, options.jacobian_step);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd gradient = jac.transpose() * r;

        bool improved = false;
        double relative_step = 0.0;
        double relative_decrease = 0.0;
        for (int attempt = 0; attempt < 40; ++attempt)
        {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += damping * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd delta = a.ldlt().solve(-gradient);
            if (!delta.allFinite())
            {
                damping *= 10.0;
                continue;
            }
            const Eigen::VectorXd trial = p + delta;
            f(trial, trial_r);
            const double trial_chi2 = trial_r.allFinite() ? trial_r.squaredNorm() : std::numeric_limits<double>::infinity();
            if (trial_chi2 < chi2)
            {
                relative_decrease = (chi2 - trial_chi2) / std::max(chi2, std::numeric_limits<double>::min());
                relative_step = delta.norm() / std::max(p.norm(), 1e-300);
                p = trial;
                r = trial_r;
                chi2 = trial_chi2;
                damping = std::max(damping / 10.0, 1e-12);
                improved = true;
                break;
            }
            damping *= 10.0;
        }
        if (!improved)
        {
            // No downhill step at any damping: at a minimum to machine precision.
            result.converged = true;
            break;
        }
        if (relative_decrease < options.relative_tolerance && relative_step < std::sqrt(options.relative_tolerance))
        {
            result.converged = true;
            ++it;
            break;
        }
    }

    result.params = p;
    result.chi2 = chi2;
    result.iterations = it;
    const Eigen::MatrixXd jac = forward_difference_jacobian(f, p, residual_count, options.jacobian_step);
    result.covariance = (jac.transpose() * jac).ldlt().solve(Eigen::MatrixXd::Identity(p.size(), p.size()));
    if (options.scale_covariance && residual_count > p.size())
        result.covariance *= chi2 / static_cast<double>(residual_count - p.size());
    return result;
}

} // namespace pl::fit
