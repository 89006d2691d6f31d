#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace scar {

/// Cumulative signal-retention coefficients of the forward process, indexed
/// t = 0..timesteps. alpha_bar[0] == 1 (identity), strictly decreasing, and
/// bounded away from zero so reverse-process algebra stays stable.
struct NoiseSchedule {
    std::string family;
    int timesteps = 0;
    std::vector<double> alpha_bar;  // size timesteps + 1

    void validate() const;
    double at(int t) const;  // throws InvalidTimestep outside [0, timesteps]

    /// Squared-cosine profile rescaled affinely so alpha_bar[T] == floor
    /// exactly while keeping strict monotonicity.
    static NoiseSchedule cosine(int timesteps, double floor = 5e-4);
};

/// z_t = sqrt(abar) * z + sqrt(1 - abar) * eps, elementwise.
Eigen::MatrixXd forward_noising_at(const Eigen::MatrixXd& z, double abar,
                                   const Eigen::MatrixXd& eps);

/// Inverts the corruption: (z_t - sqrt(abar) * z) / sqrt(1 - abar).
Eigen::MatrixXd recover_noise(const Eigen::MatrixXd& z_t, const Eigen::MatrixXd& z, double abar);

}  // namespace scar
