#include "scar/schedule.hpp"

#include <cmath>

#include "scar/errors.hpp"

namespace scar {

void NoiseSchedule::validate() const {
    if (timesteps < 1 || static_cast<int>(alpha_bar.size()) != timesteps + 1)
        throw ValidationError("NoiseSchedule: need alpha_bar for t = 0..timesteps");
    if (alpha_bar.front() < 1.0 - 1e-4)
        throw ValidationError("NoiseSchedule: alpha_bar[0] must be >= 1 - 1e-4");
    if (alpha_bar.back() > 1e-3)
        throw ValidationError("NoiseSchedule: alpha_bar[T] must be <= 1e-3");
    for (int t = 0; t <= timesteps; ++t) {
        if (!(alpha_bar[t] > 0.0) || alpha_bar[t] > 1.0)
            throw ValidationError("NoiseSchedule: alpha_bar must lie in (0,1]");
        if (t > 0 && alpha_bar[t] >= alpha_bar[t - 1])
            throw ValidationError("NoiseSchedule: alpha_bar must be strictly decreasing");
    }
}

double NoiseSchedule::at(int t) const {
    if (t < 0 || t > timesteps)
        throw InvalidTimestep("t = " + std::to_string(t) + " outside [0, " +
                              std::to_string(timesteps) + "]");
    return alpha_bar[t];
}

NoiseSchedule NoiseSchedule::cosine(int timesteps, double floor) {
    constexpr double kShift = 0.008;
    constexpr double kPi = 3.14159265358979323846;
    const auto f = [&](double t) {
        const double x = (t / timesteps + kShift) / (1.0 + kShift) * kPi / 2.0;
        return std::cos(x) * std::cos(x);
    };
    NoiseSchedule sched;
    sched.family = "cosine";
    sched.timesteps = timesteps;
    sched.alpha_bar.resize(timesteps + 1);
    const double f0 = f(0.0), fT = f(timesteps);
    for (int t = 0; t <= timesteps; ++t) {
        const double raw = (f(t) - fT) / (f0 - fT);  // 1 at t=0, 0 at t=T
        sched.alpha_bar[t] = floor + (1.0 - floor) * raw;
    }
    sched.validate();
    return sched;
}

Eigen::MatrixXd forward_noising_at(const Eigen::MatrixXd& z, double abar,
                                   const Eigen::MatrixXd& eps) {
    if (z.rows() != eps.rows() || z.cols() != eps.cols())
        throw ShapeMismatch("forward_noising: eps shape differs from z");
    return std::sqrt(abar) * z + std::sqrt(1.0 - abar) * eps;
}

Eigen::MatrixXd recover_noise(const Eigen::MatrixXd& z_t, const Eigen::MatrixXd& z, double abar) {
    if (abar >= 1.0) throw InvalidTimestep("noise is unrecoverable at alpha_bar = 1");
    return (z_t - std::sqrt(abar) * z) / std::sqrt(1.0 - abar);
}

}  // namespace scar
