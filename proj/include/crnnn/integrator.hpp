#pragma once

#include <Eigen/Core>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "crnnn/errors.hpp"

namespace crnnn {

struct IntegratorConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;  // 0 = automatic
    double t_end = 1.0;
    double steady_state_threshold = 1e-10;  // sup-norm of rhs
    int steady_state_window = 5;            // consecutive accepted steps
    bool detect_steady_state = true;
    // reject a step if any component drops below -abs_tol
    bool enforce_nonnegative = false;
};

enum class TerminalReason { ReachedTEnd, SteadyState, StepFailure };

struct Trajectory {
    std::vector<double> times;  // strictly increasing, times[0] = 0
    std::vector<Eigen::VectorXd> states;
    TerminalReason terminal_reason = TerminalReason::ReachedTEnd;
    std::optional<Eigen::VectorXd> steady_state;

    const Eigen::VectorXd& final_state() const { return states.back(); }
    double final_time() const { return times.back(); }
};

using RhsFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Dormand-Prince 5(4) embedded pair with PI step-size control; dense output
// at accepted steps only. Terminates at t_end or when the sup-norm of the
// rhs stays below the steady-state threshold for a full window.
Trajectory integrate(const RhsFn& rhs, const Eigen::VectorXd& x0, const IntegratorConfig& cfg);

// First time all components are <= box_bound and stay there for the rest of
// the trajectory; nullopt if never.
std::optional<double> hitting_time(const Trajectory& traj, double box_bound);

struct RateFit {
    double lambda;
    double r_squared;
};

// Least-squares slope of log ||x(t) - limit||_2 over the last tail_fraction
// of samples whose distance is above the noise floor (10 * abs_tol).
RateFit exponential_rate_fit(const Trajectory& traj, const Eigen::VectorXd& limit,
                             double tail_fraction, double abs_tol = 1e-12);

// CSV: header `t,x_<name>,...`, 17 significant digits, one row per accepted
// step; the final row is repeated under a `# steady_state` comment when one
// was detected.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& names);

}  // namespace crnnn
