#include "crnnn/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace crnnn {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0,
                  const Eigen::VectorXd& y1, double atol, double rtol) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

double initial_step_guess(const RhsFn& rhs, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& f0, const IntegratorConfig& cfg) {
    if (cfg.initial_step > 0.0) return cfg.initial_step;
    const double atol = cfg.abs_tol, rtol = cfg.rel_tol;
    auto scaled_norm = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& ref) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double sc = atol + rtol * std::abs(ref[i]);
            acc += (v[i] / sc) * (v[i] / sc);
        }
        return std::sqrt(acc / static_cast<double>(v.size()));
    };
    const double d0 = scaled_norm(x0, x0);
    const double d1 = scaled_norm(f0, x0);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    const Eigen::VectorXd x1 = x0 + h0 * f0;
    const Eigen::VectorXd f1 = rhs(x1);
    const double d2 = scaled_norm(f1 - f0, x0) / h0;
    double h1;
    if (std::max(d1, d2) <= 1e-15)
        h1 = std::max(1e-6, h0 * 1e-3);
    else
        h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
    double h = std::min(100.0 * h0, h1);
    // limit the first step to a 1% relative state change; from huge initial
    // conditions the decay terms are transiently stiff
    const double x_inf = x0.cwiseAbs().maxCoeff();
    const double f_inf = f0.cwiseAbs().maxCoeff();
    if (f_inf > 0.0) h = std::min(h, 0.01 * std::max(x_inf, 1.0) / f_inf);
    return h;
}

}  // namespace

Trajectory integrate(const RhsFn& rhs, const Eigen::VectorXd& x0, const IntegratorConfig& cfg) {
    if (cfg.rel_tol <= 0.0 || cfg.abs_tol <= 0.0)
        throw StructureError("integrator tolerances must be positive");
    if (cfg.t_end < 0.0) throw StructureError("t_end must be >= 0");

    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(x0);
    if (cfg.t_end == 0.0) return traj;

    Eigen::VectorXd x = x0;
    Eigen::VectorXd k1 = rhs(x);
    if (!k1.allFinite()) {
        traj.terminal_reason = TerminalReason::StepFailure;
        return traj;
    }
    double t = 0.0;
    double h = std::min({initial_step_guess(rhs, x, k1, cfg), cfg.max_step, cfg.t_end});
    double err_prev = 1.0;
    int ss_count = 0;

    Eigen::VectorXd k2, k3, k4, k5, k6, k7, xn, err;
    while (t < cfg.t_end) {
        h = std::min(h, cfg.t_end - t);
        if (!std::isfinite(h) || h < 1e-14 * std::max(1.0, t)) {
            traj.terminal_reason = TerminalReason::StepFailure;
            return traj;
        }

        k2 = rhs(x + h * (a21 * k1));
        k3 = rhs(x + h * (a31 * k1 + a32 * k2));
        k4 = rhs(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = rhs(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = rhs(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        xn = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = rhs(xn);  // FSAL
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const double en = error_norm(err, x, xn, cfg.abs_tol, cfg.rel_tol);
        const bool finite = xn.allFinite() && std::isfinite(en);
        const bool negative =
            cfg.enforce_nonnegative && finite && (xn.minCoeff() < -cfg.abs_tol);

        if (!finite || negative) {
            h *= 0.5;
            ss_count = 0;
            continue;
        }
        if (en > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            ss_count = 0;
            continue;
        }
        // once inside the steady-state region, reject steps that would leave
        // it: this pins h to the stability region so the residual decays to
        // roundoff instead of hovering at the error-control noise floor
        if (cfg.detect_steady_state &&
            k1.cwiseAbs().maxCoeff() <= cfg.steady_state_threshold &&
            k7.cwiseAbs().maxCoeff() > cfg.steady_state_threshold) {
            h *= 0.5;
            continue;
        }

        // accepted
        t += h;
        x = xn;
        k1 = k7;
        traj.times.push_back(t);
        traj.states.push_back(x);

        const double rhs_norm = k7.cwiseAbs().maxCoeff();
        if (cfg.detect_steady_state && rhs_norm <= cfg.steady_state_threshold) {
            if (++ss_count >= cfg.steady_state_window) {
                traj.terminal_reason = TerminalReason::SteadyState;
                traj.steady_state = x;
                return traj;
            }
        } else {
            ss_count = 0;
        }

        const double fac =
            0.9 * std::pow(std::max(en, 1e-10), -0.17) * std::pow(std::max(err_prev, 1e-10), 0.04);
        double h_next = h * std::clamp(fac, 0.2, 5.0);
        // approaching a steady state: freeze step growth so h stays inside
        // the stability region and the residual decays through the detection
        // threshold instead of hovering just above it
        if (cfg.detect_steady_state && rhs_norm <= 100.0 * cfg.steady_state_threshold)
            h_next = std::min(h_next, h);
        h = std::min(h_next, cfg.max_step);
        err_prev = std::max(en, 1e-10);
    }
    traj.terminal_reason = TerminalReason::ReachedTEnd;
    return traj;
}

std::optional<double> hitting_time(const Trajectory& traj, double box_bound) {
    if (traj.times.empty()) throw StructureError("empty trajectory");
    // last index violating the box, if any
    std::ptrdiff_t last_out = -1;
    for (std::ptrdiff_t k = static_cast<std::ptrdiff_t>(traj.states.size()) - 1; k >= 0; --k) {
        if (traj.states[static_cast<std::size_t>(k)].maxCoeff() > box_bound) {
            last_out = k;
            break;
        }
    }
    const std::size_t first_in = static_cast<std::size_t>(last_out + 1);
    if (first_in >= traj.times.size()) return std::nullopt;
    if (last_out < 0) return traj.times.front();
    // linear interpolation of the max coordinate between the bracketing
    // samples; accepted steps can be coarse near the crossing
    const double v0 = traj.states[static_cast<std::size_t>(last_out)].maxCoeff();
    const double v1 = traj.states[first_in].maxCoeff();
    const double t0 = traj.times[static_cast<std::size_t>(last_out)];
    const double t1 = traj.times[first_in];
    if (v0 <= v1) return t1;
    return t0 + (v0 - box_bound) / (v0 - v1) * (t1 - t0);
}

RateFit exponential_rate_fit(const Trajectory& traj, const Eigen::VectorXd& limit,
                             double tail_fraction, double abs_tol) {
    if (tail_fraction <= 0.0 || tail_fraction >= 1.0)
        throw StructureError("tail_fraction must be in (0, 1)");
    const double floor = 10.0 * abs_tol;
    std::vector<std::pair<double, double>> usable;  // (t, log dist)
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double d = (traj.states[k] - limit).norm();
        if (d > floor) usable.emplace_back(traj.times[k], std::log(d));
    }
    const std::size_t n_tail = static_cast<std::size_t>(
        std::ceil(tail_fraction * static_cast<double>(usable.size())));
    if (n_tail < 10)
        throw NumericError(
            "exponential rate fit: only " + std::to_string(n_tail) +
            " usable tail samples above the noise floor; start from a larger displacement");

    const std::size_t start = usable.size() - n_tail;
    double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
    for (std::size_t k = start; k < usable.size(); ++k) {
        const auto [tk, yk] = usable[k];
        st += tk;
        sy += yk;
        stt += tk * tk;
        sty += tk * yk;
        syy += yk * yk;
    }
    const double n = static_cast<double>(n_tail);
    const double denom = n * stt - st * st;
    if (denom == 0.0) throw NumericError("exponential rate fit: degenerate time samples");
    const double slope = (n * sty - st * sy) / denom;
    const double ss_tot = syy - sy * sy / n;
    double r2 = 1.0;
    if (ss_tot > 0.0) {
        double ss_res = 0.0;
        const double intercept = (sy - slope * st) / n;
        for (std::size_t k = start; k < usable.size(); ++k) {
            const double resid = usable[k].second - (intercept + slope * usable[k].first);
            ss_res += resid * resid;
        }
        r2 = 1.0 - ss_res / ss_tot;
    }
    return {-slope, r2};
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& names) {
    if (!traj.states.empty() &&
        names.size() != static_cast<std::size_t>(traj.states.front().size()))
        throw DimensionError("species name count does not match state dimension");
    os << "t";
    for (const auto& n : names) os << ",x_" << n;
    os << "\n";
    os << std::setprecision(17);
    auto row = [&](double t, const Eigen::VectorXd& x) {
        os << t;
        for (Eigen::Index i = 0; i < x.size(); ++i) os << "," << x[i];
        os << "\n";
    };
    for (std::size_t k = 0; k < traj.times.size(); ++k) row(traj.times[k], traj.states[k]);
    if (traj.steady_state) {
        os << "# steady_state\n";
        row(traj.final_time(), *traj.steady_state);
    }
}

}  // namespace crnnn
