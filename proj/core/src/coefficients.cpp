#include "tic/coefficients.hpp"

#include <cmath>
#include <stdexcept>

#include "tic/forward_sde.hpp"
#include "tic/parallel.hpp"

namespace tic {

namespace {

double fd_step(double arg) { return 1e-6 * std::max(1.0, std::abs(arg)); }

StateCoeffFn fd_dx(StateCoeffFn base) {
    return [base = std::move(base)](double s, double x, std::span<const double> u) {
        const double e = fd_step(x);
        return (base(s, x + e, u) - base(s, x - e, u)) / (2.0 * e);
    };
}

DriverFn fd_driver_dx(DriverFn base) {
    return [base = std::move(base)](double s, double x, std::span<const double> u, double y,
                                    double z, double t) {
        const double e = fd_step(x);
        return (base(s, x + e, u, y, z, t) - base(s, x - e, u, y, z, t)) / (2.0 * e);
    };
}

DriverFn fd_driver_dy(DriverFn base) {
    return [base = std::move(base)](double s, double x, std::span<const double> u, double y,
                                    double z, double t) {
        const double e = fd_step(y);
        return (base(s, x, u, y + e, z, t) - base(s, x, u, y - e, z, t)) / (2.0 * e);
    };
}

DriverFn fd_driver_dz(DriverFn base) {
    return [base = std::move(base)](double s, double x, std::span<const double> u, double y,
                                    double z, double t) {
        const double e = fd_step(z);
        return (base(s, x, u, y, z + e, t) - base(s, x, u, y, z - e, t)) / (2.0 * e);
    };
}

TerminalFn fd_terminal_dx(TerminalFn base) {
    return [base = std::move(base)](double x, double t) {
        const double e = fd_step(x);
        return (base(x + e, t) - base(x - e, t)) / (2.0 * e);
    };
}

DriverHessFn fd_hess(DriverFn fx, DriverFn fy, DriverFn fz) {
    return [fx = std::move(fx), fy = std::move(fy), fz = std::move(fz)](
               double s, double x, std::span<const double> u, double y, double z, double t) {
        Hessian3 hess;
        const double ex = fd_step(x), ey = fd_step(y), ez = fd_step(z);
        hess.xx = (fx(s, x + ex, u, y, z, t) - fx(s, x - ex, u, y, z, t)) / (2.0 * ex);
        hess.xy = (fx(s, x, u, y + ey, z, t) - fx(s, x, u, y - ey, z, t)) / (2.0 * ey);
        hess.xz = (fx(s, x, u, y, z + ez, t) - fx(s, x, u, y, z - ez, t)) / (2.0 * ez);
        hess.yy = (fy(s, x, u, y + ey, z, t) - fy(s, x, u, y - ey, z, t)) / (2.0 * ey);
        hess.yz = (fy(s, x, u, y, z + ez, t) - fy(s, x, u, y, z - ez, t)) / (2.0 * ez);
        hess.zz = (fz(s, x, u, y, z + ez, t) - fz(s, x, u, y, z - ez, t)) / (2.0 * ez);
        return hess;
    };
}

} // namespace

double StateDomain::project_inside(double x) const {
    if (interior(x)) return x;
    if (std::isfinite(lower) && x <= lower) return lower + 1e-12 * std::max(1.0, std::abs(lower));
    if (std::isfinite(upper) && x >= upper) return upper - 1e-12 * std::max(1.0, std::abs(upper));
    return x;
}

void CoefficientBundle::finalize() {
    if (finalized_) return;
    if (!b || !sigma || !f || !h)
        throw std::invalid_argument("CoefficientBundle: b, sigma, f, h are all required");

    analytic_b_x = static_cast<bool>(b_x);
    analytic_sigma_x = static_cast<bool>(sigma_x);
    analytic_f_grad = f_x && f_y && f_z;
    analytic_h_x = static_cast<bool>(h_x);
    analytic_hess = static_cast<bool>(f_hess);

    if (!b_x) b_x = fd_dx(b);
    if (!b_xx) b_xx = fd_dx(b_x);
    if (!sigma_x) sigma_x = fd_dx(sigma);
    if (!sigma_xx) sigma_xx = fd_dx(sigma_x);
    if (!f_x) f_x = fd_driver_dx(f);
    if (!f_y) f_y = fd_driver_dy(f);
    if (!f_z) f_z = fd_driver_dz(f);
    if (!f_hess) f_hess = fd_hess(f_x, f_y, f_z);
    if (!h_x) h_x = fd_terminal_dx(h);
    if (!h_xx) h_xx = fd_terminal_dx(h_x);
    finalized_ = true;
}

namespace {

struct CheckPoint {
    double s, x, y, z;
    Control u;
};

std::vector<CheckPoint> sample_points(const TimeGrid& grid, const ControlDomain& controls,
                                      const StateDomain& states, double x0, int n) {
    // x samples stay strictly inside I, centered on x0.
    std::vector<double> xs;
    for (int i = 0; i < n; ++i) {
        double x = x0 * (0.5 + 1.5 * i / std::max(1, n - 1));
        if (x0 == 0.0) x = -1.0 + 2.0 * i / std::max(1, n - 1);
        if (states.interior(x)) xs.push_back(x);
    }
    if (xs.empty()) xs.push_back(states.project_inside(x0));

    std::vector<CheckPoint> pts;
    for (int i = 0; i < n; ++i) {
        const double s = grid.t_start + grid.horizon() * i / std::max(1, n - 1);
        for (double x : xs) {
            for (int k = 0; k < n; ++k) {
                Control u(controls.dim());
                for (int d = 0; d < controls.dim(); ++d) {
                    const double lo = controls.lower[d], hi = controls.upper[d];
                    u[d] = lo + (hi - lo) * k / std::max(1, n - 1);
                }
                const double y = -1.0 + 2.0 * k / std::max(1, n - 1);
                const double z = 1.0 - 2.0 * k / std::max(1, n - 1);
                pts.push_back({s, x, y, z, std::move(u)});
            }
        }
    }
    return pts;
}

void update_worst(SelfCheckReport& rep, double analytic, double fd, const char* sym) {
    const double dev = std::abs(analytic - fd) / std::max(1.0, std::abs(analytic));
    if (dev > rep.max_rel_deviation) {
        rep.max_rel_deviation = dev;
        rep.worst_symbol = sym;
    }
}

} // namespace

SelfCheckReport derivative_self_check(const CoefficientBundle& bundle, const TimeGrid& grid,
                                      const ControlDomain& controls, const StateDomain& states,
                                      double x0, int samples_per_axis) {
    SelfCheckReport rep;
    const auto pts = sample_points(grid, controls, states, x0, samples_per_axis);
    const double t = grid.t_start;

    for (const auto& p : pts) {
        std::span<const double> u(p.u);
        if (bundle.analytic_b_x)
            update_worst(rep, bundle.b_x(p.s, p.x, u), fd_dx(bundle.b)(p.s, p.x, u), "b_x");
        if (bundle.analytic_sigma_x)
            update_worst(rep, bundle.sigma_x(p.s, p.x, u), fd_dx(bundle.sigma)(p.s, p.x, u),
                         "sigma_x");
        if (bundle.analytic_f_grad) {
            update_worst(rep, bundle.f_x(p.s, p.x, u, p.y, p.z, t),
                         fd_driver_dx(bundle.f)(p.s, p.x, u, p.y, p.z, t), "f_x");
            update_worst(rep, bundle.f_y(p.s, p.x, u, p.y, p.z, t),
                         fd_driver_dy(bundle.f)(p.s, p.x, u, p.y, p.z, t), "f_y");
            update_worst(rep, bundle.f_z(p.s, p.x, u, p.y, p.z, t),
                         fd_driver_dz(bundle.f)(p.s, p.x, u, p.y, p.z, t), "f_z");
        }
        if (bundle.analytic_h_x)
            update_worst(rep, bundle.h_x(p.x, t), fd_terminal_dx(bundle.h)(p.x, t), "h_x");

        // Every coefficient must sample finite.
        const double vals[] = {bundle.b(p.s, p.x, u), bundle.sigma(p.s, p.x, u),
                               bundle.f(p.s, p.x, u, p.y, p.z, t), bundle.h(p.x, t)};
        for (double v : vals)
            if (!std::isfinite(v)) {
                rep.passed = false;
                rep.worst_symbol = "non-finite coefficient sample";
                return rep;
            }
    }
    rep.passed = rep.max_rel_deviation <= 1e-4;
    return rep;
}

ProblemInstance ProblemInstance::restarted(int knot_index, double x0_new) const {
    ProblemInstance sub = *this;
    sub.grid = grid.suffix(knot_index);
    sub.x0 = x0_new;
    if (!states.interior(x0_new))
        throw std::invalid_argument("ProblemInstance::restarted: initial state not interior");
    return sub;
}

ProblemInstance build_problem(CoefficientBundle bundle, const TimeGrid& grid,
                              ControlDomain controls, StateDomain states, double x0,
                              ForwardScheme scheme) {
    if (!states.interior(x0))
        throw std::invalid_argument("build_problem: initial state not interior");
    bundle.finalize();
    const auto check = derivative_self_check(bundle, grid, controls, states, x0);
    if (!check.passed)
        throw std::invalid_argument("build_problem: derivative self-check failed at " +
                                    check.worst_symbol + ", max relative deviation " +
                                    std::to_string(check.max_rel_deviation));
    return ProblemInstance{std::move(bundle), grid, std::move(controls), states, x0, scheme};
}

ControlPath policy_to_control(const FeedbackPolicy& policy, const ProblemInstance& problem,
                              const StatePaths& states) {
    const int knots = states.knots();
    const int dim = problem.controls.dim();
    ControlPath out(states.paths(), knots, dim);

    std::vector<std::int64_t> block_clamps((states.paths() + kDefaultBlock - 1) / kDefaultBlock, 0);
    parallel_for_blocks(states.paths(), [&](std::size_t lo, std::size_t hi) {
        std::int64_t clamps = 0;
        for (std::size_t m = lo; m < hi; ++m) {
            for (int i = 0; i < knots; ++i) {
                Control u = policy(problem.grid.knot(i), states.at(m, i));
                if (static_cast<int>(u.size()) != dim)
                    throw std::invalid_argument("policy_to_control: policy dimension mismatch");
                auto slot = out.at(m, i);
                std::copy(u.begin(), u.end(), slot.begin());
                problem.controls.clamp(slot, &clamps);
            }
        }
        block_clamps[lo / kDefaultBlock] = clamps;
    });
    for (auto c : block_clamps) out.clamp_count += c;
    return out;
}

} // namespace tic
