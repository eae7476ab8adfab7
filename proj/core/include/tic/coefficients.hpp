#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>

#include "tic/control.hpp"
#include "tic/time_grid.hpp"

namespace tic {

/// Open state interval I = ]lower, upper[ (bounds may be infinite).
struct StateDomain {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    StateDomain() = default;
    StateDomain(double lo, double hi) : lower(lo), upper(hi) {
        if (!(lo < hi)) throw std::invalid_argument("StateDomain: lower must be < upper");
    }

    bool interior(double x) const { return x > lower && x < upper; }

    /// Nearest interior point, used to park flagged paths.
    double project_inside(double x) const;

    static StateDomain positive_half_line() { return {0.0, std::numeric_limits<double>::infinity()}; }
    static StateDomain whole_line() { return {}; }
};

/// Symmetric Hessian of f over (x, y, z).
struct Hessian3 {
    double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;

    /// v . D2f . v^T for v = (vx, vy, vz).
    double quadratic_form(double vx, double vy, double vz) const {
        return xx * vx * vx + yy * vy * vy + zz * vz * vz +
               2.0 * (xy * vx * vy + xz * vx * vz + yz * vy * vz);
    }
};

using StateCoeffFn = std::function<double(double s, double x, std::span<const double> u)>;
using DriverFn = std::function<double(double s, double x, std::span<const double> u,
                                      double y, double z, double t)>;
using TerminalFn = std::function<double(double x, double t)>;
using DriverHessFn = std::function<Hessian3(double s, double x, std::span<const double> u,
                                            double y, double z, double t)>;

/// Problem coefficients b, sigma, f, h and the derivatives consumed by the
/// adjoint drivers and Hamiltonians. Derivatives left unset are filled in by
/// central finite differences with step 1e-6 * max(1, |arg|).
struct CoefficientBundle {
    StateCoeffFn b, sigma;
    DriverFn f;
    TerminalFn h;

    StateCoeffFn b_x, b_xx, sigma_x, sigma_xx; // d/dx of b, sigma
    DriverFn f_x, f_y, f_z;
    DriverHessFn f_hess; // D^2 f over (x, y, z)
    TerminalFn h_x, h_xx;

    std::string name = "custom";

    /// True once finalize() ran.
    bool finalized() const { return finalized_; }
    /// Which first-derivative slots were supplied analytically (vs FD).
    bool analytic_b_x = false, analytic_sigma_x = false, analytic_f_grad = false,
         analytic_h_x = false, analytic_hess = false;

    /// Installs finite-difference defaults for missing derivatives and
    /// records which slots were analytic. Must be called before use; done by
    /// build_problem.
    void finalize();

private:
    bool finalized_ = false;
};

struct SelfCheckReport {
    bool passed = true;
    double max_rel_deviation = 0.0;
    std::string worst_symbol;
};

/// Compares analytic derivatives against central finite differences on a
/// sampled (s, x, u[, y, z]) grid; relative tolerance 1e-4.
SelfCheckReport derivative_self_check(const CoefficientBundle& bundle, const TimeGrid& grid,
                                      const ControlDomain& controls, const StateDomain& states,
                                      double x0, int samples_per_axis = 10);

enum class ForwardScheme { euler, log_euler };

/// Immutable problem handle shared by all solvers.
struct ProblemInstance {
    CoefficientBundle bundle;
    TimeGrid grid;
    ControlDomain controls;
    StateDomain states;
    double x0 = 0.0;
    ForwardScheme scheme = ForwardScheme::euler;

    /// Same problem restarted from (grid.knot(i0), x0_new); the sub-grid
    /// shares the knots of the original one.
    ProblemInstance restarted(int knot_index, double x0_new) const;
};

/// Validates the bundle (derivative self-check, finite samples, interior x0)
/// and freezes the problem.
ProblemInstance build_problem(CoefficientBundle bundle, const TimeGrid& grid,
                              ControlDomain controls, StateDomain states, double x0,
                              ForwardScheme scheme = ForwardScheme::euler);

class StatePaths; // forward_sde.hpp

/// u(s_i) = Pi(s_i, X(s_i)) per path, clamped into the control domain.
/// Clamping is silent; the number of clamped coordinates is recorded on the
/// returned path.
ControlPath policy_to_control(const FeedbackPolicy& policy, const ProblemInstance& problem,
                              const StatePaths& states);

} // namespace tic
