#pragma once

#include <vector>

#include "tic/bsde.hpp"
#include "tic/coefficients.hpp"
#include "tic/control.hpp"
#include "tic/forward_sde.hpp"

namespace tic {

/// Candidate 4-tuple (X, u, Y, Z) along which the adjoints are defined.
struct CandidateTuple {
    const StatePaths* states = nullptr;
    const ControlPath* controls = nullptr;
    const BsdeSolution* utility = nullptr; // (Y, Z) along the tuple
};

/// Change of numeraire kappa(s;t) per path; strictly positive by
/// construction (exact exponential, never Euler on kappa itself).
struct KappaPath {
    std::size_t m_paths = 0;
    int knots = 0;
    std::vector<double> values; // path-major

    double at(std::size_t path, int knot) const { return values[path * knots + knot]; }
    double min_value() const;
};

KappaPath compute_kappa(const ProblemInstance& problem, const CandidateTuple& tuple,
                        const BrownianEnsemble& ensemble);

/// Coefficient evaluations along the tuple at one (step, path) point; inputs
/// to the adjoint drivers.
struct AdjointCoeffs {
    double b_x = 0.0, sigma_x = 0.0;
    double b_xx = 0.0, sigma_xx = 0.0;
    double f_x = 0.0, f_y = 0.0, f_z = 0.0;
    Hessian3 f_hess;
};

/// First-order adjoint driver: [b_x + f_z sigma_x + f_y] p + [sigma_x + f_z] q + f_x.
double eval_driver_g(const AdjointCoeffs& c, double p, double q);

/// Second-order adjoint driver:
///   [2 b_x + sigma_x^2 + 2 f_z sigma_x + f_y] P + [2 sigma_x + f_z] Q
///   + b_xx p + sigma_xx [f_z p + q] + v . D2f . v^T,  v = (1, p, sigma_x p + q).
double eval_driver_G(const AdjointCoeffs& c, double P, double Q, double p, double q);

AdjointCoeffs eval_adjoint_coeffs(const ProblemInstance& problem, const CandidateTuple& tuple,
                                  int step, std::size_t path);

/// First-order adjoint (p, q): BSDE with driver g and terminal h_x(X(T);t),
/// solved by the regression engine along the frozen tuple.
BsdeSolution solve_first_adjoint(const ProblemInstance& problem, const CandidateTuple& tuple,
                                 const BrownianEnsemble& ensemble, int basis_degree = 3);

/// Second-order adjoint (P, Q): driver G, terminal h_xx(X(T);t).
BsdeSolution solve_second_adjoint(const ProblemInstance& problem, const CandidateTuple& tuple,
                                  const BsdeSolution& first_adjoint,
                                  const BrownianEnsemble& ensemble, int basis_degree = 3);

/// Both adjoint pairs plus their initial-value diagnostics.
struct AdjointBundle {
    BsdeSolution first;  // y = p, z = q
    BsdeSolution second; // y = P, z = Q

    double p0() const { return first.y0; }
    double P0() const { return second.y0; }
    double q0_variance() const { return first.z0_variance; }
    double Q0_variance() const { return second.z0_variance; }
};

AdjointBundle solve_adjoints(const ProblemInstance& problem, const CandidateTuple& tuple,
                             const BrownianEnsemble& ensemble, int basis_degree = 3);

} // namespace tic
