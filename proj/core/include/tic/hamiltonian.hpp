#pragma once

#include "tic/adjoint.hpp"
#include "tic/coefficients.hpp"
#include "tic/control.hpp"

namespace tic {

/// Arguments frozen along the candidate tuple at one (s, path) point.
struct HamiltonianArgs {
    double s = 0.0;
    double t = 0.0;
    double x = 0.0;      // state argument of the Hamiltonian
    double x_bar = 0.0;  // tuple state
    Control u_bar;       // tuple control
    double y = 0.0, z = 0.0;
    double p = 0.0, q = 0.0;
    double P = 0.0;
};

struct HamiltonianEval {
    double value_H = 0.0;    // first-order generalized Hamiltonian
    double value_calH = 0.0; // second-order: H + 0.5 P (delta sigma)^2
    double delta_sigma = 0.0;
};

/// H = p b(s,x,u) + q sigma(s,x,u) + f(s, x, u, y, z + p [sigma(s,x,u) - sigma(s,x_bar,u_bar)]; t)
/// calH = H + 0.5 P [sigma(s,x,u) - sigma(s,x_bar,u_bar)]^2
HamiltonianEval eval_hamiltonian(const CoefficientBundle& bundle, const HamiltonianArgs& args,
                                 const Control& u);

/// delta calH(s; t, u) = calH(u) - calH(u_bar), evaluated at x = x_bar. Zero
/// exactly at u = u_bar.
double delta_hamiltonian(const CoefficientBundle& bundle, const HamiltonianArgs& args,
                         const Control& u);

} // namespace tic
