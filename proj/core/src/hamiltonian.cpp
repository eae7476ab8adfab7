#include "tic/hamiltonian.hpp"

namespace tic {

HamiltonianEval eval_hamiltonian(const CoefficientBundle& bundle, const HamiltonianArgs& args,
                                 const Control& u) {
    const double sigma_u = bundle.sigma(args.s, args.x, u);
    const double sigma_bar = bundle.sigma(args.s, args.x_bar, args.u_bar);
    const double dsig = sigma_u - sigma_bar;

    HamiltonianEval out;
    out.delta_sigma = dsig;
    out.value_H = args.p * bundle.b(args.s, args.x, u) + args.q * sigma_u +
                  bundle.f(args.s, args.x, u, args.y, args.z + args.p * dsig, args.t);
    out.value_calH = out.value_H + 0.5 * args.P * dsig * dsig;
    return out;
}

double delta_hamiltonian(const CoefficientBundle& bundle, const HamiltonianArgs& args,
                         const Control& u) {
    HamiltonianArgs at_bar = args;
    at_bar.x = args.x_bar;
    const double at_u = eval_hamiltonian(bundle, at_bar, u).value_calH;
    const double at_ubar = eval_hamiltonian(bundle, at_bar, args.u_bar).value_calH;
    return at_u - at_ubar;
}

} // namespace tic
