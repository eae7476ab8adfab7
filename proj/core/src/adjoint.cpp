#include "tic/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tic/parallel.hpp"

namespace tic {

namespace {

void check_tuple(const CandidateTuple& tuple, const ProblemInstance& problem,
                 const BrownianEnsemble& ensemble) {
    if (!tuple.states || !tuple.controls || !tuple.utility)
        throw std::invalid_argument("adjoint: incomplete candidate tuple");
    if (tuple.states->paths() != ensemble.paths() ||
        tuple.states->knots() != problem.grid.n_knots())
        throw std::invalid_argument("adjoint: tuple/ensemble shape mismatch");
}

} // namespace

double KappaPath::min_value() const {
    return *std::min_element(values.begin(), values.end());
}

KappaPath compute_kappa(const ProblemInstance& problem, const CandidateTuple& tuple,
                        const BrownianEnsemble& ensemble) {
    check_tuple(tuple, problem, ensemble);
    const std::size_t m = ensemble.paths();
    const int knots = problem.grid.n_knots();
    const double dt = problem.grid.dt();
    const double t = problem.grid.t_start;

    KappaPath kappa;
    kappa.m_paths = m;
    kappa.knots = knots;
    kappa.values.assign(m * knots, 1.0);

    parallel_for_blocks(m, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            double log_kappa = 0.0;
            for (int i = 0; i < knots - 1; ++i) {
                const double s = problem.grid.knot(i);
                const double x = tuple.states->at(p, i);
                const auto u = tuple.controls->at(p, i);
                const double y = tuple.utility->y_at(p, i);
                const double z = tuple.utility->z_at(p, i);
                const double fy = problem.bundle.f_y(s, x, u, y, z, t);
                const double fz = problem.bundle.f_z(s, x, u, y, z, t);
                if (!std::isfinite(fy) || !std::isfinite(fz))
                    throw std::runtime_error("compute_kappa: non-finite f_y or f_z");
                log_kappa += (fy - 0.5 * fz * fz) * dt + fz * ensemble.dw(p, i);
                kappa.values[p * knots + i + 1] = std::exp(log_kappa);
            }
        }
    });
    return kappa;
}

double eval_driver_g(const AdjointCoeffs& c, double p, double q) {
    return (c.b_x + c.f_z * c.sigma_x + c.f_y) * p + (c.sigma_x + c.f_z) * q + c.f_x;
}

double eval_driver_G(const AdjointCoeffs& c, double P, double Q, double p, double q) {
    const double vz = c.sigma_x * p + q;
    const double quad = c.f_hess.quadratic_form(1.0, p, vz);
    return (2.0 * c.b_x + c.sigma_x * c.sigma_x + 2.0 * c.f_z * c.sigma_x + c.f_y) * P +
           (2.0 * c.sigma_x + c.f_z) * Q + c.b_xx * p + c.sigma_xx * (c.f_z * p + q) + quad;
}

AdjointCoeffs eval_adjoint_coeffs(const ProblemInstance& problem, const CandidateTuple& tuple,
                                  int step, std::size_t path) {
    const double s = problem.grid.knot(step);
    const double x = tuple.states->at(path, step);
    const auto u = tuple.controls->at(path, step);
    const double y = tuple.utility->y_at(path, step);
    const double z = tuple.utility->z_at(path, step);
    const double t = problem.grid.t_start;

    AdjointCoeffs c;
    c.b_x = problem.bundle.b_x(s, x, u);
    c.sigma_x = problem.bundle.sigma_x(s, x, u);
    c.b_xx = problem.bundle.b_xx(s, x, u);
    c.sigma_xx = problem.bundle.sigma_xx(s, x, u);
    c.f_x = problem.bundle.f_x(s, x, u, y, z, t);
    c.f_y = problem.bundle.f_y(s, x, u, y, z, t);
    c.f_z = problem.bundle.f_z(s, x, u, y, z, t);
    c.f_hess = problem.bundle.f_hess(s, x, u, y, z, t);
    return c;
}

BsdeSolution solve_first_adjoint(const ProblemInstance& problem, const CandidateTuple& tuple,
                                 const BrownianEnsemble& ensemble, int basis_degree) {
    check_tuple(tuple, problem, ensemble);
    const std::size_t m = ensemble.paths();
    const int knots = problem.grid.n_knots();
    const double t = problem.grid.t_start;

    // coefficients frozen along the tuple: cache per (step, path)
    std::vector<AdjointCoeffs> coeffs(m * static_cast<std::size_t>(knots - 1));
    parallel_for_blocks(m, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p)
            for (int i = 0; i < knots - 1; ++i)
                coeffs[p * (knots - 1) + i] = eval_adjoint_coeffs(problem, tuple, i, p);
    });

    std::vector<double> terminal(m);
    for (std::size_t p = 0; p < m; ++p)
        terminal[p] = problem.bundle.h_x(tuple.states->at(p, knots - 1), t);

    const PathDriver driver = [&coeffs, knots](int step, std::size_t path, double p, double q) {
        return eval_driver_g(coeffs[path * (knots - 1) + step], p, q);
    };
    return solve_bsde_backward(problem.grid, ensemble, *tuple.states, terminal, driver,
                               basis_degree);
}

BsdeSolution solve_second_adjoint(const ProblemInstance& problem, const CandidateTuple& tuple,
                                  const BsdeSolution& first_adjoint,
                                  const BrownianEnsemble& ensemble, int basis_degree) {
    check_tuple(tuple, problem, ensemble);
    const std::size_t m = ensemble.paths();
    const int knots = problem.grid.n_knots();
    const double t = problem.grid.t_start;
    if (first_adjoint.m_paths != m || first_adjoint.knots != knots)
        throw std::invalid_argument("solve_second_adjoint: first adjoint shape mismatch");

    std::vector<AdjointCoeffs> coeffs(m * static_cast<std::size_t>(knots - 1));
    parallel_for_blocks(m, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p)
            for (int i = 0; i < knots - 1; ++i)
                coeffs[p * (knots - 1) + i] = eval_adjoint_coeffs(problem, tuple, i, p);
    });

    std::vector<double> terminal(m);
    for (std::size_t p = 0; p < m; ++p)
        terminal[p] = problem.bundle.h_xx(tuple.states->at(p, knots - 1), t);

    const PathDriver driver = [&coeffs, &first_adjoint, knots](int step, std::size_t path,
                                                               double P, double Q) {
        return eval_driver_G(coeffs[path * (knots - 1) + step], P, Q,
                             first_adjoint.y_at(path, step), first_adjoint.z_at(path, step));
    };
    return solve_bsde_backward(problem.grid, ensemble, *tuple.states, terminal, driver,
                               basis_degree);
}

AdjointBundle solve_adjoints(const ProblemInstance& problem, const CandidateTuple& tuple,
                             const BrownianEnsemble& ensemble, int basis_degree) {
    AdjointBundle bundle;
    bundle.first = solve_first_adjoint(problem, tuple, ensemble, basis_degree);
    bundle.second =
        solve_second_adjoint(problem, tuple, bundle.first, ensemble, basis_degree);
    return bundle;
}

} // namespace tic
