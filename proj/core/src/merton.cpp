#include "tic/merton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tic/adjoint.hpp"
#include "tic/bsde.hpp"
#include "tic/equilibrium.hpp"
#include "tic/forward_sde.hpp"
#include "tic/hamiltonian.hpp"
#include "tic/stats.hpp"

namespace tic {

void MarketParams::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("MarketParams: sigma must be positive");
    if (!(r > 0.0)) throw std::invalid_argument("MarketParams: r must be positive");
    if (!(rho > r)) throw std::invalid_argument("MarketParams: rho must exceed r");
}

double CrraUtility::value(double x) const {
    if (x < 0.0) throw std::domain_error("CrraUtility: negative argument");
    return x == 0.0 ? 0.0 : std::pow(x, lambda) / lambda;
}

double CrraUtility::marginal(double x) const {
    if (!(x > 0.0)) throw std::domain_error("CrraUtility: marginal needs x > 0");
    return std::pow(x, lambda - 1.0);
}

void CrraUtility::validate() const {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("CrraUtility: lambda must lie in ]0,1[");
}

double inverse_marginal_upsilon(double p_val, double lambda) {
    if (!(p_val < 0.0))
        throw std::domain_error("inverse_marginal_upsilon: domain is p < 0");
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("inverse_marginal_upsilon: lambda must lie in ]0,1[");
    return std::pow(-p_val, 1.0 / (lambda - 1.0));
}

double DiscountSpec::at(double s, double t) const {
    const double tau = std::max(s - t, 0.0);
    switch (kind) {
        case Kind::exponential: return std::exp(-rate * tau);
        case Kind::hyperbolic: return 1.0 / (1.0 + k * tau);
        case Kind::custom: return table(tau);
    }
    throw std::logic_error("DiscountSpec: unknown kind");
}

DiscountSpec DiscountSpec::exponential(double delta) {
    DiscountSpec d;
    d.kind = Kind::exponential;
    d.rate = delta;
    return d;
}

DiscountSpec DiscountSpec::hyperbolic(double big_k) {
    if (!(big_k > 0.0)) throw std::invalid_argument("DiscountSpec: K must be positive");
    DiscountSpec d;
    d.kind = Kind::hyperbolic;
    d.k = big_k;
    return d;
}

DiscountSpec DiscountSpec::custom(std::function<double(double)> fn) {
    DiscountSpec d;
    d.kind = Kind::custom;
    d.table = std::move(fn);
    if (!d.table) throw std::invalid_argument("DiscountSpec: empty custom table");
    return d;
}

double hyperbolic_discount(double big_k, double tau) {
    if (!(big_k > 0.0) || tau < 0.0)
        throw std::invalid_argument("hyperbolic_discount: need K > 0, tau >= 0");
    return 1.0 / (1.0 + big_k * tau);
}

AversionProcesses AversionProcesses::constants(double beta_val, double gamma_val) {
    if (beta_val < 0.0 || gamma_val < 0.0)
        throw std::invalid_argument("AversionProcesses: coefficients must be nonnegative");
    AversionProcesses a;
    a.beta = [beta_val](double, double) { return beta_val; };
    a.gamma = [gamma_val](double, double) { return gamma_val; };
    return a;
}

namespace {

void check_discount(const DiscountSpec& d, const TimeGrid& grid, const char* which) {
    const double t = grid.t_start;
    if (std::abs(d.at(t, t) - 1.0) > 1e-12)
        throw std::invalid_argument(std::string("merton: ") + which + " must equal 1 at tau = 0");
    double integral = 0.0;
    for (int i = 0; i < grid.n_knots(); ++i) {
        const double v = d.at(grid.knot(i), t);
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string("merton: ") + which +
                                        " must be positive and finite on the grid");
        integral += v * grid.dt();
    }
    if (!std::isfinite(integral))
        throw std::invalid_argument(std::string("merton: ") + which + " integral not finite");
}

} // namespace

ProblemInstance build_merton_problem(const MertonSpec& spec, const TimeGrid& grid, double x0) {
    spec.market.validate();
    spec.running_utility.validate();
    spec.terminal_utility.validate();
    if (!spec.aversion.beta || !spec.aversion.gamma)
        throw std::invalid_argument("merton: aversion processes unset");
    check_discount(spec.hbar, grid, "hbar");
    check_discount(spec.hbar_hat, grid, "hbar_hat");
    for (int i = 0; i < grid.n_knots(); ++i) {
        const double s = grid.knot(i);
        const double bv = spec.aversion.beta(s, grid.t_start);
        const double gv = spec.aversion.gamma(s, grid.t_start);
        if (bv < 0.0 || gv < 0.0 || !std::isfinite(bv) || !std::isfinite(gv))
            throw std::invalid_argument("merton: beta/gamma must be bounded nonnegative");
    }

    const double r = spec.market.r;
    const double mu = spec.market.mu();
    const double sm = spec.market.sigma;
    const double lam = spec.running_utility.lambda;
    const double lam_hat = spec.terminal_utility.lambda;
    const double big_t = grid.t_end;
    const DiscountSpec hb = spec.hbar;
    const DiscountSpec hh = spec.hbar_hat;
    const AversionProcesses av = spec.aversion;

    CoefficientBundle c;
    c.name = "merton";
    c.b = [r, mu](double, double x, std::span<const double> u) {
        return x * (r + mu * u[0] - u[1]);
    };
    c.b_x = [r, mu](double, double, std::span<const double> u) {
        return r + mu * u[0] - u[1];
    };
    c.b_xx = [](double, double, std::span<const double>) { return 0.0; };
    c.sigma = [sm](double, double x, std::span<const double> u) { return x * sm * u[0]; };
    c.sigma_x = [sm](double, double, std::span<const double> u) { return sm * u[0]; };
    c.sigma_xx = [](double, double, std::span<const double>) { return 0.0; };

    c.f = [hb, av, lam](double s, double x, std::span<const double> u, double y, double z,
                        double t) {
        const double cx = u[1] * x;
        const double util = cx <= 0.0 ? 0.0 : std::pow(cx, lam) / lam;
        return hb.at(s, t) * (-util - av.beta(s, t) * y - av.gamma(s, t) * z);
    };
    c.f_x = [hb, lam](double s, double x, std::span<const double> u, double, double, double t) {
        const double cx = u[1] * x;
        return cx <= 0.0 ? 0.0 : -hb.at(s, t) * u[1] * std::pow(cx, lam - 1.0);
    };
    c.f_y = [hb, av](double s, double, std::span<const double>, double, double, double t) {
        return -hb.at(s, t) * av.beta(s, t);
    };
    c.f_z = [hb, av](double s, double, std::span<const double>, double, double, double t) {
        return -hb.at(s, t) * av.gamma(s, t);
    };
    c.f_hess = [hb, lam](double s, double x, std::span<const double> u, double, double,
                         double t) {
        Hessian3 hess;
        const double cx = u[1] * x;
        if (cx > 0.0)
            hess.xx = -hb.at(s, t) * u[1] * u[1] * (lam - 1.0) * std::pow(cx, lam - 2.0);
        return hess;
    };

    c.h = [hh, lam_hat, big_t](double x, double t) {
        return x <= 0.0 ? 0.0 : -hh.at(big_t, t) * std::pow(x, lam_hat) / lam_hat;
    };
    c.h_x = [hh, lam_hat, big_t](double x, double t) {
        return -hh.at(big_t, t) * std::pow(x, lam_hat - 1.0);
    };
    c.h_xx = [hh, lam_hat, big_t](double x, double t) {
        return -hh.at(big_t, t) * (lam_hat - 1.0) * std::pow(x, lam_hat - 2.0);
    };

    ControlDomain controls;
    controls.lower = {-1.0, 0.0};
    controls.upper = {1.0, 1.0};
    return build_problem(std::move(c), grid, controls, StateDomain::positive_half_line(), x0,
                         ForwardScheme::log_euler);
}

std::function<double(double)> precommitted_consumption(const MarketParams& market,
                                                       const CrraUtility& utility,
                                                       const DiscountSpec& hbar,
                                                       const DiscountSpec& hbar_hat,
                                                       const TimeGrid& grid) {
    market.validate();
    utility.validate();
    const double lam = utility.lambda;
    const double mu = market.mu();
    const double big_a =
        lam * market.r + lam * mu * mu / (2.0 * (1.0 - lam) * market.sigma * market.sigma);
    const double a = big_a / (1.0 - lam);
    const double t0 = grid.t_start;

    // w' + a w + hbar^{1/(1-lam)} = 0, w(T) = hbar_hat(T)^{1/(1-lam)};
    // c*(s) = hbar(s)^{1/(1-lam)} / w(s). Backward trapezoid on a fine grid.
    const int n = std::max(4 * grid.n_steps, 400);
    const double dr = grid.horizon() / n;
    std::vector<double> s_knots(n + 1), g(n + 1), w(n + 1);
    for (int i = 0; i <= n; ++i) {
        s_knots[i] = t0 + i * dr;
        g[i] = std::pow(hbar.at(s_knots[i], t0), 1.0 / (1.0 - lam));
    }
    w[n] = std::pow(hbar_hat.at(grid.t_end, t0), 1.0 / (1.0 - lam));
    const double ead = std::exp(a * dr);
    for (int i = n - 1; i >= 0; --i)
        w[i] = ead * w[i + 1] + 0.5 * dr * (g[i] + ead * g[i + 1]);

    return [s_knots, g, w, t0, dr, n](double s) {
        const double pos = std::clamp((s - t0) / dr, 0.0, static_cast<double>(n));
        const int i = std::min(static_cast<int>(pos), n - 1);
        const double frac = pos - i;
        const double gi = g[i] + frac * (g[i + 1] - g[i]);
        const double wi = w[i] + frac * (w[i + 1] - w[i]);
        return gi / wi;
    };
}

MertonBaseline classical_merton_baseline(const MarketParams& market, const CrraUtility& utility,
                                         double delta, const TimeGrid& grid) {
    market.validate();
    utility.validate();
    const double lam = utility.lambda;
    const double mu = market.mu();
    const double raw_zeta = mu / ((1.0 - lam) * market.sigma * market.sigma);

    MertonBaseline base;
    base.zeta = std::clamp(raw_zeta, -1.0, 1.0);
    base.zeta_clamped = base.zeta != raw_zeta;
    base.consumption = precommitted_consumption(market, utility, DiscountSpec::exponential(delta),
                                                DiscountSpec::exponential(delta), grid);
    const double zeta = base.zeta;
    const auto consumption = base.consumption;
    base.policy = [zeta, consumption](double s, double) -> Control {
        return {zeta, consumption(s)};
    };

    // grid-argmin validation at three sampled (t, x): with the first-order
    // condition values p = -upsilon'(c x), q = -mu p / sigma and any P > 0,
    // the Hamiltonian vertex must sit at (zeta*, c*(t)) within one cell
    MertonSpec spec;
    spec.market = market;
    spec.running_utility = utility;
    spec.terminal_utility = utility;
    spec.hbar = DiscountSpec::exponential(delta);
    spec.hbar_hat = DiscountSpec::exponential(delta);
    const ProblemInstance probe = build_merton_problem(spec, grid, 1.0);

    const double h = grid.horizon();
    const std::pair<double, double> samples[] = {
        {grid.t_start + 0.1 * h, 1.0}, {grid.t_start + 0.5 * h, 0.5}, {grid.t_start + 0.8 * h, 2.0}};
    for (const auto& [t, x] : samples) {
        HamiltonianArgs args;
        args.s = args.t = t;
        args.x = args.x_bar = x;
        const double c_star = consumption(t);
        args.u_bar = {zeta, c_star};
        args.p = -utility.marginal(c_star * x);
        args.q = -mu * args.p / market.sigma;
        args.P = (1.0 - lam) * std::pow(c_star * x, lam - 2.0);
        const ArgminResult arg = argmin_hamiltonian(probe.bundle, args, probe.controls, 201);
        for (std::size_t k = 0; k < args.u_bar.size(); ++k)
            if (std::abs(arg.minimizer[k] - args.u_bar[k]) > arg.cell_width[k] * (1.0 + 1e-9) &&
                !base.zeta_clamped)
                throw std::runtime_error(
                    "classical_merton_baseline: argmin validation mismatch beyond one cell");
    }
    return base;
}

PolicyConditionVerdict verify_policy_conditions(const MertonSpec& spec,
                                                const ProblemInstance& problem,
                                                const FeedbackPolicy& policy, double t, double x,
                                                std::size_t n_paths, std::uint64_t seed) {
    const int knot0 = problem.grid.nearest_knot(t);
    if (knot0 >= problem.grid.n_knots() - 1)
        throw std::invalid_argument("verify_policy_conditions: t too close to horizon");
    const ProblemInstance sub = problem.restarted(knot0, x);
    const double t0 = sub.grid.t_start;
    const double mu = spec.market.mu();
    const double sm = spec.market.sigma;

    const BrownianEnsemble ensemble(sub.grid, n_paths, seed);
    PolicyRun run = solve_state_forward(sub, policy, ensemble);
    const BsdeSolution utility = solve_bsde_regression(sub, run.controls, run.states, ensemble);
    const CandidateTuple tuple{&run.states, &run.controls, &utility};
    const BsdeSolution first = solve_first_adjoint(sub, tuple, ensemble);

    const std::size_t m = run.states.paths();
    const int knots = sub.grid.n_knots();
    double acc_i = 0.0, scale_i = 0.0, acc_ii = 0.0, scale_ii = 0.0;
    for (int i = 0; i < knots - 1; ++i) {
        const double s = sub.grid.knot(i);
        const double gamma_s = spec.aversion.gamma(s, t0);
        const double hbar_s = spec.hbar.at(s, t0);
        double res_i = 0.0, sc_i = 0.0, res_ii = 0.0, sc_ii = 0.0;
        for (std::size_t p = 0; p < m; ++p) {
            const double pv = first.y_at(p, i);
            const double qv = first.z_at(p, i);
            res_i += (mu - sm * gamma_s) * pv + sm * qv;
            sc_i += std::abs(mu * pv);
            const double cons = run.controls.at(p, i)[1];
            const double cx = cons * run.states.at(p, i);
            const double marg = cx > 0.0 ? spec.running_utility.marginal(cx) : 1e300;
            res_ii += pv + hbar_s * marg;
            sc_ii += std::abs(pv);
        }
        acc_i += std::abs(res_i / static_cast<double>(m));
        scale_i += sc_i / static_cast<double>(m);
        acc_ii += std::abs(res_ii / static_cast<double>(m));
        scale_ii += sc_ii / static_cast<double>(m);
    }

    PolicyConditionVerdict v;
    v.residual_i = acc_i / std::max(scale_i, 1e-300);
    v.residual_ii = acc_ii / std::max(scale_ii, 1e-300);

    const Control u0 = policy(t0, x);
    const double p0 = first.y0;
    if (p0 < 0.0) {
        const double target = inverse_marginal_upsilon(p0, spec.running_utility.lambda) / x;
        v.residual_iii = std::abs(u0[1] - target) / std::abs(target);
    } else {
        v.residual_iii = std::numeric_limits<double>::infinity();
    }

    v.pass_i = v.residual_i <= v.tolerance;
    v.pass_ii = v.residual_ii <= v.tolerance;
    v.pass_iii = v.residual_iii <= v.tolerance;
    v.overall = v.pass_i && v.pass_ii && v.pass_iii;
    return v;
}

} // namespace tic
