#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "tic/coefficients.hpp"
#include "tic/control.hpp"
#include "tic/time_grid.hpp"

namespace tic {

/// Market constants for the single-stock investment-consumption model; the
/// stock follows a geometric Brownian motion with mean return rho.
struct MarketParams {
    double r = 0.03;      // risk-free rate, 1/years
    double rho = 0.05;    // stock mean return, 1/years
    double sigma = 0.3;   // volatility, 1/sqrt(years)

    double mu() const { return rho - r; } // excess return
    void validate() const;
};

/// CRRA utility upsilon(x) = x^lambda / lambda with lambda in ]0,1[.
struct CrraUtility {
    double lambda = 0.5;

    double value(double x) const;    // 0 at x = 0
    double marginal(double x) const; // x^(lambda-1)
    void validate() const;
};

/// Inverse of the negated marginal utility, Upsilon(p) = (-p)^(1/(lambda-1))
/// on the domain p < 0; satisfies -upsilon'(Upsilon(p)) = p.
double inverse_marginal_upsilon(double p_val, double lambda);

/// Discount factor as a function of elapsed time tau = s - t, with value 1
/// at tau = 0.
struct DiscountSpec {
    enum class Kind { exponential, hyperbolic, custom };
    Kind kind = Kind::exponential;
    double rate = 0.0;  // exponential delta
    double k = 0.0;     // hyperbolic K
    std::function<double(double tau)> table; // custom

    double at(double s, double t) const;

    static DiscountSpec exponential(double delta);
    static DiscountSpec hyperbolic(double big_k);
    static DiscountSpec custom(std::function<double(double)> fn);
};

/// Hyperbolic discount factor 1/(1 + K tau).
double hyperbolic_discount(double big_k, double tau);

/// Aversion coefficients beta(s;t), gamma(s;t) of the recursive driver;
/// bounded nonnegative deterministic functions (constants by default).
struct AversionProcesses {
    std::function<double(double s, double t)> beta;
    std::function<double(double s, double t)> gamma;

    static AversionProcesses constants(double beta_val, double gamma_val);
    static AversionProcesses none() { return constants(0.0, 0.0); }
};

/// Full problem data for the section-7 application.
struct MertonSpec {
    MarketParams market;
    CrraUtility running_utility;          // upsilon
    CrraUtility terminal_utility;         // upsilon-hat (same lambda by default)
    DiscountSpec hbar = DiscountSpec::exponential(0.0);     // running discount
    DiscountSpec hbar_hat = DiscountSpec::exponential(0.0); // terminal discount
    AversionProcesses aversion = AversionProcesses::none();
};

/// Wealth dynamics b = x(r + mu zeta - c), sigma = x sigma_mkt zeta; driver
/// f = hbar [ -upsilon(c x) - beta y - gamma z ]; terminal
/// h = -hbar_hat(T;t) upsilon_hat(x). Control (zeta, c) in [-1,1] x [0,1],
/// analytic derivatives, log-Euler scheme.
ProblemInstance build_merton_problem(const MertonSpec& spec, const TimeGrid& grid, double x0);

/// Deterministic precommitted consumption rate c*(s) for the time-zero
/// problem under a general discount pair, computed by quadrature on the
/// standard CRRA wealth-normalization ODE.
std::function<double(double)> precommitted_consumption(const MarketParams& market,
                                                       const CrraUtility& utility,
                                                       const DiscountSpec& hbar,
                                                       const DiscountSpec& hbar_hat,
                                                       const TimeGrid& grid);

/// Classical finite-horizon baseline under exponential discounting:
/// constant stock fraction zeta* = mu / ((1-lambda) sigma^2) (clamped to the
/// control box) and the deterministic consumption rate above. Validated at
/// construction by Hamiltonian grid search at three sampled (t, x).
struct MertonBaseline {
    double zeta = 0.0;
    bool zeta_clamped = false;
    std::function<double(double)> consumption; // c*(s)
    FeedbackPolicy policy;                     // (zeta*, c*(s)) feedback form
};

MertonBaseline classical_merton_baseline(const MarketParams& market, const CrraUtility& utility,
                                         double delta, const TimeGrid& grid);

/// Residuals of the three first-order conditions of the section-7 theorem
/// along a policy-generated tuple restarted from (t, x):
///   (i)   [mu - sigma gamma] p + sigma q = 0
///   (ii)  p(s;t) + hbar(s;t) upsilon'(Pi2(s, X) X) = 0
///   (iii) Pi2(t, x) = Upsilon(p(t;t)) / x
/// Residuals are cross-path means per knot, averaged in absolute value over
/// the knots, relative to the condition's own scale.
struct PolicyConditionVerdict {
    double residual_i = 0.0;
    double residual_ii = 0.0;
    double residual_iii = 0.0;
    bool pass_i = false, pass_ii = false, pass_iii = false;
    bool overall = false;
    double tolerance = 0.02;
};

PolicyConditionVerdict verify_policy_conditions(const MertonSpec& spec,
                                                const ProblemInstance& problem,
                                                const FeedbackPolicy& policy, double t, double x,
                                                std::size_t n_paths = 20000,
                                                std::uint64_t seed = 77001);

} // namespace tic
