#pragma once

#include <span>
#include <vector>

namespace tic {

/// Least-squares conditional-expectation estimator at one knot: global
/// polynomial basis in the (standardized) state, shared normal matrix so
/// several targets can be fitted against the same knot cheaply.
///
/// A degenerate knot (all states equal, e.g. the initial one) collapses to
/// degree 0, i.e. a plain cross-path average.
class KnotRegression {
public:
    KnotRegression(std::span<const double> states, int degree,
                   double max_condition = 1e10);

    int degree_used() const { return degree_; }
    bool degenerate() const { return degree_ == 0; }
    bool degree_reduced() const { return reduced_; }

    /// Fitted values (estimated conditional expectation) per path.
    std::vector<double> fit(std::span<const double> targets) const;

    /// Regression coefficients in the standardized monomial basis.
    std::vector<double> coefficients(std::span<const double> targets) const;

private:
    std::span<const double> x_;
    double shift_ = 0.0, scale_ = 1.0;
    int degree_ = 0;
    bool reduced_ = false;
    std::vector<double> llt_; // packed Cholesky factor of the normal matrix
    void predict(std::span<const double> coef, std::vector<double>& out) const;
};

/// Nonnegativity-preserving conditional-expectation estimator: equal-count
/// quantile bins on the state, fitted value = bin average. Bin averages of
/// nonnegative targets are nonnegative, which polynomial fits do not
/// guarantee.
class BinConditional {
public:
    BinConditional(std::span<const double> states, int n_bins);

    std::vector<double> fit(std::span<const double> targets) const;

private:
    std::vector<std::size_t> order_; // path indices sorted by state
    std::vector<std::size_t> bin_start_;
};

} // namespace tic
