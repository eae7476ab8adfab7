#include "tic/regression.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tic {

namespace {

Eigen::MatrixXd basis_matrix(std::span<const double> x, double shift,
                             double scale, int degree) {
    const auto m = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd b(m, degree + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double z = (x[static_cast<std::size_t>(i)] - shift) / scale;
        double pw = 1.0;
        for (int k = 0; k <= degree; ++k) {
            b(i, k) = pw;
            pw *= z;
        }
    }
    return b;
}

} // namespace

KnotRegression::KnotRegression(std::span<const double> states, int degree,
                               double max_condition)
    : x_(states) {
    if (states.empty()) throw std::invalid_argument("KnotRegression: empty state slice");
    if (degree < 0) throw std::invalid_argument("KnotRegression: negative degree");

    const double n = static_cast<double>(states.size());
    double mean = 0.0;
    for (double v : states) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : states) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / std::max(n - 1.0, 1.0));

    shift_ = mean;
    if (sd < 1e-12 * (1.0 + std::abs(mean))) {
        degree_ = 0; // all states (numerically) identical: plain average
        scale_ = 1.0;
        llt_ = {std::sqrt(n)};
        return;
    }
    scale_ = sd;
    degree_ = std::min<int>(degree, static_cast<int>(states.size()) - 1);

    // Normal matrix on the full degree; shrink while ill-conditioned.
    Eigen::MatrixXd b = basis_matrix(x_, shift_, scale_, degree_);
    Eigen::MatrixXd a = b.transpose() * b;
    while (degree_ > 0) {
        const int p = degree_ + 1;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.topLeftCorner(p, p));
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        if (lo > 0.0 && hi / lo <= max_condition) break;
        --degree_;
        reduced_ = true;
    }
    const int p = degree_ + 1;
    Eigen::LLT<Eigen::MatrixXd> llt(a.topLeftCorner(p, p));
    if (llt.info() != Eigen::Success) {
        degree_ = 0;
        reduced_ = true;
        llt_ = {std::sqrt(n)};
        return;
    }
    Eigen::MatrixXd l = llt.matrixL();
    llt_.assign(l.data(), l.data() + p * p);
}

std::vector<double> KnotRegression::coefficients(
    std::span<const double> targets) const {
    if (targets.size() != x_.size())
        throw std::invalid_argument("KnotRegression: target size mismatch");
    const int p = degree_ + 1;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i < x_.size(); ++i) {
        const double z = degree_ == 0 ? 0.0 : (x_[i] - shift_) / scale_;
        double pw = 1.0;
        for (int k = 0; k < p; ++k) {
            rhs[k] += pw * targets[i];
            pw *= z;
        }
    }
    Eigen::Map<const Eigen::MatrixXd> l(llt_.data(), p, p);
    Eigen::VectorXd c =
        l.triangularView<Eigen::Lower>().solve(rhs);
    c = l.transpose().triangularView<Eigen::Upper>().solve(c);
    return {c.data(), c.data() + p};
}

void KnotRegression::predict(std::span<const double> coef,
                             std::vector<double>& out) const {
    out.resize(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) {
        const double z = degree_ == 0 ? 0.0 : (x_[i] - shift_) / scale_;
        double pw = 1.0, acc = 0.0;
        for (double c : coef) {
            acc += c * pw;
            pw *= z;
        }
        out[i] = acc;
    }
}

std::vector<double> KnotRegression::fit(std::span<const double> targets) const {
    const auto coef = coefficients(targets);
    std::vector<double> out;
    predict(coef, out);
    return out;
}

BinConditional::BinConditional(std::span<const double> states, int n_bins) {
    if (states.empty()) throw std::invalid_argument("BinConditional: empty state slice");
    if (n_bins < 1) throw std::invalid_argument("BinConditional: need at least one bin");
    const std::size_t m = states.size();
    order_.resize(m);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::sort(order_.begin(), order_.end(),
              [&](std::size_t a, std::size_t b) { return states[a] < states[b]; });
    const std::size_t bins = std::min<std::size_t>(static_cast<std::size_t>(n_bins), m);
    bin_start_.reserve(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k)
        bin_start_.push_back(k * m / bins);
}

std::vector<double> BinConditional::fit(std::span<const double> targets) const {
    if (targets.size() != order_.size())
        throw std::invalid_argument("BinConditional: target size mismatch");
    std::vector<double> out(targets.size());
    for (std::size_t k = 0; k + 1 < bin_start_.size(); ++k) {
        const std::size_t lo = bin_start_[k], hi = bin_start_[k + 1];
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += targets[order_[i]];
        const double avg = acc / static_cast<double>(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) out[order_[i]] = avg;
    }
    return out;
}

} // namespace tic
