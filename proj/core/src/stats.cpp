#include "sirlt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace sirlt {

void RunningStats::add(double v) {
    ++n_;
    const double d = v - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (v - mean_);
}

void RunningStats::merge(const RunningStats& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
}

double RunningStats::variance() const { return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1); }

double RunningStats::se() const { return n_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_)); }

RunningStats summarize(std::span<const double> xs) {
    RunningStats s;
    for (double v : xs) s.add(v);
    return s;
}

double two_sample_z(const RunningStats& a, const RunningStats& b) {
    const double se = std::hypot(a.se(), b.se());
    const double diff = a.mean() - b.mean();
    if (se == 0.0) {
        if (diff == 0.0) return 0.0;
        return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
    return diff / se;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_pvalue(double distance, std::size_t n, std::size_t m) {
    if (n == 0 || m == 0) throw std::invalid_argument("ks_pvalue: empty sample");
    const double ne = static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m);
    const double s = std::sqrt(ne);
    const double lambda = (s + 0.12 + 0.11 / s) * distance;
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 200; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

double ks_critical(std::size_t n, std::size_t m, double alpha) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

OlsFit ols_hc0(std::span<const double> rows, std::size_t p, std::span<const double> y) {
    if (p == 0 || rows.size() != p * y.size()) throw std::invalid_argument("ols_hc0: design shape mismatch");
    const auto n = static_cast<Eigen::Index>(y.size());
    const auto pp = static_cast<Eigen::Index>(p);
    if (n <= pp) throw std::invalid_argument("ols_hc0: need more rows than columns");
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(rows.data(), n, pp);
    Eigen::Map<const Eigen::VectorXd> Y(y.data(), n);
    const Eigen::MatrixXd xtx = X.transpose() * X;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) throw std::runtime_error("ols_hc0: singular design");
    const Eigen::VectorXd beta = ldlt.solve(X.transpose() * Y);
    const Eigen::VectorXd resid = Y - X * beta;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(pp, pp);
    for (Eigen::Index i = 0; i < n; ++i) meat.noalias() += resid(i) * resid(i) * X.row(i).transpose() * X.row(i);
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(pp, pp));
    const Eigen::MatrixXd cov = inv * meat * inv;
    OlsFit fit;
    fit.n = y.size();
    for (Eigen::Index k = 0; k < pp; ++k) {
        fit.coef.push_back(beta(k));
        fit.se.push_back(std::sqrt(std::max(cov(k, k), 0.0)));
    }
    return fit;
}

double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median: empty sample");
    const std::size_t h = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(h), xs.end());
    const double hi = xs[h];
    if (xs.size() % 2 == 1) return hi;
    const double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(h));
    return 0.5 * (lo + hi);
}

}  // namespace sirlt
