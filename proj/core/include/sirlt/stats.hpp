#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sirlt {

/// Welford accumulator; merge() combines partial results in a fixed order.
class RunningStats {
public:
    void add(double v);
    void merge(const RunningStats& o);
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    /// Unbiased sample variance (0 with fewer than two samples).
    double variance() const;
    double se() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

RunningStats summarize(std::span<const double> xs);

/// (a - b) / sqrt(se_a^2 + se_b^2); 0 when both standard errors vanish and
/// the means agree, +-inf when they vanish and the means differ.
double two_sample_z(const RunningStats& a, const RunningStats& b);

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b| (ties handled).
double ks_distance(std::vector<double> a, std::vector<double> b);

/// Asymptotic p-value of the two-sample KS statistic (Stephens' effective-n
/// correction on the Kolmogorov series).
double ks_pvalue(double distance, std::size_t n, std::size_t m);

/// Smallest KS distance that is resolvable at level `alpha` with samples of
/// sizes n and m: c(alpha) sqrt((n + m) / (n m)).
double ks_critical(std::size_t n, std::size_t m, double alpha = 0.05);

struct OlsFit {
    std::vector<double> coef;
    std::vector<double> se;  // heteroskedasticity-robust (HC0)
    std::size_t n = 0;
};

/// Least squares y ~ X with HC0 sandwich standard errors. `rows` holds the
/// design matrix row-major with `p` columns.
OlsFit ols_hc0(std::span<const double> rows, std::size_t p, std::span<const double> y);

/// Median (average of the middle pair for even sizes).
double median(std::vector<double> xs);

}  // namespace sirlt
