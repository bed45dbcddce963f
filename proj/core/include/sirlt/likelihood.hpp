#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sirlt/brw.hpp"
#include "sirlt/field.hpp"
#include "sirlt/kernel.hpp"

namespace sirlt {

/// A path with X_t(x) > 0 but no parents next door (lambda = 0) has
/// probability zero under the envelope.
class ImpossiblePathError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct SiteFactor {
    int t = 0;
    Site x{0, 0, 0};
    std::int64_t y = 0;
    double lambda = 0.0;
    std::int64_t recovered = 0;
    double log_factor = 0.0;
    double delta = 0.0;  // (y - lambda) / N^alpha
    double rho = 0.0;    // R / N^(1 - alpha)
};

struct LikelihoodBreakdown {
    std::int64_t village = 1;
    double alpha = 0.5;
    double log_lr = 0.0;
    double s1 = 0.0;       // sum Delta rho
    double s2 = 0.0;       // (1/2) sum Delta^2 rho^2
    double epsilon = 0.0;  // log_lr + s1 + s2
    std::size_t active = 0;  // site-times with R > 0
    std::vector<SiteFactor> factors;  // only with keep_factors

    double lr() const;
};

/// Log of the likelihood ratio between the modified epidemic and the Poisson
/// envelope along a trajectory. Only site-times with R_t(x) > 0 carry a
/// factor other than 1; they are visited in (t, site key) order and summed
/// with compensation.
LikelihoodBreakdown log_lr(const Trajectory& traj, std::int64_t village, double alpha, bool keep_factors = false);

/// Single factor [(1 - kappa(y)) + lambda/(y+1) kappa(y+1)] in log space.
double log_lr_factor(std::int64_t y, double lambda, std::int64_t recovered, std::int64_t village);

/// A_k psi(x) = [sum_e psi(x + e/sqrt k) - (2d+1) psi(x)] k / (2d+1).
double difference_operator(const TestFunction& psi, int d, double k, std::span<const double> x);

struct MartingaleSeries {
    int k = 1;
    std::vector<double> times;       // j / k
    std::vector<double> values;      // M_{j/k}
    std::vector<double> mass;        // <F_k X_j, 1>
    std::vector<double> pairing;     // <F_k X_j, psi>
    std::vector<double> drift;       // <F_k X_j, A_k psi> / k
};

/// M_t(psi) = <F_k X_kt, psi> - <F_k X_0, psi> - sum_{s<kt} <F_k X_s, A_k psi>/k
/// at t = j/k, j = 0..horizon (left-endpoint sum).
MartingaleSeries martingale_functional(const Trajectory& traj, const TestFunction& psi, int k);

struct MartingaleRegression {
    std::vector<std::string> regressors;  // intercept, mass, pairing
    std::vector<double> coef;
    std::vector<double> se;               // HC0
    std::size_t observations = 0;
    /// max_i |coef_i| / se_i.
    double max_abs_t() const;
};

/// Regresses the increments M_{(j+1)/k} - M_{j/k} of martingale_functional on
/// (1, <F_k X_j, 1>, <F_k X_j, psi>), pooling j = 0..horizon-1 over `reps`
/// Poisson-envelope paths from mu. Under the martingale property every
/// coefficient is 0.
MartingaleRegression martingale_regression(const LatticeField& mu, const TestFunction& psi, int k, int horizon,
                                           std::size_t reps, std::uint64_t seed, unsigned workers = 1);

using TrajectoryFunctional = std::function<double(const Trajectory&)>;

struct NamedFunctional {
    std::string id;
    TrajectoryFunctional f;
};

/// Five bounded functionals: 1, extinction by the horizon, min(R_H(0), 10),
/// min(total occupation, 30) / 30, min(max_x X_H(x), 5).
std::vector<NamedFunctional> standard_battery();

struct ImportanceResult {
    std::string id;
    std::int64_t village = 1;
    double lhs = 0.0, lhs_se = 0.0;
    double rhs = 0.0, rhs_se = 0.0;
    double z = 0.0;
    bool degenerate = false;
};

struct ImportanceOptions {
    std::int64_t village = 10;
    double alpha = 0.5;
    int horizon = 4;
    std::size_t reps = 10000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

/// Q-side: modified epidemic with Poisson arrivals; P-side: Poisson envelope
/// reweighted by exp(log LR). Every functional is evaluated on the same
/// replicates; z uses the unpaired pooled standard error.
std::vector<ImportanceResult> importance_check(std::span<const NamedFunctional> battery, const LatticeField& mu,
                                               const ImportanceOptions& opt);

void write_importance_header(std::ostream& os);
void write_importance_row(std::ostream& os, const ImportanceResult& r);

}  // namespace sirlt
