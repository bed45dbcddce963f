#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sirlt/rng.hpp"

namespace sirlt {

/// Reproduction law of the branching envelope.
///
/// - envelope(N): i.i.d. Binomial(N, 1/((2d+1)N)) offspring at each of the
///   2d+1 target sites.
/// - poisson_unit(): i.i.d. Poisson(1/(2d+1)) offspring per target site,
///   equivalently Poisson(1) offspring placed uniformly.
/// - custom(q): total offspring K with P(K = j) = q[j], each child placed
///   uniformly and independently on the 2d+1 target sites.
class OffspringLaw {
public:
    enum class Kind { EnvelopeN, PoissonUnit, Custom };

    static OffspringLaw envelope(std::int64_t village_size);
    static OffspringLaw poisson_unit();
    static OffspringLaw custom(std::vector<double> pmf);

    Kind kind() const { return kind_; }
    std::int64_t village_size() const { return village_; }
    const std::vector<double>& pmf() const { return pmf_; }
    std::string describe() const;

    /// Mean total offspring.
    double mean() const;
    /// Exact mean as a reduced fraction; only for envelope and poisson_unit.
    std::pair<std::int64_t, std::int64_t> mean_rational(int d) const;
    /// Variance of the total offspring count in dimension d.
    double variance(int d) const;

    /// Factorial moments of the per-site arrival counts xi_e:
    /// E[xi_e (xi_e - 1)] and E[xi_e xi_e'] for e != e'.
    double factorial_same(int d) const;
    double factorial_cross(int d) const;

    /// Whether children are placed i.i.d. uniformly given the total (true for
    /// poisson_unit and custom laws).
    bool iid_placement() const { return kind_ != Kind::EnvelopeN; }

    /// f(u) = log sum_j Q_j u^j (iid-placement laws only).
    double log_pgf(double u) const;
    /// Taylor coefficients c_l = f^{(l)}(1)/l! for l = 0..max_order.
    std::vector<double> log_pgf_series(int max_order) const;

    /// Draw the offspring counts that `parents` particles at one site send to
    /// each of the 2d+1 targets (moves(d) order). Uses streams keyed by
    /// (purpose, step, site_key, direction).
    void sample(std::int64_t parents, int d, const RngContext& rng, Purpose purpose, std::uint64_t step,
                std::uint64_t site_key, std::span<std::int64_t> out) const;

private:
    OffspringLaw(Kind kind, std::int64_t village, std::vector<double> pmf)
        : kind_(kind), village_(village), pmf_(std::move(pmf)) {}

    Kind kind_;
    std::int64_t village_ = 0;
    std::vector<double> pmf_;
};

}  // namespace sirlt
