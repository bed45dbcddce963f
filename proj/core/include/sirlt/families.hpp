#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sirlt/field.hpp"
#include "sirlt/kernel.hpp"

namespace sirlt {

enum class FamilyKind { PointSpreadD2, BallBoundedD3, RadialSpikeD2, Custom };

FamilyKind parse_family_kind(const std::string& name);
std::string family_kind_name(FamilyKind kind);

struct FamilyParams {
    // point_spread_d2: particles per site.
    int cap = 1;
    // ball_bounded_d3: at most c2 particles in any ball of radius 3 c1 k^{1/6}.
    double c1 = 1.0;
    int c2 = 8;
    // radial_spike_d2: mu(y) = floor(spike_c * (k / (|y|^2 + 1))^{alpha/2}).
    double spike_alpha = 1.0;
    double spike_c = 1.0;
    // custom
    int custom_d = 2;
    std::function<LatticeField(int)> custom;
    double custom_support = 1.0;
    double custom_mass_lo = 0.0;
    double custom_mass_hi = 1.0;
};

/// Generator of initial configurations mu^k with declared mass and support
/// constants: c_lo k <= |mu^k| <= c_hi k and supp mu^k in the ball of radius
/// support_constant() * sqrt(k).
class InitialConfigFamily {
public:
    InitialConfigFamily(FamilyKind kind, FamilyParams params);

    FamilyKind kind() const { return kind_; }
    int dim() const { return d_; }
    const FamilyParams& params() const { return params_; }

    LatticeField generate(int k) const;

    double support_constant() const { return support_; }
    double mass_lower() const { return mass_lo_; }
    double mass_upper() const { return mass_hi_; }

    /// Radius of the balls used by the ball_bounded_d3 condition at level k.
    double ball_radius(int k) const;

    /// Description of the limit measure mu of mu^k rescaled by (1/k, 1/sqrt k).
    std::string limit_description() const;
    /// Density of the limit measure where known (empty function otherwise).
    std::function<double(std::span<const double>)> limit_density() const;

private:
    FamilyKind kind_;
    FamilyParams params_;
    int d_;
    double support_ = 1.0;
    double mass_lo_ = 1.0;
    double mass_hi_ = 1.0;
};

InitialConfigFamily build_family(FamilyKind kind, const FamilyParams& params);

/// Largest number of particles in a closed Euclidean ball of the given radius
/// centred at a lattice site (exhaustive over all centres that can see mass).
std::int64_t max_ball_count(const LatticeField& field, double radius);

/// True when mu(y) >= mu(y') whenever |y| < |y'| and mu is constant on
/// spheres (checked over the support plus one shell).
bool radially_nonincreasing(const LatticeField& field);

struct SmoothnessReport {
    std::vector<int> k_list;
    std::vector<double> t_list;   // sorted decreasing
    std::vector<std::vector<double>> m;  // m[ti][ki]
    std::vector<double> sup_over_k;      // per t
    double slope_estimate = 0.0;         // max over (k, t) of m / t
    double growth_tolerance = 1.25;
    bool monotone_in_t = true;
    bool uniform_in_k = true;
    bool pass = true;
    std::string detail;
};

/// m(k, t) = max_x (mu^k G_{kt})(x) / k^{2 - d/2} over the grid. PASS needs
/// sup_k m(., t) non-increasing as t decreases and, for every t, m(k, t) at
/// most growth_tolerance times its value at the first k of the ladder.
SmoothnessReport validate_spread(const InitialConfigFamily& family, std::span<const int> k_list,
                                 std::span<const double> t_list, const KernelTable& table,
                                 double growth_tolerance = 1.25);

}  // namespace sirlt
