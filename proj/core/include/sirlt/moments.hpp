#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sirlt/field.hpp"
#include "sirlt/kernel.hpp"
#include "sirlt/offspring.hpp"

namespace sirlt {

/// gen_1_to_n: nu_n is the log-MGF of sum_{i=1}^{n} <X_i, psi> (base nu_0 = 0).
/// gen_0_to_n_minus_1: nu_n is the log-MGF of <R_n, psi> = sum_{i<n} <X_i, psi>.
enum class Convention { Gen1ToN, Gen0ToNMinus1 };

Convention parse_convention(const std::string& s);
std::string convention_name(Convention c);

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultNuCeiling = 50.0;

/// nu_i and kappa_{h,i} on boxes. For the plain recursions the index i is
/// the number of generations n; for time-increment tables it is the offset
/// m (window length fixed at `window`).
struct CumulantTable {
    int d = 2;
    Convention convention = Convention::Gen1ToN;
    int h_max = 0;
    int n = 0;
    int window = -1;  // n of the time-increment window, -1 for plain tables
    BoxGrid psi;
    std::string law;
    std::vector<BoxGrid> nu;                  // nu[i], may be empty when only cumulants were asked for
    std::vector<std::vector<BoxGrid>> kappa;  // kappa[h][i], h = 1..h_max (kappa[0] unused)
    double truncation_bound = 0.0;

    double kappa_at(int h, int i, const Site& x) const { return kappa.at(static_cast<std::size_t>(h)).at(static_cast<std::size_t>(i)).value(x); }
    double nu_at(int i, const Site& x) const { return nu.at(static_cast<std::size_t>(i)).value(x); }

    /// <mu, nu_i> and sum_h theta^h <mu, kappa_{h,i}>.
    double pair_nu(const LatticeField& mu, int i) const;
    double pair_kappa(const LatticeField& mu, int h, int i) const;
};

/// JSON dump: box origin, extents and row-major values of every array.
std::string to_json(const CumulantTable& table);

/// E X_n = mu * P_n and E R_n = mu * G_n (grids on supp mu grown by n).
std::pair<BoxGrid, BoxGrid> mean_fields(const LatticeField& mu, const KernelTable& table, int n);

/// E U_n(x)^2 for a BRW started from one particle at the origin. For laws
/// with i.i.d. placement this is P_n(x) + sigma^2 sum_i sum_z P_i(z) P_{n-i}(x-z)^2;
/// envelope_N uses the exact factorial moments of its per-site counts.
double second_moment(const Site& x, int n, const OffspringLaw& law, const KernelTable& table);

/// nu_0..nu_n for the given convention.
CumulantTable nu_recursion(const BoxGrid& psi, int n, const OffspringLaw& law, Convention convention,
                           double ceiling = kDefaultNuCeiling);

enum class CumulantEngine { Direct, Xi };

/// kappa_{h,i} for h <= h_max and i <= n. The direct engine iterates the
/// composition sums over P_m(h) one generation at a time; the Xi engine
/// builds the nonlinear sources Xi_i and convolves them with the kernel
/// table: kappa_{h,n} = sum_l c_1^l P_l * Xi_{n-l}. `table` must reach n.
CumulantTable cumulant_recursion(const BoxGrid& psi, int h_max, int n, const OffspringLaw& law,
                                 Convention convention, CumulantEngine engine, const KernelTable* table = nullptr);

/// Cumulants of <R_{n+m'} - R_{m'}, psi> for m' = 0..m (and the matching nu),
/// by conditioning on the first generation. With the Xi engine:
/// kappa_{h,(n,m)} = c_1^m P_m * kappa_{h,(n,0)} + sum_{i<m} c_1^i P_i * Xi~_{n,m-i}.
CumulantTable cumulant_time_increment(const BoxGrid& psi, int n, int m, int h_max, const OffspringLaw& law,
                                      CumulantEngine engine, const KernelTable* table = nullptr,
                                      double ceiling = kDefaultNuCeiling);

/// E^mu exp(sum_{i=1}^{n} <X_i, psi>) by exhaustive enumeration of all
/// offspring counts and ordered placements, one generation at a time per
/// ancestor (subtree values memoised by site). `budget` caps the number of
/// enumerated outcomes. Custom finite-support laws only.
double brute_force_mgf(const BoxGrid& psi, int n, const OffspringLaw& law, const LatticeField& mu,
                       std::size_t budget = 2'000'000);

/// Compositions of h into m positive parts.
std::vector<std::vector<int>> compositions(int h, int m);

/// Dense convolution (f * g)(x) = sum_z f(z) g(x - z).
BoxGrid convolve(const BoxGrid& f, const BoxGrid& g);

}  // namespace sirlt
