#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sirlt/lattice.hpp"

namespace sirlt {

class LatticeField;

/// Lazy nearest-neighbour walk on Z^d: moves {0, +-e_1, ..., +-e_d}, each
/// with probability 1/(2d+1).
struct WalkSpec {
    int d = 2;

    explicit WalkSpec(int dim) : d(dim) { check_dimension(dim); }

    int num_moves() const { return 2 * d + 1; }
    double step_prob() const { return 1.0 / num_moves(); }
    /// sigma^2 = 2/(2d+1) as numerator/denominator.
    std::int64_t variance_num() const { return 2; }
    std::int64_t variance_den() const { return num_moves(); }
    double walk_variance() const { return 2.0 / num_moves(); }
};

class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class HorizonError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

inline constexpr std::size_t kDefaultKernelBudgetBytes = std::size_t{1} << 30;

/// Bytes needed to store P_0..P_{n_max} on their support boxes.
std::size_t kernel_table_bytes(int d, int n_max);

/// Transition probabilities P_i(x), 0 <= i <= n_max, stored densely on the
/// support boxes |x|_inf <= i. Immutable after construction.
class KernelTable {
public:
    KernelTable(WalkSpec spec, int n_max, std::size_t budget_bytes = kDefaultKernelBudgetBytes);

    int dim() const { return spec_.d; }
    const WalkSpec& spec() const { return spec_; }
    int n_max() const { return static_cast<int>(rows_.size()) - 1; }

    const BoxGrid& row(int i) const;
    double p(int i, const Site& x) const { return row(i).value(x); }

    /// G_n(x) = sum_{i<n} P_i(x) on the box |x|_inf <= n-1 (empty for n = 0).
    BoxGrid green(int n) const;
    /// Pointwise G_n(x).
    double green_at(int n, const Site& x) const;

    /// Binary cache: magic, version, endianness tag, d, n_max, then the
    /// rows as row-major little/big-endian (native) doubles.
    void save(const std::string& path) const;
    static KernelTable load(const std::string& path, std::size_t budget_bytes = kDefaultKernelBudgetBytes);
    /// Load from `path` when it holds a table of the same d with at least
    /// n_max steps; otherwise build and (when path is non-empty) write it.
    static KernelTable cached(const std::string& path, WalkSpec spec, int n_max,
                              std::size_t budget_bytes = kDefaultKernelBudgetBytes);

private:
    KernelTable(WalkSpec spec, std::vector<BoxGrid> rows) : spec_(spec), rows_(std::move(rows)) {}

    WalkSpec spec_;
    std::vector<BoxGrid> rows_;
};

/// Streams P_0, P_1, ... without storing the history. With a positive
/// `window` and `horizon`, rows are clipped to the light cone needed to get
/// exact values on |x|_inf <= window up to step horizon - 1.
class KernelStepper {
public:
    explicit KernelStepper(WalkSpec spec, int window = -1, int horizon = -1);

    int step() const { return step_; }
    const BoxGrid& current() const { return current_; }
    void advance();

private:
    WalkSpec spec_;
    int window_;
    int horizon_;
    int step_ = 0;
    BoxGrid current_;
    BoxGrid spare_;
};

struct KernelExactness {
    int d = 2;
    int n_max = 0;
    double max_mass_error = 0.0;    // max_i |sum_x P_i(x) - 1|
    int worst_mass_row = 0;
    bool symmetric = true;          // exact equality under sign flips and axis swaps
    int symmetry_rows = 0;
    std::string symmetry_witness;
    bool support_ok = true;         // row i lives on |x|_inf <= i
    double max_ck_error = 0.0;      // |P_{a+b}(x) - sum_z P_a(z) P_b(x-z)|
    int ck_checks = 0;

    bool pass(double mass_tol = 1e-12, double ck_tol = 1e-10) const {
        return max_mass_error <= mass_tol && symmetric && support_ok && max_ck_error <= ck_tol;
    }
};

/// Streams P_0..P_{n_max} once: mass of every row (compensated sum),
/// symmetry on every row up to 64 and on powers of two and the last row,
/// and Chapman-Kolmogorov spot checks P_n = P_a * P_{n-a} for a in {1, 2, 5}
/// at a handful of sites, plus P_{2m} = P_m * P_m for small m.
KernelExactness check_kernel_exactness(WalkSpec spec, int n_max);

/// G_n on the box |x|_inf <= window for each requested n, computed by
/// streaming the kernel inside the light cone.
std::vector<BoxGrid> green_window(WalkSpec spec, std::span<const int> ns, int window);

/// (mu * G_n)(x) on the bounding box of supp(mu) grown by n-1.
BoxGrid green_convolve(const KernelTable& table, const LatticeField& mu, int n);

/// (mu * G_n)(x) at a single lattice site.
double green_convolve_at(const KernelTable& table, const LatticeField& mu, int n, const Site& x);

/// Continuous extension of (t, x) -> (mu G_t)(x): linear in t between
/// integer steps and multilinear in x between lattice sites.
double green_interpolate(const KernelTable& table, const LatticeField& mu, double t,
                         std::span<const double> x);

/// Gauss kernel phi_s(x) = (2 pi s)^{-d/2} exp(-|x|^2 / (2 s)).
double gauss_phi(int d, double s, std::span<const double> x);
double gauss_phi(int d, double s, const Site& x, double scale = 1.0);
/// Phi_s(x, y) = phi_s(x) + phi_s(y).
double gauss_Phi(int d, double s, const Site& x, const Site& y, double scale = 1.0);

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Heat-occupation integral q_t(x) = int_0^t phi_s(x) ds by adaptive
/// Simpson quadrature on [1e-8, t]. Diverges at x = 0 in d = 2, 3, which is
/// rejected with DomainError.
double heat_occupation(int d, double t, std::span<const double> x, double rel_tol = 1e-10);

using TestFunction = std::function<double(std::span<const double>)>;

/// Psi^k_t(x) = sum_y psi(y/sqrt k) G_{kt}(sqrt k x - y) / k at lattice points
/// (t in Z/k, x in Z^d/sqrt k), linearly interpolated elsewhere.
/// `psi_radius` bounds the support of psi.
class RescaledGreenTest {
public:
    RescaledGreenTest(const KernelTable& table, TestFunction psi, double psi_radius, int k);

    double operator()(double t, std::span<const double> x) const;
    /// Value at lattice time j/k and lattice point z/sqrt(k).
    double at_lattice(int j, const Site& z) const;
    double psi_max() const { return psi_max_; }

private:
    const KernelTable* table_;
    int k_;
    std::vector<std::pair<Site, double>> samples_;
    double psi_max_ = 0.0;
};

}  // namespace sirlt
