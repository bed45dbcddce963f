#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "sirlt/kernel.hpp"

namespace sirlt {

/// Kernel and Green-function inequalities checked by exhaustive ratio scans.
enum class BoundId {
    LcltBd,      // P_n(x) <= C phi_n(beta x)
    DisConv,     // sum_z P_m(z) phi_n(beta (x - z)) <= C phi_{m+n}(beta x / 2)
    GreenBd,     // sum_{1<=n<=kT} phi_n(beta x) <= C sum_{1<=n<=kT} P_n(x), |x| <= A sqrt k
    PDiff,       // |P_n(x) - P_n(y)| <= C (|x-y|/sqrt n ^ 1) Phi_n(beta x, beta y)
    PDiffAlpha,  // same with (|x-y|/sqrt n)^gamma
    GreenIndc,   // F_{n,h1} F_{n,h2} <= C n^{2-(d+gamma)/2} F_{n,h1+h2-1}
    Conv,        // sum_i P_i * [F F] <= C n^{2-(d+gamma)/2} F_{n,h1+h2-1}(.; beta/2)
    GreenIndcB,  // J_{m,n,h1} J_{m,n,h2} <= C n^{2-d/2} J_{m,n,h1+h2-1}
    ConvB,       // sum_i P_i * [J J] <= C n^{2-d/2} J_{m,n,h1+h2-1}(.; beta/2)
    FgCentral,   // sum_y f(y) g(x-y) <= sum_y f(y) g(y) for radially decreasing f, g
};

BoundId parse_bound_id(const std::string& name);
std::string bound_id_name(BoundId id);
std::vector<BoundId> all_bound_ids();

struct BoundParams {
    int d = 2;
    double beta = 0.4;
    double gamma = 0.25;
    std::vector<int> n_ladder;        // n (GreenBd: unused)
    std::vector<int> m_ladder;        // DisConv: m; J-suites: window start m >= 1
    std::vector<int> k_ladder;        // GreenBd
    double horizon_t = 1.0;           // GreenBd: T
    double radius_a = 1.0;            // GreenBd: A
    int radius = 12;                  // |x|_inf <= radius
    int offset = 2;                   // L: y = x + v with |v|_inf <= L (pair suites)
    std::vector<std::pair<int, int>> h_pairs{{1, 1}, {1, 2}, {2, 2}, {1, 3}};
    double ceiling = std::numeric_limits<double>::infinity();
};

/// The standard scan used by the acceptance suite and the CLI.
BoundParams standard_bound_params(BoundId id, int d);

struct BoundReport {
    BoundId id = BoundId::LcltBd;
    BoundParams params;
    double constant = 0.0;        // max LHS/RHS over the scan (FgCentral: max LHS - RHS)
    std::string witness;          // point attaining the max
    bool zero_rhs = false;        // RHS vanished where LHS > 0
    std::string zero_rhs_witness;
    std::size_t evaluated = 0;
    int kernel_horizon = 0;
    bool pass = false;
};

/// Largest kernel step the scan touches.
int bound_kernel_horizon(BoundId id, const BoundParams& p);

/// Runs the scan. `table` must reach bound_kernel_horizon(id, p).
BoundReport verify_bounds(BoundId id, const BoundParams& p, const KernelTable& table);

std::string to_json(const BoundReport& r);
void write_bound_header(std::ostream& os);
void write_bound_row(std::ostream& os, const BoundReport& r);

}  // namespace sirlt
