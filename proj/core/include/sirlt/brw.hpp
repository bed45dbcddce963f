#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "sirlt/field.hpp"
#include "sirlt/offspring.hpp"
#include "sirlt/rng.hpp"

namespace sirlt {

inline constexpr std::int64_t kDefaultExplosionGuard = 100'000'000;

class ExplosionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One generation of the branching envelope. Arrivals at x + e from the
/// m particles at x are drawn as a single variate per (site, direction),
/// keyed by (Arrivals, step, site, direction) on `rng`.
LatticeField brw_step(const LatticeField& x, const OffspringLaw& law, const RngContext& rng, std::uint64_t step,
                      Purpose purpose = Purpose::Arrivals);

/// S(x) = sum_e X(x + e), so the one-step predictor is lambda = S / (2d+1).
LatticeField neighbour_sum(const LatticeField& x);

/// Generations X_0..X_T of one BRW path.
struct Trajectory {
    int d = 2;
    std::vector<LatticeField> generations;

    int horizon() const { return static_cast<int>(generations.size()) - 1; }
    const LatticeField& at(int t) const { return generations.at(static_cast<std::size_t>(t)); }
    /// R_n = sum_{i<n} X_i.
    LatticeField occupation(int n) const;
    /// First t with X_t empty, or -1 if the path survives to the horizon.
    int extinction_time() const;
};

/// Observer called with (t, X_t) for t = 0..horizon; returning false stops
/// the run early.
using GenerationObserver = std::function<bool(int, const LatticeField&)>;

/// Evolve without storing the history. Returns the last generation reached.
LatticeField brw_evolve(const LatticeField& mu, const OffspringLaw& law, int horizon, const RngContext& rng,
                        const GenerationObserver& observer,
                        std::int64_t explosion_guard = kDefaultExplosionGuard);

Trajectory brw_run(const LatticeField& mu, const OffspringLaw& law, int horizon, const RngContext& rng,
                   std::int64_t explosion_guard = kDefaultExplosionGuard);

/// Streaming writer: rows `t,x,y[,z],count` for every generation.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

struct BrwSummary {
    std::uint64_t replicate = 0;
    int horizon = 0;
    std::int64_t initial_mass = 0;
    std::int64_t final_mass = 0;
    std::int64_t max_mass = 0;
    std::int64_t total_occupation = 0;
    int extinction_time = -1;
};

BrwSummary summarize(const Trajectory& traj, std::uint64_t replicate);
void write_brw_summary_header(std::ostream& os);
void write_brw_summary_row(std::ostream& os, const BrwSummary& s);

}  // namespace sirlt
