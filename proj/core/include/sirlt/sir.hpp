#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include "sirlt/brw.hpp"
#include "sirlt/field.hpp"
#include "sirlt/offspring.hpp"
#include "sirlt/rng.hpp"

namespace sirlt {

/// Probability that one of y red-parent arrivals is blue in the modified
/// epidemic: min(y R / N, 1).
double kappa(std::int64_t y, std::int64_t recovered, std::int64_t village);

/// Red (infected) field plus recovered counts, label sets and counters.
struct EpidemicState {
    int d = 2;
    std::int64_t village = 1;
    int t = 0;
    LatticeField red;                                                       // Y_t
    absl::flat_hash_map<std::uint64_t, std::int64_t> recovered;            // R_t = sum_{s<t} Y_s
    absl::flat_hash_map<std::uint64_t, absl::flat_hash_set<std::int32_t>> labels;
    bool uses_labels = false;
    std::int64_t collisions = 0;        // sum of Gamma_t(x)
    std::int64_t errant = 0;            // sum of A_t(x)
    std::int64_t collision_score = 0;   // sum of Gamma_t(x) + (A_t(x) - 1)_+

    /// Initial state with red = mu and R = 0. With `seed_labels` the labels
    /// 1..mu(x) are marked used at every x (requires mu(x) <= N).
    static EpidemicState initial(const LatticeField& mu, std::int64_t village, bool seed_labels);

    std::int64_t recovered_at(std::uint64_t key) const {
        auto it = recovered.find(key);
        return it == recovered.end() ? 0 : it->second;
    }
    std::int64_t total_recovered() const;
    bool extinct() const { return red.empty(); }

    /// Village capacity R + Y <= N at every site and, with labels, |used| = R + Y.
    /// Throws std::logic_error on violation.
    void check_invariants() const;
};

/// Result of assigning uniform labels to the red-parent arrivals at one site.
struct LabelOutcome {
    std::int64_t red = 0;
    std::int64_t collisions = 0;
    std::int64_t errant = 0;
};

/// Each of `arrivals` offspring draws a label in {1..N}. Used labels are
/// errant; repeated fresh labels collide (one winner stays red). Winning
/// labels are inserted into `used`.
LabelOutcome assign_labels(absl::flat_hash_set<std::int32_t>& used, std::int64_t arrivals, std::int64_t village,
                           Stream& stream);

/// One generation of the SIR epidemic under the standard coupling.
void sir_step_standard(EpidemicState& state, const OffspringLaw& law, const RngContext& rng);

/// One generation of the modified epidemic (kappa rule). Works with or
/// without label sets; labels are not consulted.
void sir_step_modified(EpidemicState& state, const OffspringLaw& law, const RngContext& rng);

/// Observer (t, state) called for t = 0..horizon; false stops early.
using EpidemicObserver = std::function<bool(int, const EpidemicState&)>;

EpidemicState sir_run_standard(const LatticeField& mu, std::int64_t village, const OffspringLaw& law, int horizon,
                               const RngContext& rng, const EpidemicObserver& observer = {});

/// Red trajectory Y_0..Y_T of the modified epidemic.
Trajectory modified_sir_run(const LatticeField& mu, std::int64_t village, const OffspringLaw& law, int horizon,
                            const RngContext& rng);

struct CoupledRun {
    std::int64_t village = 1;
    double alpha = 0.5;
    int horizon = 0;
    int steps = 0;  // generations simulated before the envelope died out or the horizon
    std::vector<std::int64_t> envelope_mass;  // |X_t|, t = 0..horizon (zeros after extinction)
    std::vector<std::int64_t> standard_mass;  // |Y^std_t|
    std::vector<std::int64_t> modified_mass;  // |Y^mod_t|
    std::int64_t collisions = 0;
    std::int64_t errant = 0;
    std::int64_t collision_score = 0;
    std::int64_t max_discrepancy = 0;
    std::int64_t standard_recovered = 0;
    std::int64_t modified_recovered = 0;
    int extinction_time = -1;  // of the envelope

    double scaled_collision_score() const;
    double scaled_max_discrepancy() const;
};

/// Envelope plus both colourings on one probability space. Envelope
/// particles at a site are split into four classes (red in both, red only
/// in the standard colouring, red only in the modified one, blue in both);
/// each class reproduces independently, so each colouring sees exactly its
/// own marginal law. Domination and capacity are checked every step.
CoupledRun coupled_run(const LatticeField& mu, std::int64_t village, double alpha, int horizon,
                       const OffspringLaw& law, const RngContext& rng,
                       std::int64_t explosion_guard = kDefaultExplosionGuard);

void write_coupled_header(std::ostream& os);
void write_coupled_row(std::ostream& os, std::uint64_t replicate, int d, const CoupledRun& run);

}  // namespace sirlt
