#include <cmath>
#include <vector>

#include "doctest.h"
#include "sirlt/brw.hpp"
#include "sirlt/families.hpp"
#include "sirlt/sir.hpp"

using namespace sirlt;

namespace {

struct Running {
    double n = 0, mean = 0, m2 = 0;
    void add(double v) {
        n += 1;
        const double d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    double var() const { return m2 / (n - 1); }
    double se() const { return std::sqrt(var() / n); }
};

}  // namespace

TEST_CASE("kappa") {
    CHECK(kappa(0, 10, 100) == 0.0);
    CHECK(kappa(5, 10, 100) == doctest::Approx(0.5));
    CHECK(kappa(2, 100, 100) == 1.0);
    CHECK(kappa(4, 50, 100) == 1.0);
    CHECK(kappa(3, 0, 100) == 0.0);
    for (int y = 0; y < 8; ++y)
        for (int r = 0; r < 30; ++r) {
            CHECK(kappa(y + 1, r, 37) >= kappa(y, r, 37));
            CHECK(kappa(y, r + 1, 37) >= kappa(y, r, 37));
            CHECK(kappa(y, r, 37) <= 1.0);
        }
    CHECK_THROWS(kappa(1, 1, 0));
}

TEST_CASE("label assignment") {
    absl::flat_hash_set<std::int32_t> used{1};
    Stream s(42);
    const LabelOutcome o = assign_labels(used, 3, 1, s);
    CHECK(o.red == 0);
    CHECK(o.errant == 3);
    CHECK(o.collisions == 0);

    // Counting identity: every arrival is red, errant or a collision loser.
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        absl::flat_hash_set<std::int32_t> u{2, 5, 7};
        Stream st(seed);
        const LabelOutcome r = assign_labels(u, 6, 10, st);
        CHECK(r.red + r.errant + r.collisions == 6);
        CHECK(static_cast<std::int64_t>(u.size()) == 3 + r.red);
    }
}

TEST_CASE("initial states") {
    const LatticeField mu = LatticeField::point(2, {0, 0, 0}, 3);
    const EpidemicState s = EpidemicState::initial(mu, 5, true);
    CHECK(s.labels.at(site_key::pack({0, 0, 0})).size() == 3);
    s.check_invariants();
    CHECK_THROWS(EpidemicState::initial(mu, 2, true));

    EpidemicState e = EpidemicState::initial(LatticeField(2), 10, true);
    sir_step_standard(e, OffspringLaw::envelope(10), RngContext(1));
    CHECK(e.red.empty());
    CHECK(e.collisions == 0);
    CHECK(e.errant == 0);
}

TEST_CASE("standard coupling invariants") {
    FamilyParams p;
    const LatticeField mu = build_family(FamilyKind::PointSpreadD2, p).generate(60);
    for (std::int64_t N : {3, 20}) {
        const auto law = OffspringLaw::envelope(N);
        for (std::uint64_t r = 0; r < 50; ++r) {
            sir_run_standard(mu, N, law, 12, RngContext(8, r), [](int, const EpidemicState& s) {
                s.check_invariants();
                return true;
            });
        }
    }
}

TEST_CASE("infection mechanics at a neighbour site") {
    // One infected at 0, N = 10: arrivals at e_1 are Binomial(10, 1/50), each
    // with a uniform label among 10 fresh ones, so the number of distinct
    // labels has mean 10 (1 - (1 - 1/500)^10).
    const int reps = 100000;
    const std::int64_t N = 10;
    const auto law = OffspringLaw::envelope(N);
    const LatticeField mu = LatticeField::point(2, {0, 0, 0});
    Running red;
    for (int r = 0; r < reps; ++r) {
        EpidemicState s = EpidemicState::initial(mu, N, true);
        sir_step_standard(s, law, RngContext(31, static_cast<std::uint64_t>(r)));
        red.add(static_cast<double>(s.red.at({1, 0, 0})));
    }
    const double want = 10.0 * (1.0 - std::pow(1.0 - 1.0 / 500.0, 10));
    CHECK(std::abs(red.mean - want) < 4 * red.se());
    CHECK(std::abs(red.mean - 0.2) < 4 * red.se());
}

TEST_CASE("modified step") {
    const auto law = OffspringLaw::envelope(50);
    FamilyParams p;
    const LatticeField mu = build_family(FamilyKind::PointSpreadD2, p).generate(30);
    for (std::uint64_t r = 0; r < 100; ++r) {
        const RngContext rng(17, r);
        // Parents recover before colouring, so only sites that held no parent
        // still have R = 0; there the step matches the envelope exactly.
        EpidemicState s = EpidemicState::initial(mu, 50, false);
        const LatticeField env = brw_step(mu, law, rng, 0, Purpose::ModifiedArrivals);
        sir_step_modified(s, law, rng);
        for (const auto& [key, c] : env) {
            if (mu.at_key(key) == 0) {
                CHECK(s.red.at_key(key) == c);
            } else {
                CHECK(s.red.at_key(key) >= c - 1);
            }
        }
        CHECK(s.red.total_mass() + s.errant == env.total_mass());

        // R = N everywhere: exactly one blue at every site with arrivals.
        EpidemicState full = EpidemicState::initial(mu, 50, false);
        for (int i = -8; i <= 8; ++i)
            for (int j = -8; j <= 8; ++j) full.recovered[site_key::pack({i, j, 0})] = 50;
        sir_step_modified(full, law, rng);
        std::int64_t blue = 0;
        for (const auto& [key, c] : env) {
            CHECK(full.red.at_key(key) == c - 1);
            ++blue;
        }
        CHECK(full.errant == blue);
    }
}

TEST_CASE("coupled run") {
    const auto law = OffspringLaw::envelope(1000);
    FamilyParams p;
    const LatticeField mu = build_family(FamilyKind::PointSpreadD2, p).generate(32);
    const CoupledRun z = coupled_run(mu, 1000, 0.5, 0, law, RngContext(4));
    CHECK(z.max_discrepancy == 0);
    CHECK(z.collisions == 0);
    CHECK(z.errant == 0);
    CHECK(z.envelope_mass[0] == 32);

    for (std::uint64_t r = 0; r < 200; ++r) {
        const CoupledRun run = coupled_run(mu, 1000, 0.5, 30, law, RngContext(4, r));
        for (std::size_t t = 0; t < run.envelope_mass.size(); ++t) {
            CHECK(run.standard_mass[t] <= run.envelope_mass[t]);
            CHECK(run.modified_mass[t] <= run.envelope_mass[t]);
        }
        CHECK(run.collision_score <= run.collisions + run.errant);
        const CoupledRun again = coupled_run(mu, 1000, 0.5, 30, law, RngContext(4, r));
        CHECK(again.standard_mass == run.standard_mass);
        CHECK(again.max_discrepancy == run.max_discrepancy);
    }
}

TEST_CASE("large villages approach the envelope") {
    // Total infected at t = 3: SIR with N = 1e5 against the Poisson envelope.
    const int reps = 10000;
    const LatticeField mu = LatticeField::point(2, {0, 0, 0}, 5);
    Running sir, brw;
    for (int r = 0; r < reps; ++r) {
        const EpidemicState s =
            sir_run_standard(mu, 100000, OffspringLaw::envelope(100000), 3, RngContext(61, static_cast<std::uint64_t>(r)));
        sir.add(static_cast<double>(s.red.total_mass()));
        const Trajectory t = brw_run(mu, OffspringLaw::poisson_unit(), 3, RngContext(62, static_cast<std::uint64_t>(r)));
        brw.add(static_cast<double>(t.at(3).total_mass()));
    }
    const double z = (sir.mean - brw.mean) / std::sqrt(sir.var() / sir.n + brw.var() / brw.n);
    CHECK(std::abs(z) < 2.576);
}
