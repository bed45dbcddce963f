#include "sirlt/sir.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace sirlt {

double kappa(std::int64_t y, std::int64_t recovered, std::int64_t village) {
    if (y < 0 || recovered < 0) throw std::invalid_argument("kappa: negative argument");
    if (village < 1) throw std::invalid_argument("kappa: N must be >= 1");
    if (y == 0 || recovered == 0) return 0.0;
    const double v = static_cast<double>(y) * static_cast<double>(recovered) / static_cast<double>(village);
    return v >= 1.0 ? 1.0 : v;
}

EpidemicState EpidemicState::initial(const LatticeField& mu, std::int64_t village, bool seed_labels) {
    if (village < 1) throw std::invalid_argument("epidemic: N must be >= 1");
    if (seed_labels && village > std::numeric_limits<std::int32_t>::max())
        throw std::invalid_argument("epidemic: N too large for label sets");
    EpidemicState s;
    s.d = mu.dim();
    s.village = village;
    s.red = mu;
    s.uses_labels = seed_labels;
    for (const auto& [key, count] : mu) {
        if (count > village) {
            const Site x = site_key::unpack(key);
            throw std::invalid_argument("epidemic: " + std::to_string(count) + " initial infected at (" +
                                        std::to_string(x[0]) + "," + std::to_string(x[1]) + "," +
                                        std::to_string(x[2]) + ") exceed village size " + std::to_string(village));
        }
        if (seed_labels) {
            auto& used = s.labels[key];
            for (std::int32_t j = 1; j <= count; ++j) used.insert(j);
        }
    }
    return s;
}

std::int64_t EpidemicState::total_recovered() const {
    std::int64_t r = 0;
    for (const auto& [key, c] : recovered) r += c;
    return r;
}

void EpidemicState::check_invariants() const {
    for (const auto& [key, y] : red) {
        if (y < 0) throw std::logic_error("epidemic: negative red count");
        if (recovered_at(key) + y > village) throw std::logic_error("epidemic: village capacity exceeded");
    }
    for (const auto& [key, r] : recovered) {
        if (r + red.at_key(key) > village) throw std::logic_error("epidemic: village capacity exceeded");
    }
    if (!uses_labels) return;
    for (const auto& [key, used] : labels) {
        if (static_cast<std::int64_t>(used.size()) != recovered_at(key) + red.at_key(key))
            throw std::logic_error("epidemic: label set size differs from R + Y");
    }
    for (const auto& [key, y] : red) {
        if (!labels.contains(key)) throw std::logic_error("epidemic: infected site without labels");
    }
}

LabelOutcome assign_labels(absl::flat_hash_set<std::int32_t>& used, std::int64_t arrivals, std::int64_t village,
                           Stream& stream) {
    LabelOutcome out;
    if (arrivals <= 0) return out;
    std::uniform_int_distribution<std::int32_t> label(1, static_cast<std::int32_t>(village));
    absl::flat_hash_set<std::int32_t> fresh;
    for (std::int64_t i = 0; i < arrivals; ++i) {
        const std::int32_t j = label(stream);
        if (used.contains(j)) {
            ++out.errant;
        } else if (!fresh.insert(j).second) {
            ++out.collisions;
        }
    }
    // The winner among same-label arrivals is irrelevant for the counts.
    for (std::int32_t j : fresh) used.insert(j);
    out.red = static_cast<std::int64_t>(fresh.size());
    return out;
}

namespace {

constexpr std::size_t kMaxMoves = 7;

template <class Fn>
void for_each_target(std::uint64_t key, int d, Fn&& fn) {
    fn(0, key);
    for (int a = 0; a < d; ++a) {
        fn(1 + 2 * a, site_key::shift(key, a, +1));
        fn(2 + 2 * a, site_key::shift(key, a, -1));
    }
}

// Red-parent arrivals per target site.
absl::flat_hash_map<std::uint64_t, std::int64_t> red_arrivals(const EpidemicState& s, const OffspringLaw& law,
                                                              const RngContext& rng, Purpose purpose) {
    absl::flat_hash_map<std::uint64_t, std::int64_t> arr;
    arr.reserve(s.red.support_size() * 3);
    std::array<std::int64_t, kMaxMoves> buf{};
    const std::span<std::int64_t> out(buf.data(), static_cast<std::size_t>(2 * s.d + 1));
    for (const auto& [key, count] : s.red) {
        law.sample(count, s.d, rng, purpose, static_cast<std::uint64_t>(s.t), key, out);
        for_each_target(key, s.d, [&](int e, std::uint64_t target) {
            const std::int64_t c = out[static_cast<std::size_t>(e)];
            if (c > 0) arr[target] += c;
        });
    }
    return arr;
}

void retire_red(EpidemicState& s) {
    for (const auto& [key, y] : s.red) s.recovered[key] += y;
}

}  // namespace

void sir_step_standard(EpidemicState& state, const OffspringLaw& law, const RngContext& rng) {
    if (!state.uses_labels) throw std::logic_error("sir_step_standard: state has no label sets");
    const auto arrivals = red_arrivals(state, law, rng, Purpose::RedArrivals);
    // Parents recover before their offspring are coloured: their labels are
    // already in the used sets.
    retire_red(state);
    std::vector<LatticeField::Entry> next;
    next.reserve(arrivals.size());
    for (const auto& [key, a] : arrivals) {
        Stream st = rng.stream(Purpose::Labels, static_cast<std::uint64_t>(state.t), key);
        const LabelOutcome o = assign_labels(state.labels[key], a, state.village, st);
        state.collisions += o.collisions;
        state.errant += o.errant;
        state.collision_score += o.collisions + std::max<std::int64_t>(o.errant - 1, 0);
        if (o.red > 0) next.emplace_back(key, o.red);
    }
    state.red = LatticeField::from_entries(state.d, std::move(next));
    ++state.t;
}

void sir_step_modified(EpidemicState& state, const OffspringLaw& law, const RngContext& rng) {
    const auto arrivals = red_arrivals(state, law, rng, Purpose::ModifiedArrivals);
    retire_red(state);
    std::vector<LatticeField::Entry> next;
    next.reserve(arrivals.size());
    for (const auto& [key, y] : arrivals) {
        const double k = kappa(y, state.recovered_at(key), state.village);
        std::int64_t red = y;
        if (k > 0.0) {
            Stream coin = rng.stream(Purpose::KappaCoin, static_cast<std::uint64_t>(state.t), key);
            if (coin.uniform() < k) {
                red -= 1;
                state.errant += 1;
            }
        }
        if (red > 0) next.emplace_back(key, red);
    }
    state.red = LatticeField::from_entries(state.d, std::move(next));
    ++state.t;
}

EpidemicState sir_run_standard(const LatticeField& mu, std::int64_t village, const OffspringLaw& law, int horizon,
                               const RngContext& rng, const EpidemicObserver& observer) {
    if (horizon < 0) throw std::invalid_argument("sir: horizon must be >= 0");
    EpidemicState s = EpidemicState::initial(mu, village, true);
    for (;;) {
        if (observer && !observer(s.t, s)) break;
        if (s.t == horizon) break;
        sir_step_standard(s, law, rng);
    }
    return s;
}

Trajectory modified_sir_run(const LatticeField& mu, std::int64_t village, const OffspringLaw& law, int horizon,
                            const RngContext& rng) {
    if (horizon < 0) throw std::invalid_argument("sir: horizon must be >= 0");
    EpidemicState s = EpidemicState::initial(mu, village, false);
    Trajectory traj;
    traj.d = mu.dim();
    traj.generations.push_back(s.red);
    while (s.t < horizon) {
        sir_step_modified(s, law, rng);
        traj.generations.push_back(s.red);
    }
    return traj;
}

double CoupledRun::scaled_collision_score() const {
    return static_cast<double>(collision_score) / std::pow(static_cast<double>(village), alpha);
}

double CoupledRun::scaled_max_discrepancy() const {
    return static_cast<double>(max_discrepancy) / std::pow(static_cast<double>(village), alpha);
}

namespace {

// Envelope classes at a site: red in both colourings, standard only,
// modified only, neither.
enum Cls { kBoth = 0, kStdOnly = 1, kModOnly = 2, kNeither = 3 };
using Classes = std::array<std::int64_t, 4>;

}  // namespace

CoupledRun coupled_run(const LatticeField& mu, std::int64_t village, double alpha, int horizon,
                       const OffspringLaw& law, const RngContext& rng, std::int64_t explosion_guard) {
    if (horizon < 0) throw std::invalid_argument("coupled_run: horizon must be >= 0");
    const int d = mu.dim();
    CoupledRun run;
    run.village = village;
    run.alpha = alpha;
    run.horizon = horizon;
    run.envelope_mass.assign(static_cast<std::size_t>(horizon) + 1, 0);
    run.standard_mass.assign(static_cast<std::size_t>(horizon) + 1, 0);
    run.modified_mass.assign(static_cast<std::size_t>(horizon) + 1, 0);

    EpidemicState std_state = EpidemicState::initial(mu, village, true);
    absl::flat_hash_map<std::uint64_t, std::int64_t> mod_recovered;
    absl::flat_hash_map<std::uint64_t, Classes> cls;
    for (const auto& [key, c] : mu) cls[key] = {c, 0, 0, 0};

    const std::array<RngContext, 4> class_rng{rng.fork(kBoth), rng.fork(kStdOnly), rng.fork(kModOnly),
                                              rng.fork(kNeither)};
    std::array<std::int64_t, kMaxMoves> buf{};
    const std::span<std::int64_t> out(buf.data(), static_cast<std::size_t>(2 * d + 1));

    for (int t = 0;; ++t) {
        std::int64_t env = 0, ys = 0, ym = 0;
        for (const auto& [key, c] : cls) {
            env += c[kBoth] + c[kStdOnly] + c[kModOnly] + c[kNeither];
            ys += c[kBoth] + c[kStdOnly];
            ym += c[kBoth] + c[kModOnly];
        }
        run.envelope_mass[static_cast<std::size_t>(t)] = env;
        run.standard_mass[static_cast<std::size_t>(t)] = ys;
        run.modified_mass[static_cast<std::size_t>(t)] = ym;
        if (env > explosion_guard) {
            throw ExplosionError("coupled_run: envelope population " + std::to_string(env) + " exceeds guard at t=" +
                                 std::to_string(t));
        }
        if (env == 0) {
            run.extinction_time = t;
            break;
        }
        if (t == horizon) break;

        // Reproduce every class independently.
        absl::flat_hash_map<std::uint64_t, Classes> arr;
        arr.reserve(cls.size() * 3);
        for (const auto& [key, c] : cls) {
            for (int k = 0; k < 4; ++k) {
                if (c[static_cast<std::size_t>(k)] == 0) continue;
                law.sample(c[static_cast<std::size_t>(k)], d, class_rng[static_cast<std::size_t>(k)],
                           Purpose::CategoryArrivals, static_cast<std::uint64_t>(t), key, out);
                for_each_target(key, d, [&](int e, std::uint64_t target) {
                    const std::int64_t n = out[static_cast<std::size_t>(e)];
                    if (n > 0) arr[target][static_cast<std::size_t>(k)] += n;
                });
            }
        }
        // Parents of both colourings recover.
        for (const auto& [key, c] : cls) {
            if (c[kBoth] + c[kStdOnly] > 0) std_state.recovered[key] += c[kBoth] + c[kStdOnly];
            if (c[kBoth] + c[kModOnly] > 0) mod_recovered[key] += c[kBoth] + c[kModOnly];
        }

        absl::flat_hash_map<std::uint64_t, Classes> next;
        next.reserve(arr.size());
        for (const auto& [key, a] : arr) {
            const std::int64_t total = a[kBoth] + a[kStdOnly] + a[kModOnly] + a[kNeither];
            // Standard colouring: labels for arrivals from standard-red parents.
            Stream st = rng.stream(Purpose::Labels, static_cast<std::uint64_t>(t), key);
            const std::int64_t as = a[kBoth] + a[kStdOnly];
            const LabelOutcome o = as > 0 ? assign_labels(std_state.labels[key], as, village, st) : LabelOutcome{};
            run.collisions += o.collisions;
            run.errant += o.errant;
            run.collision_score += o.collisions + std::max<std::int64_t>(o.errant - 1, 0);
            // Modified colouring: at most one blue among modified-red arrivals.
            const std::int64_t y = a[kBoth] + a[kModOnly];
            auto rit = mod_recovered.find(key);
            const double k = kappa(y, rit == mod_recovered.end() ? 0 : rit->second, village);
            std::int64_t rm = y;
            if (k > 0.0) {
                Stream coin = rng.stream(Purpose::KappaCoin, static_cast<std::uint64_t>(t), key);
                if (coin.uniform() < k) rm -= 1;
            }
            const std::int64_t rs = o.red;
            if (rs > total || rm > total) throw std::logic_error("coupled_run: domination violated");
            if (std_state.recovered_at(key) + rs > village) throw std::logic_error("coupled_run: capacity violated");
            run.max_discrepancy = std::max(run.max_discrepancy, rs > rm ? rs - rm : rm - rs);
            const std::int64_t both = std::min(rs, rm);
            next[key] = {both, rs - both, rm - both, total - std::max(rs, rm)};
        }
        cls = std::move(next);
        run.steps = t + 1;
    }
    for (const auto& [key, r] : std_state.recovered) run.standard_recovered += r;
    for (const auto& [key, r] : mod_recovered) run.modified_recovered += r;
    return run;
}

void write_coupled_header(std::ostream& os) {
    os << "replicate,N,alpha,d,horizon,total_gamma,total_errant,collision_score,max_discrepancy,"
          "scaled_collision_score,scaled_max_discrepancy,extinction_time,standard_recovered,modified_recovered\n";
}

void write_coupled_row(std::ostream& os, std::uint64_t replicate, int d, const CoupledRun& run) {
    os << replicate << ',' << run.village << ',' << run.alpha << ',' << d << ',' << run.horizon << ','
       << run.collisions << ',' << run.errant << ',' << run.collision_score << ',' << run.max_discrepancy << ','
       << run.scaled_collision_score() << ',' << run.scaled_max_discrepancy() << ',' << run.extinction_time << ','
       << run.standard_recovered << ',' << run.modified_recovered << '\n';
}

}  // namespace sirlt
