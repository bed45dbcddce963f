#include "sirlt/brw.hpp"

#include <array>
#include <ostream>
#include <string>

namespace sirlt {

LatticeField brw_step(const LatticeField& x, const OffspringLaw& law, const RngContext& rng, std::uint64_t step,
                      Purpose purpose) {
    const int d = x.dim();
    FieldBuilder next(d);
    next.reserve(x.support_size() * 3);
    std::array<std::int64_t, 7> arrivals{};
    const std::span<std::int64_t> out(arrivals.data(), static_cast<std::size_t>(2 * d + 1));
    for (const auto& [key, count] : x) {
        law.sample(count, d, rng, purpose, step, key, out);
        next.add(key, out[0]);
        for (int a = 0; a < d; ++a) {
            next.add(site_key::shift(key, a, +1), out[static_cast<std::size_t>(1 + 2 * a)]);
            next.add(site_key::shift(key, a, -1), out[static_cast<std::size_t>(2 + 2 * a)]);
        }
    }
    return next.build();
}

LatticeField neighbour_sum(const LatticeField& x) {
    const int d = x.dim();
    FieldBuilder s(d);
    s.reserve(x.support_size() * (2 * d + 1));
    for (const auto& [key, count] : x) {
        s.add(key, count);
        for (int a = 0; a < d; ++a) {
            s.add(site_key::shift(key, a, +1), count);
            s.add(site_key::shift(key, a, -1), count);
        }
    }
    return s.build();
}

LatticeField Trajectory::occupation(int n) const {
    if (n < 0 || n > horizon() + 1) throw std::out_of_range("Trajectory::occupation: n outside 0..T+1");
    FieldBuilder r(d);
    for (int i = 0; i < n; ++i)
        for (const auto& [key, count] : at(i)) r.add(key, count);
    return r.build();
}

int Trajectory::extinction_time() const {
    for (std::size_t t = 0; t < generations.size(); ++t)
        if (generations[t].empty()) return static_cast<int>(t);
    return -1;
}

LatticeField brw_evolve(const LatticeField& mu, const OffspringLaw& law, int horizon, const RngContext& rng,
                        const GenerationObserver& observer, std::int64_t explosion_guard) {
    if (horizon < 0) throw std::invalid_argument("brw: horizon must be >= 0");
    LatticeField cur = mu;
    for (int t = 0;; ++t) {
        if (cur.total_mass() > explosion_guard) {
            throw ExplosionError("brw: population " + std::to_string(cur.total_mass()) + " exceeds guard " +
                                 std::to_string(explosion_guard) + " at generation " + std::to_string(t));
        }
        if (observer && !observer(t, cur)) return cur;
        if (t == horizon) return cur;
        cur = brw_step(cur, law, rng, static_cast<std::uint64_t>(t));
    }
}

Trajectory brw_run(const LatticeField& mu, const OffspringLaw& law, int horizon, const RngContext& rng,
                   std::int64_t explosion_guard) {
    Trajectory traj;
    traj.d = mu.dim();
    traj.generations.reserve(static_cast<std::size_t>(horizon) + 1);
    brw_evolve(mu, law, horizon, rng,
               [&](int, const LatticeField& x) {
                   traj.generations.push_back(x);
                   return true;
               },
               explosion_guard);
    return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << (traj.d == 2 ? "t,x,y,count\n" : "t,x,y,z,count\n");
    for (int t = 0; t <= traj.horizon(); ++t) {
        for (const auto& [key, count] : traj.at(t)) {
            const Site s = site_key::unpack(key);
            os << t << ',' << s[0] << ',' << s[1];
            if (traj.d == 3) os << ',' << s[2];
            os << ',' << count << '\n';
        }
    }
}

BrwSummary summarize(const Trajectory& traj, std::uint64_t replicate) {
    BrwSummary s;
    s.replicate = replicate;
    s.horizon = traj.horizon();
    s.initial_mass = traj.at(0).total_mass();
    s.final_mass = traj.at(traj.horizon()).total_mass();
    for (int t = 0; t <= traj.horizon(); ++t) {
        const std::int64_t m = traj.at(t).total_mass();
        s.max_mass = std::max(s.max_mass, m);
        if (t < traj.horizon()) s.total_occupation += m;
    }
    s.extinction_time = traj.extinction_time();
    return s;
}

void write_brw_summary_header(std::ostream& os) {
    os << "replicate,horizon,initial_mass,final_mass,max_mass,total_occupation,extinction_time\n";
}

void write_brw_summary_row(std::ostream& os, const BrwSummary& s) {
    os << s.replicate << ',' << s.horizon << ',' << s.initial_mass << ',' << s.final_mass << ',' << s.max_mass << ','
       << s.total_occupation << ',' << s.extinction_time << '\n';
}

}  // namespace sirlt
