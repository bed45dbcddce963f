// Acceptance suite: one PASS/FAIL line per criterion. Usage:
//   acceptance [--only 1,5,9] [--out DIR] [--data DIR] [--workers N]
// DIR defaults: out = ./acceptance_out, data = directory holding the bounds
// baselines (written on the first run, compared on later ones).

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "sirlt/brw.hpp"
#include "sirlt/experiments.hpp"
#include "sirlt/kernel.hpp"
#include "sirlt/likelihood.hpp"
#include "sirlt/moments.hpp"
#include "sirlt/parallel.hpp"
#include "sirlt/stats.hpp"

using namespace sirlt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Env {
    fs::path out;
    fs::path data;
    unsigned workers = 1;
};

std::string g(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

std::vector<Site> l1_ball(int d, int r) {
    std::vector<Site> out;
    const int r2 = d == 3 ? r : 0;
    for (int x = -r; x <= r; ++x)
        for (int y = -r; y <= r; ++y)
            for (int z = -r2; z <= r2; ++z)
                if (std::abs(x) + std::abs(y) + std::abs(z) <= r) out.push_back({x, y, z});
    return out;
}

// Tracks the worst standardized deviation |est - exact| / se over many
// comparisons.
struct ZTracker {
    double worst = 0.0;
    std::string where;
    std::size_t count = 0;
    bool degenerate_mismatch = false;

    void add(double est, double se, double exact, const std::string& label) {
        ++count;
        const double diff = std::abs(est - exact);
        double z;
        if (se > 0.0) z = diff / se;
        else {
            z = diff <= 1e-12 ? 0.0 : INFINITY;
            if (z > 0) degenerate_mismatch = true;
        }
        if (z > worst) {
            worst = z;
            where = label;
        }
    }
    std::string report() const { return std::to_string(count) + " comparisons, worst |z| = " + g(worst) + " at " + where; }
};

// Replicates split into fixed chunks; partial RunningStats merged in chunk
// order so the result does not depend on the worker count.
template <class Body>
std::vector<RunningStats> chunked_stats(std::size_t reps, std::size_t width, unsigned workers, Body&& body) {
    const std::size_t chunk = 1000;
    const std::size_t chunks = (reps + chunk - 1) / chunk;
    auto parts = parallel_map(chunks, workers, [&](std::size_t c) {
        std::vector<RunningStats> st(width);
        std::vector<double> row(width);
        for (std::size_t r = c * chunk; r < std::min(reps, (c + 1) * chunk); ++r) {
            std::fill(row.begin(), row.end(), 0.0);
            body(r, row);
            for (std::size_t i = 0; i < width; ++i) st[i].add(row[i]);
        }
        return st;
    });
    std::vector<RunningStats> out(width);
    for (const auto& p : parts)
        for (std::size_t i = 0; i < width; ++i) out[i].merge(p[i]);
    return out;
}

ExperimentConfig config(const std::string& text) { return build_config(parse_config_text(text, "<acceptance>")); }

// ---------------------------------------------------------------- 1
Outcome c1_kernel(const Env&) {
    std::string detail;
    bool ok = true;
    for (auto [d, n] : {std::pair{2, 2000}, std::pair{3, 200}}) {
        const auto r = check_kernel_exactness(WalkSpec(d), n);
        ok = ok && r.n_max == n && r.pass(1e-12, 1e-10);
        detail += "d=" + std::to_string(d) + " n=" + std::to_string(n) + ": mass err " + g(r.max_mass_error) +
                  ", symmetric " + (r.symmetric ? "yes" : "no (" + r.symmetry_witness + ")") + " on " +
                  std::to_string(r.symmetry_rows) + " rows, CK err " + g(r.max_ck_error) + " over " +
                  std::to_string(r.ck_checks) + " checks; ";
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 2
// P_n by enumerating all (2d+1)^n lazy paths.
std::map<Site, double> enumerate_paths(int d, int n) {
    const auto mv = moves(d);
    std::map<Site, double> out;
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= mv.size();
    for (std::size_t code = 0; code < total; ++code) {
        Site s{0, 0, 0};
        std::size_t c = code;
        for (int i = 0; i < n; ++i) {
            s = add(s, mv[c % mv.size()]);
            c /= mv.size();
        }
        out[s] += 1.0;
    }
    for (auto& [s, v] : out) v /= static_cast<double>(total);
    return out;
}

Outcome c2_anchors(const Env&) {
    double worst = 0.0;
    std::string detail;
    auto near = [&](double a, double b) {
        worst = std::max(worst, std::abs(a - b));
        return std::abs(a - b) <= 1e-12;
    };
    bool ok = true;
    for (int d : {2, 3}) {
        const KernelTable t(WalkSpec(d), 4);
        ok &= near(t.p(1, {0, 0, 0}), 1.0 / (2 * d + 1));
        for (int n = 1; n <= 3; ++n) {
            const auto paths = enumerate_paths(d, n);
            double mass = 0.0;
            for (const auto& [s, v] : paths) {
                ok &= near(t.p(n, s), v);
                mass += t.p(n, s);
            }
            ok &= near(mass, 1.0);
        }
        if (d == 2) {
            const auto p2 = enumerate_paths(2, 2);
            double g3 = 1.0 + enumerate_paths(2, 1).at({0, 0, 0}) + p2.at({0, 0, 0});
            ok &= near(t.p(2, {0, 0, 0}), 0.2) && near(p2.at({0, 0, 0}), 0.2);
            ok &= near(t.green_at(3, {0, 0, 0}), 7.0 / 5.0) && near(g3, 7.0 / 5.0);
            const auto law = OffspringLaw::poisson_unit();
            const double m1 = second_moment({0, 0, 0}, 1, law, t), m2 = second_moment({0, 0, 0}, 2, law, t);
            ok &= near(m1, 6.0 / 25.0) && near(m2, 7.0 / 25.0);
            // Convolution oracle for n = 2: P_2 + sigma^2 sum_i sum_z P_i(z) P_{2-i}(-z)^2, sigma^2 = 1.
            double conv = t.p(2, {0, 0, 0});
            for (int i = 0; i < 2; ++i)
                for (const auto& [z, pz] : enumerate_paths(2, i)) {
                    const auto q = enumerate_paths(2, 2 - i);
                    const auto it = q.find(negate(z));
                    if (it != q.end()) conv += pz * it->second * it->second;
                }
            ok &= near(m2, conv);
            detail = "P_2(0)=" + g(t.p(2, {0, 0, 0})) + " G_3(0)=" + g(t.green_at(3, {0, 0, 0})) +
                     " E U_1(0)^2=" + g(m1) + " E U_2(0)^2=" + g(m2) + "; ";
        }
    }
    return {ok, detail + "P_n = path enumeration for n <= 3, d = 2, 3; max deviation " + g(worst)};
}

// ---------------------------------------------------------------- 3
Outcome c3_means(const Env& env) {
    const std::vector<int> ns{1, 2, 5, 10, 20};
    const std::size_t reps = 100000;
    bool ok = true;
    std::string detail;
    for (int d : {2, 3}) {
        FieldBuilder fb(d);
        fb.add({0, 0, 0}, 2);
        fb.add({1, 0, 0}, 1);
        const LatticeField mu = fb.build();
        const auto sites = l1_ball(d, 3);
        const KernelTable table(WalkSpec(d), 21);
        const auto law = OffspringLaw::poisson_unit();
        const std::size_t S = sites.size(), W = 2 * ns.size() * S;
        // Layout: [n index][site] for X then for R.
        const auto st = chunked_stats(reps, W, env.workers, [&](std::size_t r, std::vector<double>& row) {
            std::vector<double> racc(S, 0.0);
            brw_evolve(mu, law, ns.back(), RngContext(31 + d, r), [&](int t, const LatticeField& x) {
                for (std::size_t ni = 0; ni < ns.size(); ++ni) {
                    if (t == ns[ni])
                        for (std::size_t s = 0; s < S; ++s) {
                            row[ni * S + s] = static_cast<double>(x.at(sites[s]));
                            row[(ns.size() + ni) * S + s] = racc[s];
                        }
                }
                for (std::size_t s = 0; s < S; ++s) racc[s] += static_cast<double>(x.at(sites[s]));
                if (x.empty()) {
                    // R stays frozen after extinction.
                    for (std::size_t ni = 0; ni < ns.size(); ++ni)
                        if (ns[ni] > t)
                            for (std::size_t s = 0; s < S; ++s) row[(ns.size() + ni) * S + s] = racc[s];
                    return false;
                }
                return true;
            });
        });
        ZTracker zt;
        for (std::size_t ni = 0; ni < ns.size(); ++ni) {
            const auto [ex, er] = mean_fields(mu, table, ns[ni]);
            for (std::size_t s = 0; s < S; ++s) {
                const std::string at = " n=" + std::to_string(ns[ni]) + " x=(" + std::to_string(sites[s][0]) + "," +
                                       std::to_string(sites[s][1]) + "," + std::to_string(sites[s][2]) + ")";
                const auto& a = st[ni * S + s];
                const auto& b = st[(ns.size() + ni) * S + s];
                zt.add(a.mean(), a.se(), ex.value(sites[s]), "EX" + at);
                zt.add(b.mean(), b.se(), er.value(sites[s]), "ER" + at);
            }
        }
        ok = ok && zt.worst <= 4.0;
        detail += "d=" + std::to_string(d) + ": " + zt.report() + "; ";
    }
    return {ok, detail + std::to_string(reps) + " reps"};
}

// ---------------------------------------------------------------- 4
Outcome c4_second_moment(const Env& env) {
    const std::size_t reps = 1000000;
    const int nmax = 5;
    const auto sites = l1_ball(2, 2);
    const KernelTable table(WalkSpec(2), nmax + 1);
    const LatticeField mu = LatticeField::point(2, {0, 0, 0});
    bool ok = true;
    std::string detail;
    int tag = 0;
    for (const auto& law : {OffspringLaw::poisson_unit(), OffspringLaw::envelope(10)}) {
        const std::size_t S = sites.size();
        const auto st = chunked_stats(reps, nmax * S, env.workers, [&](std::size_t r, std::vector<double>& row) {
            brw_evolve(mu, law, nmax, RngContext(41 + tag, r), [&](int t, const LatticeField& x) {
                if (t >= 1)
                    for (std::size_t s = 0; s < S; ++s) {
                        const double v = static_cast<double>(x.at(sites[s]));
                        row[static_cast<std::size_t>(t - 1) * S + s] = v * v;
                    }
                return !x.empty();
            });
        });
        ZTracker zt;
        for (int n = 1; n <= nmax; ++n)
            for (std::size_t s = 0; s < S; ++s) {
                const auto& a = st[static_cast<std::size_t>(n - 1) * S + s];
                zt.add(a.mean(), a.se(), second_moment(sites[s], n, law, table),
                       "n=" + std::to_string(n) + " x=(" + std::to_string(sites[s][0]) + "," + std::to_string(sites[s][1]) + ")");
            }
        ok = ok && zt.worst <= 4.0;
        detail += law.describe() + ": " + zt.report() + "; ";
        ++tag;
    }
    return {ok, detail + std::to_string(reps) + " reps, d=2"};
}

// ---------------------------------------------------------------- 5
BoxGrid bump_psi(int d, double scale) {
    BoxGrid g = BoxGrid::centered(d, 1);
    int i = 0;
    for (double& v : g.values()) v = scale * (0.3 * std::sin(1.7 * ++i) - 0.05);
    return g;
}

// Nonpositive test function for the Monte Carlo leg.
BoxGrid negative_psi(int d) {
    BoxGrid g = BoxGrid::centered(d, 1);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Site s = g.site_at(i);
        g.values()[i] = -0.1 * (1.0 + (s[0] == 0 && s[1] == 0 && s[2] == 0)) - 0.02 * std::abs(s[0] + 2 * s[1]);
    }
    return g;
}

double max_diff(const BoxGrid& a, const BoxGrid& b) {
    if (a.empty() && b.empty()) return 0.0;
    const BoxGrid h = BoxGrid::hull(a.empty() ? b : a, b.empty() ? a : b);
    double m = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) m = std::max(m, std::abs(a.value(h.site_at(i)) - b.value(h.site_at(i))));
    return m;
}

double pair_field(const LatticeField& x, const BoxGrid& psi) {
    double s = 0.0;
    for (const auto& [key, c] : x) s += static_cast<double>(c) * psi.value(site_key::unpack(key));
    return s;
}

using Dist = std::map<std::vector<LatticeField::Entry>, double>;

// Exact law of X_m from mu for a finite-support custom law (independent
// particles, uniform placement on the 2d+1 targets).
Dist enumerate_generation(const LatticeField& mu, const OffspringLaw& law, int m) {
    const int d = mu.dim();
    const auto mv = moves(d);
    const auto& q = law.pmf();
    Dist cur{{mu.entries(), 1.0}};
    for (int step = 0; step < m; ++step) {
        Dist next;
        for (const auto& [state, p] : cur) {
            // Fold particles one at a time into a distribution of child multisets.
            std::map<std::vector<std::uint64_t>, double> part{{{}, p}};
            for (const auto& [key, count] : state)
                for (std::int64_t c = 0; c < count; ++c) {
                    std::map<std::vector<std::uint64_t>, double> np;
                    for (const auto& [kids, pk] : part)
                        for (std::size_t K = 0; K < q.size(); ++K) {
                            if (q[K] == 0.0) continue;
                            std::size_t combos = 1;
                            for (std::size_t j = 0; j < K; ++j) combos *= mv.size();
                            const double each = pk * q[K] / static_cast<double>(combos);
                            for (std::size_t code = 0; code < combos; ++code) {
                                auto nk = kids;
                                std::size_t cc = code;
                                for (std::size_t j = 0; j < K; ++j) {
                                    nk.push_back(site_key::pack(add(site_key::unpack(key), mv[cc % mv.size()])));
                                    cc /= mv.size();
                                }
                                std::sort(nk.begin(), nk.end());
                                np[nk] += each;
                            }
                        }
                    part = std::move(np);
                }
            for (const auto& [kids, pk] : part) {
                std::vector<LatticeField::Entry> e;
                for (auto k : kids) e.emplace_back(k, 1);
                next[LatticeField::from_entries(d, e).entries()] += pk;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

Outcome c5_cumulants(const Env& env) {
    bool ok = true;
    std::string detail;

    // (a) direct recursion vs Xi convolution form, plain and time-increment.
    double worst_a = 0.0;
    for (int d : {2, 3}) {
        const int n = d == 2 ? 8 : 5;
        const KernelTable tb(WalkSpec(d), n + 4);
        const auto psi = bump_psi(d, 1.0);
        const auto law = OffspringLaw::poisson_unit();
        for (auto conv : {Convention::Gen1ToN, Convention::Gen0ToNMinus1}) {
            const auto a = cumulant_recursion(psi, 4, n, law, conv, CumulantEngine::Direct);
            const auto b = cumulant_recursion(psi, 4, n, law, conv, CumulantEngine::Xi, &tb);
            for (int h = 1; h <= 4; ++h)
                for (int i = 0; i <= n; ++i)
                    worst_a = std::max(worst_a, max_diff(a.kappa[h][i], b.kappa[h][i]));
        }
        const auto a = cumulant_time_increment(psi, 4, 3, 4, law, CumulantEngine::Direct);
        const auto b = cumulant_time_increment(psi, 4, 3, 4, law, CumulantEngine::Xi, &tb);
        for (int h = 1; h <= 4; ++h)
            for (int m = 0; m <= 3; ++m) worst_a = std::max(worst_a, max_diff(a.kappa[h][m], b.kappa[h][m]));
    }
    ok &= worst_a <= 1e-10;
    detail += "(a) direct vs Xi max diff " + g(worst_a) + "; ";

    // (b) exhaustive enumeration vs nu, plain (n <= 3) and increments (m <= 3).
    double worst_b = 0.0;
    std::size_t nb = 0;
    {
        const std::vector<std::vector<double>> pmfs{{0.5, 0.5}, {0.25, 0.5, 0.25}, {0.6, 0.2, 0.2}};
        for (int d : {2, 3})
            for (const auto& pmf : pmfs) {
                const auto law = OffspringLaw::custom(pmf);
                const LatticeField mu = LatticeField::point(d, {0, 0, 0}, 1);
                for (const auto& psi : {negative_psi(d), bump_psi(d, 1.0)})
                    for (int n = 1; n <= 3; ++n) {
                        const double brute = brute_force_mgf(psi, n, law, mu);
                        const auto nu = nu_recursion(psi, n, law, Convention::Gen1ToN);
                        worst_b = std::max(worst_b, std::abs(brute - std::exp(nu.pair_nu(mu, n))));
                        ++nb;
                    }
            }
        // E exp <R_{m+n} - R_m, psi> = sum over X_m of P(X_m) e^{<X_m, psi>} E^{X_m} exp sum_{i=1}^{n-1} <X_i, psi>.
        for (const auto& [pmf, mmax, nmax] : {std::tuple{std::vector<double>{0.5, 0.5}, 3, 3},
                                              std::tuple{std::vector<double>{0.25, 0.5, 0.25}, 2, 2}}) {
            const auto law = OffspringLaw::custom(pmf);
            const LatticeField mu = LatticeField::point(2, {0, 0, 0}, 1);
            const auto psi = bump_psi(2, 1.0);
            for (int n = 1; n <= nmax; ++n) {
                const auto inc = cumulant_time_increment(psi, n, mmax, 1, law, CumulantEngine::Direct);
                for (int m = 0; m <= mmax; ++m) {
                    double e = 0.0;
                    for (const auto& [state, p] : enumerate_generation(mu, law, m)) {
                        const LatticeField xm = LatticeField::from_entries(2, state);
                        e += p * std::exp(pair_field(xm, psi)) * brute_force_mgf(psi, n - 1, law, xm);
                    }
                    worst_b = std::max(worst_b, std::abs(e - std::exp(inc.pair_nu(mu, m))));
                    ++nb;
                }
            }
        }
    }
    ok &= worst_b <= 1e-10;
    detail += "(b) enumeration vs nu: " + std::to_string(nb) + " cases, max diff " + g(worst_b) + "; ";

    // (c) exp <mu, nu_n> vs Monte Carlo with psi <= 0.
    {
        const std::size_t reps = 100000;
        const std::vector<int> ns{1, 2, 5, 10};
        const std::vector<int> ms{1, 2, 3};
        const int win = 5;
        ZTracker zt;
        for (int d : {2, 3}) {
            const auto law = OffspringLaw::poisson_unit();
            const auto psi = negative_psi(d);
            const LatticeField mu = LatticeField::point(d, {0, 0, 0}, 2);
            const int H = std::max(ns.back(), ms.back() + win);
            // Columns: Gen1ToN per n, Gen0ToNMinus1 per n, increments per m.
            const std::size_t W = 2 * ns.size() + ms.size();
            const auto st = chunked_stats(reps, W, env.workers, [&](std::size_t r, std::vector<double>& row) {
                std::vector<double> pairing(static_cast<std::size_t>(H) + 1, 0.0);
                brw_evolve(mu, law, H, RngContext(51 + d, r), [&](int t, const LatticeField& x) {
                    pairing[static_cast<std::size_t>(t)] = pair_field(x, psi);
                    return !x.empty();
                });
                for (std::size_t i = 0; i < ns.size(); ++i) {
                    double a = 0.0, b = 0.0;
                    for (int l = 1; l <= ns[i]; ++l) a += pairing[l];
                    for (int l = 0; l < ns[i]; ++l) b += pairing[l];
                    row[i] = std::exp(a);
                    row[ns.size() + i] = std::exp(b);
                }
                for (std::size_t j = 0; j < ms.size(); ++j) {
                    double a = 0.0;
                    for (int l = ms[j]; l < ms[j] + win; ++l) a += pairing[l];
                    row[2 * ns.size() + j] = std::exp(a);
                }
            });
            const std::string dd = "d=" + std::to_string(d);
            for (std::size_t i = 0; i < ns.size(); ++i) {
                const auto g1 = nu_recursion(psi, ns[i], law, Convention::Gen1ToN);
                const auto g0 = nu_recursion(psi, ns[i], law, Convention::Gen0ToNMinus1);
                zt.add(st[i].mean(), st[i].se(), std::exp(g1.pair_nu(mu, ns[i])), dd + " gen1 n=" + std::to_string(ns[i]));
                zt.add(st[ns.size() + i].mean(), st[ns.size() + i].se(), std::exp(g0.pair_nu(mu, ns[i])),
                       dd + " gen0 n=" + std::to_string(ns[i]));
            }
            const auto inc = cumulant_time_increment(psi, win, ms.back(), 1, law, CumulantEngine::Direct);
            for (std::size_t j = 0; j < ms.size(); ++j)
                zt.add(st[2 * ns.size() + j].mean(), st[2 * ns.size() + j].se(), std::exp(inc.pair_nu(mu, ms[j])),
                       dd + " increment m=" + std::to_string(ms[j]));
        }
        ok &= zt.worst <= 4.0;
        detail += "(c) Monte Carlo: " + zt.report() + " (" + std::to_string(reps) + " reps)";
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 6
Outcome c6_importance(const Env& env) {
    const auto cfg = config("mode = importance_battery\nd = 2\nvillage_ladder = 5, 10, 50\nhorizon = 4\nreplicates = 100000\n"
                            "mu_mass = 3\nseed = 61\nout_dir = " + (env.out / "c6").string() + "\n");
    RunOptions opt;
    opt.workers = env.workers;
    const auto rep = importance_battery(cfg, opt);
    write_report(rep, cfg.out_dir);
    double worst = 0.0, worst_norm = 0.0;
    bool norm_ok = true;
    for (const auto& r : rep.importance) {
        worst = std::max(worst, std::abs(r.z));
        if (r.id == "one") {
            const double z = std::abs(r.rhs - 1.0) / r.rhs_se;
            worst_norm = std::max(worst_norm, z);
            norm_ok = norm_ok && z <= 4.0;
        }
    }
    const bool ok = rep.verdict == Verdict::Pass && norm_ok && rep.importance.size() == 15;
    return {ok, std::to_string(rep.importance.size()) + " functional x N comparisons, max |z| = " + g(worst) +
                    "; E_P[LR] = 1 worst |z| = " + g(worst_norm)};
}

// ---------------------------------------------------------------- 7
Outcome c7_martingale(const Env& env) {
    bool exact = true;
    double worst = 0.0;
    for (int d : {2, 3}) {
        const TestFunction sq = [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return s;
        };
        for (double k : {1.0, 4.0, 64.0, 1000.0})
            for (double x0 : {0.0, 0.3, -1.7}) {
                std::vector<double> x(static_cast<std::size_t>(d), x0);
                x[0] = 0.5 * x0 + 0.1;
                const double a = difference_operator(sq, d, k, x);
                const double want = 2.0 * d / (2.0 * d + 1.0);
                worst = std::max(worst, std::abs(a - want));
                exact = exact && std::abs(a - want) <= 1e-12;
            }
    }
    const TestFunction psi = [](std::span<const double> x) { return std::exp(-(x[0] * x[0] + 2.0 * x[1] * x[1])); };
    FieldBuilder fb(2);
    fb.add({0, 0, 0}, 4);
    fb.add({1, 0, 0}, 2);
    fb.add({0, -2, 0}, 2);
    const auto fit = martingale_regression(fb.build(), psi, 4, 8, 100000, 71, env.workers);
    std::string coefs;
    for (std::size_t i = 0; i < fit.coef.size(); ++i)
        coefs += fit.regressors[i] + "=" + g(fit.coef[i]) + "(se " + g(fit.se[i]) + ") ";
    const bool ok = exact && fit.max_abs_t() <= 4.0;
    return {ok, "A_k|x|^2 - 2d/(2d+1) max " + g(worst) + "; increment regression over " +
                    std::to_string(fit.observations) + " obs: " + coefs + "max |t| = " + g(fit.max_abs_t())};
}

// ---------------------------------------------------------------- 8
Outcome c8_coupling(const Env& env) {
    const auto cfg = config("mode = coupling\nd = 2\nvillage_ladder = 1000, 10000, 100000\nhorizon_t = 8\n"
                            "replicates = 1000\nseed = 81\nout_dir = " + (env.out / "c8").string() + "\n");
    RunOptions opt;
    opt.workers = env.workers;
    const auto rep = coupling_diagnostic(cfg, opt);
    write_report(rep, cfg.out_dir);
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (double x : v) s += (s.empty() ? "" : " > ") + g(x);
        return s;
    };
    return {rep.verdict == Verdict::Pass,
            "alpha = 1/2, N = 1e3, 1e4, 1e5, 1000 reps, lifetime capped at 8 N^alpha; median score/N^a: " +
                list(rep.series("median_scaled_collision_score")) +
                "; median max D/N^a: " + list(rep.series("median_scaled_max_discrepancy")) + "; P(score = 0): " +
                list(rep.series("fraction_zero_score"))};
}

// ---------------------------------------------------------------- 9
Outcome c9_local_time(const Env& env) {
    bool ok = true;
    std::string detail;
    for (int d : {2, 3}) {
        const auto cfg = config("mode = local_time\nd = " + std::to_string(d) +
                                "\nk_ladder = 16, 64, 256\nprobe_t = 0.5\nreplicates = 10000\nvariance_k = 64\nseed = 91\n"
                                "out_dir = " + (env.out / ("c9_d" + std::to_string(d))).string() + "\n");
        RunOptions opt;
        opt.workers = env.workers;
        const auto rep = converge_diagnostic(cfg, opt);
        write_report(rep, cfg.out_dir);
        std::size_t passed = 0;
        std::string var;
        for (const auto& c : rep.checks) {
            passed += c.pass;
            if (c.name.rfind("variance", 0) == 0) var = g(c.value) + " vs bound " + g(c.bound);
        }
        std::string ks;
        for (const auto& dd : rep.distances) ks += (ks.empty() ? "" : ", ") + g(dd.ks);
        ok = ok && rep.verdict == Verdict::Pass && !var.empty();
        detail += "d=" + std::to_string(d) + " (" + cfg.family + "): " + verdict_name(rep.verdict) + ", KS " + ks + ", checks " +
                  std::to_string(passed) + "/" + std::to_string(rep.checks.size()) + ", |s^2 - Var| " + var + "; ";
    }
    return {ok, detail + "probe (1/2, 0), 10^4 reps"};
}

// ---------------------------------------------------------------- 10
Outcome c10_threshold(const Env& env) {
    bool ok = true;
    std::string detail;
    for (const char* alpha : {"0.5", "0.25"}) {
        const auto cfg = config(std::string("mode = threshold_sweep\nd = 2\nalpha = ") + alpha +
                                "\nvillage_ladder = 1000, 10000, 100000\nprobe_t = 0.5, 1, 1.5, 2\nhorizon_t = 2\n"
                                "replicates = 1000\nseed = 101\nout_dir = " +
                                (env.out / (std::string("c10_alpha") + alpha)).string() + "\n");
        RunOptions opt;
        opt.workers = env.workers;
        const auto rep = threshold_sweep(cfg, opt);
        write_report(rep, cfg.out_dir);
        std::string s;
        for (double v : rep.series("max_suppression")) s += (s.empty() ? "" : ", ") + g(v);
        ok = ok && rep.verdict == Verdict::Pass;
        detail += std::string("alpha = ") + alpha + ": max suppression " + s + " -> " + verdict_name(rep.verdict) + "; ";
    }
    return {ok, detail + "N = 1e3, 1e4, 1e5, 1000 reps"};
}

// ---------------------------------------------------------------- 11
Outcome c11_occupation(const Env& env) {
    const auto cfg = config("mode = occupation_time\nd = 2\nk_ladder = 64, 256, 1024\nhorizon_t = 1\nreplicates = 2000\n"
                            "seed = 111\nout_dir = " + (env.out / "c11").string() + "\n");
    RunOptions opt;
    opt.workers = env.workers;
    const auto rep = occupation_time_stat(cfg, opt);
    write_report(rep, cfg.out_dir);
    std::string s;
    for (const auto& l : rep.levels)
        if (l.stat == "r") s += (s.empty() ? "" : ", ") + g(l.value) + " (se " + g(l.se) + ")";
    return {rep.verdict == Verdict::Pass, "r(k) for k = 64, 256, 1024: " + s + ", 2000 reps per level"};
}

// ---------------------------------------------------------------- 12
Outcome c12_bounds(const Env& env) {
    bool ok = true;
    std::string detail;
    for (int d : {2, 3}) {
        const auto base = env.data / ("bounds_baseline_d" + std::to_string(d) + ".json");
        const bool first = !fs::exists(base);
        const auto cfg = config("mode = bounds_suite\nd = " + std::to_string(d) + "\nbeta = 0.4\ngamma = 0.25\n"
                                "bounds_baseline = " + base.string() + "\nbaseline_tolerance = 1.01\nout_dir = " +
                                (env.out / ("c12_d" + std::to_string(d))).string() + "\n");
        RunOptions opt;
        opt.workers = env.workers;
        const auto rep = bounds_suite(cfg, opt);
        write_report(rep, cfg.out_dir);
        std::size_t passed = 0;
        for (const auto& c : rep.checks) passed += c.pass;
        ok = ok && rep.verdict == Verdict::Pass;
        detail += "d=" + std::to_string(d) + ": " + std::to_string(passed) + "/" + std::to_string(rep.checks.size()) +
                  " checks" + (first ? " (baseline recorded by this run)" : " against the recorded baseline x1.01") + "; ";
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 13
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome c13_determinism(const Env& env) {
    const std::vector<std::string> cfgs{
        "mode = local_time\nk_ladder = 16, 64\nreplicates = 500\nprobe_t = 0.5, 1\n",
        "mode = local_time\nd = 3\nk_ladder = 16, 36\nreplicates = 300\n",
        "mode = threshold_sweep\nvillage_ladder = 100, 1000\nreplicates = 100\n",
        "mode = occupation_time\nk_ladder = 16, 64\nreplicates = 300\n",
        "mode = coupling\nvillage_ladder = 100, 1000\nreplicates = 100\nhorizon_t = 2\n",
        "mode = importance_battery\nvillage_ladder = 5, 10\nreplicates = 2000\n",
        "mode = bounds_suite\ninequalities = lclt_bd, green_indc, fg_central\n",
    };
    std::size_t files = 0;
    std::string bad;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        const auto dir = env.out / ("c13_" + std::to_string(i));
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "exp.cfg") << cfgs[i] << "seed = 131\n";
        std::ostringstream out, err;
        std::vector<std::string> runs{"a", "b", "c"};
        for (std::size_t j = 0; j < runs.size(); ++j) {
            RunOptions opt;
            opt.workers = j == 2 ? 3u : 1u;
            run((dir / "exp.cfg").string(), opt, out, err, {{"out_dir", (dir / runs[j]).string()}});
        }
        for (const auto& e : fs::directory_iterator(dir / "a")) {
            const auto name = e.path().filename();
            const auto a = slurp(e.path());
            ++files;
            for (const char* other : {"b", "c"})
                if (!fs::exists(dir / other / name) || slurp(dir / other / name) != a)
                    bad += (dir / other / name).string() + " ";
        }
    }
    const bool ok = bad.empty() && files >= 7 * 2;
    return {ok, std::to_string(files) + " output files over 7 modes, re-run and 3 workers vs 1" +
                    (bad.empty() ? ": byte-identical" : ": differ: " + bad)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance suite"};
    std::vector<int> only;
    std::string out = "acceptance_out", data = "acceptance_data";
    unsigned workers = 1;
    app.add_option("--only", only, "Criteria to run")->delimiter(',');
    app.add_option("--out", out, "Artifact directory");
    app.add_option("--data", data, "Directory of recorded baselines");
    app.add_option("--workers", workers);
    CLI11_PARSE(app, argc, argv);

    Env env{out, data, workers};
    fs::create_directories(env.out);
    fs::create_directories(env.data);

    const std::vector<std::pair<const char*, std::function<Outcome(const Env&)>>> criteria{
        {"kernel exactness", c1_kernel},
        {"closed-form anchors", c2_anchors},
        {"moment identities vs Monte Carlo", c3_means},
        {"second moment formula", c4_second_moment},
        {"cumulant engine three-way agreement", c5_cumulants},
        {"likelihood normalization and importance sampling", c6_importance},
        {"martingale functional", c7_martingale},
        {"coupling diagnostics", c8_coupling},
        {"local-time convergence proxy", c9_local_time},
        {"threshold behavior", c10_threshold},
        {"occupation time", c11_occupation},
        {"bounds suite", c12_bounds},
        {"determinism", c13_determinism},
    };
    const std::set<int> pick(only.begin(), only.end());
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!pick.empty() && !pick.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second(env);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << "criterion " << id << " (" << criteria[i].first << "): " << (o.pass ? "PASS" : "FAIL") << " - "
                  << o.detail << " [" << g(secs) << " s]" << std::endl;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
    return failed ? 1 : 0;
}
