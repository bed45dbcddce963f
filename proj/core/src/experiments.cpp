#include "sirlt/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "sirlt/moments.hpp"
#include "sirlt/parallel.hpp"
#include "sirlt/sir.hpp"
#include "sirlt/stats.hpp"

#ifndef SIRLT_VERSION
#define SIRLT_VERSION "unknown"
#endif

namespace sirlt {

namespace {

using ojson = nlohmann::ordered_json;

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string tlabel(double t) { return "t=" + num(t); }

std::string probe_label(double t, std::span<const double> x) {
    std::string s = "t=" + num(t) + " x=(";
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "," : "") + num(x[i]);
    return s + ")";
}

double local_scale(int d, int k) { return std::pow(static_cast<double>(k), 2.0 - d / 2.0); }

DiagnosticReport start_report(const ExperimentConfig& cfg) {
    DiagnosticReport r;
    r.config = cfg;
    r.hash = config_hash(cfg);
    r.version = library_version();
    return r;
}

// Level tag used to fork replicate streams so ladders do not share draws.
RngContext replicate_rng(std::uint64_t seed, std::uint64_t level_tag, std::size_t rep) {
    return RngContext(seed, rep).fork(level_tag);
}

std::string kernel_cache_path(const RunOptions& opt, int d) {
    if (opt.kernel_cache.empty()) return {};
    std::filesystem::create_directories(opt.kernel_cache);
    return (std::filesystem::path(opt.kernel_cache) / ("kernel_d" + std::to_string(d) + ".bin")).string();
}

// (mu G_n)(site) for every probe, streamed inside the light cone so that
// d=3 ladders do not need a dense kernel table.
std::vector<double> exact_probe_means(const LatticeField& mu, std::span<const Probe> probes, int d) {
    std::vector<double> out(probes.size(), 0.0);
    if (mu.empty() || probes.empty()) return out;
    int window = 0;
    for (const auto& p : probes)
        for (const auto& [key, c] : mu) window = std::max(window, norm_inf(sub(p.site, site_key::unpack(key))));
    std::vector<int> ns;
    for (const auto& p : probes) ns.push_back(p.n);
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    const auto greens = green_window(WalkSpec(d), ns, window);
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const auto at = std::lower_bound(ns.begin(), ns.end(), probes[i].n) - ns.begin();
        const BoxGrid& g = greens[static_cast<std::size_t>(at)];
        CompensatedSum s;
        for (const auto& [key, c] : mu) s.add(static_cast<double>(c) * g.value(sub(probes[i].site, site_key::unpack(key))));
        out[i] = s.value();
    }
    return out;
}

double central_moment4(std::span<const double> xs, double mean) {
    double s = 0.0;
    for (double v : xs) {
        const double c = v - mean;
        s += c * c * c * c;
    }
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

}  // namespace

std::string library_version() { return SIRLT_VERSION; }

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        case Verdict::Inconclusive: return "INCONCLUSIVE";
        case Verdict::Report: return "REPORT";
    }
    return "?";
}

std::vector<double> DiagnosticReport::series(const std::string& stat) const {
    std::vector<double> out;
    for (const auto& l : levels)
        if (l.stat == stat) out.push_back(l.value);
    return out;
}

Verdict nonincreasing_verdict(std::span<const double> seq) {
    if (seq.size() < 2) return Verdict::Inconclusive;
    for (std::size_t i = 1; i < seq.size(); ++i)
        if (!(seq[i] <= seq[i - 1])) return Verdict::Fail;
    return Verdict::Pass;
}

Verdict strictly_decreasing_verdict(std::span<const double> seq) {
    if (seq.size() < 2) return Verdict::Inconclusive;
    for (std::size_t i = 1; i < seq.size(); ++i)
        if (!(seq[i] < seq[i - 1])) return Verdict::Fail;
    return Verdict::Pass;
}

Verdict threshold_verdict(std::span<const double> stat, bool critical, double threshold, double null_bound) {
    if (stat.size() < 2) return Verdict::Inconclusive;
    if (critical) {
        for (double s : stat)
            if (!(s >= threshold)) return Verdict::Fail;
        return Verdict::Pass;
    }
    if (strictly_decreasing_verdict(stat) != Verdict::Pass) return Verdict::Fail;
    return stat.back() < null_bound ? Verdict::Pass : Verdict::Fail;
}

Verdict combine_verdict(Verdict trend, std::span<const Check> checks) {
    for (const auto& c : checks)
        if (!c.pass) return Verdict::Fail;
    return trend;
}

std::vector<Probe> make_probes(int d, int k, std::span<const double> t_grid, std::span<const std::vector<double>> x_grid) {
    std::vector<Probe> out;
    const double sk = std::sqrt(static_cast<double>(k));
    for (double t : t_grid)
        for (const auto& x : x_grid) {
            if (static_cast<int>(x.size()) != d) throw std::invalid_argument("make_probes: x needs d coordinates");
            Probe p;
            p.t = t;
            p.x = x;
            p.n = static_cast<int>(std::floor(k * t + 1e-9));
            for (int a = 0; a < d; ++a) p.site[static_cast<std::size_t>(a)] = static_cast<int>(std::lround(sk * x[static_cast<std::size_t>(a)]));
            p.label = probe_label(t, x);
            out.push_back(std::move(p));
        }
    return out;
}

std::vector<std::vector<double>> local_time_field(const Trajectory& traj, const LatticeField& mu, int k,
                                                  std::span<const double> t_grid,
                                                  std::span<const std::vector<double>> x_grid,
                                                  const KernelTable& table) {
    if (k < 1) throw std::invalid_argument("local_time_field: k must be >= 1");
    const int d = traj.d;
    const double scale = local_scale(d, k);
    std::vector<std::vector<double>> out;
    for (double t : t_grid) {
        const auto probes = make_probes(d, k, std::span<const double>(&t, 1), x_grid);
        std::vector<double> row;
        for (const auto& p : probes) {
            if (p.n > traj.horizon() + 1)
                throw HorizonError("local_time_field: floor(kt) = " + std::to_string(p.n) + " exceeds the trajectory");
            if (p.n == 0) {
                row.push_back(0.0);
                continue;
            }
            std::int64_t r = 0;
            for (int m = 0; m < p.n; ++m) r += traj.at(m).at(p.site);
            const double mean = green_convolve_at(table, mu, p.n, p.site);
            row.push_back((static_cast<double>(r) - mean) / scale);
        }
        out.push_back(std::move(row));
    }
    return out;
}

LocalTimeLevel sample_local_time_level(const InitialConfigFamily& family, int k, std::span<const Probe> probes,
                                       std::size_t reps, std::uint64_t seed, unsigned workers) {
    LocalTimeLevel lvl;
    lvl.k = k;
    lvl.probes.assign(probes.begin(), probes.end());
    const int d = family.dim();
    const LatticeField mu = family.generate(k);
    lvl.exact_mean = exact_probe_means(mu, probes, d);
    const auto law = OffspringLaw::poisson_unit();
    const double scale = local_scale(d, k);
    int nmax = 0;
    for (const auto& p : probes) nmax = std::max(nmax, p.n);

    auto rows = parallel_map(reps, workers, [&](std::size_t rep) {
        std::vector<double> acc(probes.size(), 0.0);
        if (nmax > 0 && !mu.empty()) {
            brw_evolve(mu, law, nmax - 1, replicate_rng(seed, static_cast<std::uint64_t>(k), rep),
                       [&](int t, const LatticeField& x) {
                           for (std::size_t i = 0; i < probes.size(); ++i)
                               if (t < probes[i].n) acc[i] += static_cast<double>(x.at(probes[i].site));
                           return !x.empty();
                       });
        }
        for (std::size_t i = 0; i < probes.size(); ++i) acc[i] = (acc[i] - lvl.exact_mean[i]) / scale;
        return acc;
    });
    lvl.samples.assign(probes.size(), std::vector<double>(reps));
    for (std::size_t r = 0; r < reps; ++r)
        for (std::size_t i = 0; i < probes.size(); ++i) lvl.samples[i][r] = rows[r][i];
    return lvl;
}

double local_time_variance(const LatticeField& mu, int k, const Probe& probe) {
    const int d = mu.dim();
    if (probe.n == 0 || mu.empty()) return 0.0;
    BoxGrid psi(d, probe.site, probe.site);
    psi[probe.site] = 1.0;
    const auto table = cumulant_recursion(psi, 2, probe.n, OffspringLaw::poisson_unit(), Convention::Gen0ToNMinus1,
                                          CumulantEngine::Direct);
    // kappa_2 is the theta^2 coefficient of the log-MGF, i.e. half the variance.
    const double s = local_scale(d, k);
    return 2.0 * table.pair_kappa(mu, 2, probe.n) / (s * s);
}

std::vector<double> occupation_counts(const InitialConfigFamily& family, int k, double t, std::size_t reps,
                                      std::uint64_t seed, unsigned workers) {
    const LatticeField mu = family.generate(k);
    const int n = static_cast<int>(std::floor(k * t + 1e-9));
    const auto law = OffspringLaw::poisson_unit();
    const Site origin{0, 0, 0};
    return parallel_map(reps, workers, [&](std::size_t rep) {
        double c = 0.0;
        if (n < 1 || mu.empty()) return c;
        brw_evolve(mu, law, n, replicate_rng(seed, static_cast<std::uint64_t>(k), rep),
                   [&](int m, const LatticeField& x) {
                       if (m >= 1 && x.at(origin) > 0) c += 1.0;
                       return !x.empty();
                   });
        return c;
    });
}

LatticeField threshold_initial(const InitialConfigFamily& family, std::int64_t village, double alpha) {
    const int k = std::max(1, static_cast<int>(std::lround(std::pow(static_cast<double>(village), alpha))));
    return family.generate(k);
}

DiagnosticReport converge_diagnostic(const ExperimentConfig& cfg, const RunOptions& opt) {
    if (cfg.mode != Mode::LocalTime) throw std::invalid_argument("converge_diagnostic: mode must be local_time");
    DiagnosticReport rep = start_report(cfg);
    const auto family = cfg.make_family();
    const std::vector<std::vector<double>> xs{cfg.probe_x};

    if (cfg.ks_resolution > 0.0)
        for (std::size_t i = 0; i + 1 < cfg.k_ladder.size(); ++i) {
            const double crit = ks_critical(cfg.replicates_at(i), cfg.replicates_at(i + 1));
            if (crit > cfg.ks_resolution)
                throw InsufficientReplicatesError("KS resolution " + num(cfg.ks_resolution) + " needs more replicates: " +
                                                  std::to_string(cfg.replicates_at(i)) + " vs " +
                                                  std::to_string(cfg.replicates_at(i + 1)) + " resolve only " + num(crit));
        }

    rep.replicates.columns = {"level", "k", "replicate"};
    for (double t : cfg.probe_t) rep.replicates.columns.push_back("Y[" + probe_label(t, cfg.probe_x) + "]");

    std::vector<LocalTimeLevel> levels;
    for (std::size_t li = 0; li < cfg.k_ladder.size(); ++li) {
        const int k = cfg.k_ladder[li];
        const auto probes = make_probes(cfg.d, k, cfg.probe_t, xs);
        auto lvl = sample_local_time_level(family, k, probes, cfg.replicates_at(li), cfg.seed, opt.workers);
        const LatticeField mu = family.generate(k);
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const auto& s = lvl.samples[p];
            const RunningStats st = summarize(s);
            rep.levels.push_back({li, double(k), "mean[" + probes[p].label + "]", st.mean(), st.se(), s.size()});
            rep.levels.push_back({li, double(k), "var[" + probes[p].label + "]", st.variance(), 0.0, s.size()});
            rep.levels.push_back({li, double(k), "exact_mean_R[" + probes[p].label + "]", lvl.exact_mean[p], 0.0, s.size()});
            // Exact-mean self-check: Y_k is centred by the exact mean.
            const double bound = cfg.se_multiplier * st.se();
            rep.checks.push_back({"mean_zero k=" + std::to_string(k) + " " + probes[p].label, std::abs(st.mean()), bound,
                                  std::abs(st.mean()) <= bound || (st.se() == 0.0 && st.mean() == 0.0)});
            if (k == cfg.variance_k) {
                const double v = local_time_variance(mu, k, probes[p]);
                const double s2 = st.variance();
                const double m4 = central_moment4(s, st.mean());
                const double se = std::sqrt(std::max(0.0, m4 - s2 * s2) / static_cast<double>(s.size()));
                rep.levels.push_back({li, double(k), "exact_var[" + probes[p].label + "]", v, 0.0, s.size()});
                rep.checks.push_back({"variance k=" + std::to_string(k) + " " + probes[p].label, std::abs(s2 - v),
                                      cfg.se_multiplier * se, std::abs(s2 - v) <= cfg.se_multiplier * se});
            }
        }
        for (std::size_t r = 0; r < lvl.samples.front().size(); ++r) {
            std::vector<double> row{double(li), double(k), double(r)};
            for (const auto& s : lvl.samples) row.push_back(s[r]);
            rep.replicates.rows.push_back(std::move(row));
        }
        levels.push_back(std::move(lvl));
    }
    if (std::find(cfg.k_ladder.begin(), cfg.k_ladder.end(), cfg.variance_k) == cfg.k_ladder.end())
        rep.notes.push_back("variance_k = " + std::to_string(cfg.variance_k) + " is not on the ladder; variance check skipped");

    Verdict trend = Verdict::Pass;
    for (std::size_t p = 0; p < cfg.probe_t.size(); ++p) {
        std::vector<double> ds;
        for (std::size_t li = 0; li + 1 < levels.size(); ++li) {
            const auto& a = levels[li].samples[p];
            const auto& b = levels[li + 1].samples[p];
            const double ks = ks_distance(a, b);
            rep.distances.push_back({levels[li].probes[p].label, double(levels[li].k), double(levels[li + 1].k), ks,
                                     ks_pvalue(ks, a.size(), b.size()), a.size(), b.size()});
            ds.push_back(ks);
        }
        const Verdict v = nonincreasing_verdict(ds);
        if (v == Verdict::Fail || trend == Verdict::Fail) trend = Verdict::Fail;
        else if (v == Verdict::Inconclusive) trend = Verdict::Inconclusive;
    }
    if (cfg.probe_t.empty()) trend = Verdict::Inconclusive;
    rep.trend = trend;
    rep.verdict = combine_verdict(trend, rep.checks);
    return rep;
}

DiagnosticReport threshold_sweep(const ExperimentConfig& cfg, const RunOptions& opt) {
    if (cfg.mode != Mode::ThresholdSweep) throw std::invalid_argument("threshold_sweep: mode must be threshold_sweep");
    DiagnosticReport rep = start_report(cfg);
    const auto family = cfg.make_family();
    const bool critical = std::abs(cfg.alpha - critical_alpha(cfg.d)) < 1e-9;

    // Curve grid: quarter steps up to the horizon plus the probe times.
    std::vector<double> grid;
    for (int j = 0; j * 0.25 <= cfg.horizon_t + 1e-12; ++j) grid.push_back(j * 0.25);
    for (double t : cfg.probe_t) grid.push_back(t);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    rep.replicates.columns = {"level", "N", "replicate"};
    for (double t : cfg.probe_t) rep.replicates.columns.push_back("envelope[" + tlabel(t) + "]");
    for (double t : cfg.probe_t) rep.replicates.columns.push_back("sir[" + tlabel(t) + "]");

    std::vector<double> max_stat;
    for (std::size_t li = 0; li < cfg.village_ladder.size(); ++li) {
        const std::int64_t N = cfg.village_ladder[li];
        const double na = std::pow(static_cast<double>(N), cfg.alpha);
        const LatticeField mu = threshold_initial(family, N, cfg.alpha);
        const double tmax = std::max(cfg.horizon_t, cfg.probe_t.empty() ? 0.0 : *std::max_element(cfg.probe_t.begin(), cfg.probe_t.end()));
        const int H = static_cast<int>(std::lround(tmax * na));
        auto gen = [&](double t) { return std::min(H, static_cast<int>(std::lround(t * na))); };
        const auto law = OffspringLaw::envelope(N);
        const std::size_t reps = cfg.replicates_at(li);

        auto runs = parallel_map(reps, opt.workers, [&](std::size_t r) {
            const auto run = coupled_run(mu, N, cfg.alpha, H, law, replicate_rng(cfg.seed, static_cast<std::uint64_t>(N), r));
            std::vector<double> row;
            for (double t : grid) row.push_back(static_cast<double>(run.envelope_mass[static_cast<std::size_t>(gen(t))]) / na);
            for (double t : grid) row.push_back(static_cast<double>(run.standard_mass[static_cast<std::size_t>(gen(t))]) / na);
            return row;
        });
        const std::size_t G = grid.size();
        std::vector<RunningStats> env(G), sir(G);
        for (const auto& row : runs)
            for (std::size_t g = 0; g < G; ++g) {
                env[g].add(row[g]);
                sir[g].add(row[G + g]);
            }
        for (std::size_t g = 0; g < G; ++g) {
            rep.levels.push_back({li, double(N), "envelope_mass[" + tlabel(grid[g]) + "]", env[g].mean(), env[g].se(), reps});
            rep.levels.push_back({li, double(N), "sir_mass[" + tlabel(grid[g]) + "]", sir[g].mean(), sir[g].se(), reps});
        }
        double best = 0.0;
        for (double t : cfg.probe_t) {
            const auto g = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), t) - grid.begin());
            double z = two_sample_z(env[g], sir[g]);
            if (std::isnan(z)) z = 0.0;
            rep.levels.push_back({li, double(N), "suppression[" + tlabel(t) + "]", z, 0.0, reps});
            best = std::max(best, z);
        }
        rep.levels.push_back({li, double(N), "max_suppression", best, 0.0, reps});
        max_stat.push_back(best);
        for (std::size_t r = 0; r < runs.size(); ++r) {
            std::vector<double> row{double(li), double(N), double(r)};
            for (double t : cfg.probe_t) {
                const auto g = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), t) - grid.begin());
                row.push_back(runs[r][g]);
            }
            for (double t : cfg.probe_t) {
                const auto g = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), t) - grid.begin());
                row.push_back(runs[r][G + g]);
            }
            rep.replicates.rows.push_back(std::move(row));
        }
    }
    rep.notes.push_back(critical ? "alpha at the critical exponent: suppression must reach the threshold at every level"
                                 : "alpha below the critical exponent: suppression must fall strictly along the ladder");
    rep.trend = threshold_verdict(max_stat, critical, cfg.suppression_threshold, cfg.se_multiplier);
    rep.verdict = rep.trend;
    return rep;
}

DiagnosticReport occupation_time_stat(const ExperimentConfig& cfg, const RunOptions& opt) {
    if (cfg.mode != Mode::OccupationTime) throw std::invalid_argument("occupation_time_stat: mode must be occupation_time");
    if (cfg.d != 2) throw std::invalid_argument("occupation_time_stat: d must be 2");
    DiagnosticReport rep = start_report(cfg);
    const auto family = cfg.make_family();
    rep.replicates.columns = {"level", "k", "replicate", "count"};
    std::vector<double> r;
    for (std::size_t li = 0; li < cfg.k_ladder.size(); ++li) {
        const int k = cfg.k_ladder[li];
        const auto counts = occupation_counts(family, k, cfg.horizon_t, cfg.replicates_at(li), cfg.seed, opt.workers);
        const RunningStats st = summarize(counts);
        const double f = k > 1 ? std::log(static_cast<double>(k)) / k : 0.0;
        rep.levels.push_back({li, double(k), "occupation", st.mean(), st.se(), counts.size()});
        rep.levels.push_back({li, double(k), "r", st.mean() * f, st.se() * f, counts.size()});
        r.push_back(st.mean() * f);
        for (std::size_t i = 0; i < counts.size(); ++i) rep.replicates.rows.push_back({double(li), double(k), double(i), counts[i]});
    }
    rep.trend = nonincreasing_verdict(r);
    rep.verdict = rep.trend;
    return rep;
}

namespace {

std::map<std::string, double> load_baseline(const std::string& path, int d, double beta, double gamma) {
    std::ifstream in(path);
    const auto j = nlohmann::json::parse(in);
    if (j.at("d").get<int>() != d || j.at("beta").get<double>() != beta || j.at("gamma").get<double>() != gamma)
        throw std::runtime_error("bounds baseline " + path + " was recorded for different d, beta or gamma");
    std::map<std::string, double> out;
    for (const auto& [k, v] : j.at("constants").items()) out[k] = v.get<double>();
    return out;
}

}  // namespace

DiagnosticReport bounds_suite(const ExperimentConfig& cfg, const RunOptions& opt) {
    if (cfg.mode != Mode::BoundsSuite) throw std::invalid_argument("bounds_suite: mode must be bounds_suite");
    DiagnosticReport rep = start_report(cfg);
    std::vector<std::pair<BoundId, BoundParams>> plan;
    int nmax = 0;
    for (const auto& name : cfg.inequalities) {
        const BoundId id = parse_bound_id(name);
        BoundParams p = standard_bound_params(id, cfg.d);
        p.beta = cfg.beta;
        p.gamma = cfg.gamma;
        nmax = std::max(nmax, bound_kernel_horizon(id, p));
        plan.emplace_back(id, std::move(p));
    }
    const KernelTable table = KernelTable::cached(kernel_cache_path(opt, cfg.d), WalkSpec(cfg.d), nmax);

    // Scans are independent; run them on the workers and keep plan order.
    rep.bounds = parallel_map(plan.size(), opt.workers,
                              [&](std::size_t i) { return verify_bounds(plan[i].first, plan[i].second, table); });

    std::map<std::string, double> baseline;
    bool have_baseline = false;
    if (!cfg.bounds_baseline.empty()) {
        if (std::filesystem::exists(cfg.bounds_baseline)) {
            baseline = load_baseline(cfg.bounds_baseline, cfg.d, cfg.beta, cfg.gamma);
            have_baseline = true;
        } else {
            ojson j;
            j["schema"] = "sirlt.bounds_baseline/1";
            j["d"] = cfg.d;
            j["beta"] = cfg.beta;
            j["gamma"] = cfg.gamma;
            ojson cs = ojson::object();
            for (const auto& b : rep.bounds) cs[bound_id_name(b.id)] = b.constant;
            j["constants"] = cs;
            const auto parent = std::filesystem::path(cfg.bounds_baseline).parent_path();
            if (!parent.empty()) std::filesystem::create_directories(parent);
            std::ofstream(cfg.bounds_baseline) << j.dump(2) << "\n";
            rep.notes.push_back("no baseline found; this run was recorded as the baseline in " + cfg.bounds_baseline);
        }
    }

    for (std::size_t i = 0; i < rep.bounds.size(); ++i) {
        const auto& b = rep.bounds[i];
        const std::string name = bound_id_name(b.id);
        rep.levels.push_back({i, double(cfg.d), "constant[" + name + "]", b.constant, 0.0, b.evaluated});
        rep.checks.push_back({name + ".scan", b.constant, b.params.ceiling, b.pass});
        if (have_baseline && b.id != BoundId::FgCentral) {
            const auto it = baseline.find(name);
            if (it == baseline.end()) {
                rep.notes.push_back("baseline has no entry for " + name);
                continue;
            }
            const double lim = it->second * cfg.baseline_tolerance;
            rep.checks.push_back({name + ".baseline", b.constant, lim, b.constant <= lim});
        }
    }
    rep.trend = Verdict::Pass;
    rep.verdict = combine_verdict(Verdict::Pass, rep.checks);
    return rep;
}

DiagnosticReport importance_battery(const ExperimentConfig& cfg, const RunOptions& opt) {
    if (cfg.mode != Mode::ImportanceBattery) throw std::invalid_argument("importance_battery: mode must be importance_battery");
    DiagnosticReport rep = start_report(cfg);
    const auto battery = standard_battery();
    const LatticeField mu = LatticeField::point(cfg.d, {0, 0, 0}, cfg.mu_mass);
    for (std::size_t li = 0; li < cfg.village_ladder.size(); ++li) {
        ImportanceOptions io;
        io.village = cfg.village_ladder[li];
        io.alpha = cfg.alpha;
        io.horizon = cfg.horizon;
        io.reps = cfg.replicates_at(li);
        io.seed = combine(mix64(cfg.seed), static_cast<std::uint64_t>(io.village));
        io.workers = opt.workers;
        for (auto& res : importance_check(battery, mu, io)) {
            const double N = static_cast<double>(io.village);
            rep.levels.push_back({li, N, "lhs[" + res.id + "]", res.lhs, res.lhs_se, io.reps});
            rep.levels.push_back({li, N, "rhs[" + res.id + "]", res.rhs, res.rhs_se, io.reps});
            rep.levels.push_back({li, N, "z[" + res.id + "]", res.z, 0.0, io.reps});
            const bool ok = res.degenerate ? res.lhs == res.rhs : std::abs(res.z) <= cfg.se_multiplier;
            rep.checks.push_back({"importance N=" + std::to_string(io.village) + " " + res.id, std::abs(res.z),
                                  cfg.se_multiplier, ok});
            rep.importance.push_back(std::move(res));
        }
    }
    rep.trend = Verdict::Pass;
    rep.verdict = combine_verdict(Verdict::Pass, rep.checks);
    return rep;
}

DiagnosticReport coupling_diagnostic(const ExperimentConfig& cfg, const RunOptions& opt) {
    if (cfg.mode != Mode::Coupling) throw std::invalid_argument("coupling_diagnostic: mode must be coupling");
    DiagnosticReport rep = start_report(cfg);
    const auto family = cfg.make_family();
    rep.replicates.columns = {"level", "N", "replicate", "collision_score", "scaled_collision_score",
                              "max_discrepancy", "scaled_max_discrepancy", "extinction_time", "steps"};
    std::vector<double> med_score, med_disc;
    for (std::size_t li = 0; li < cfg.village_ladder.size(); ++li) {
        const std::int64_t N = cfg.village_ladder[li];
        const double na = std::pow(static_cast<double>(N), cfg.alpha);
        const LatticeField mu = threshold_initial(family, N, cfg.alpha);
        const int H = static_cast<int>(std::ceil(cfg.horizon_t * na));
        const auto law = OffspringLaw::envelope(N);
        const std::size_t reps = cfg.replicates_at(li);
        auto rows = parallel_map(reps, opt.workers, [&](std::size_t r) {
            const auto run = coupled_run(mu, N, cfg.alpha, H, law, replicate_rng(cfg.seed, static_cast<std::uint64_t>(N), r));
            return std::vector<double>{double(li), double(N), double(r), double(run.collision_score),
                                       run.scaled_collision_score(), double(run.max_discrepancy),
                                       run.scaled_max_discrepancy(), double(run.extinction_time), double(run.steps)};
        });
        std::vector<double> sc, dc;
        std::size_t zeros = 0, alive = 0;
        for (const auto& row : rows) {
            sc.push_back(row[4]);
            dc.push_back(row[6]);
            zeros += row[3] == 0.0;
            alive += row[7] < 0.0;
        }
        const double ms = median(sc), md = median(dc);
        rep.levels.push_back({li, double(N), "median_scaled_collision_score", ms, 0.0, reps});
        rep.levels.push_back({li, double(N), "median_scaled_max_discrepancy", md, 0.0, reps});
        rep.levels.push_back({li, double(N), "mean_scaled_collision_score", summarize(sc).mean(), summarize(sc).se(), reps});
        rep.levels.push_back({li, double(N), "mean_scaled_max_discrepancy", summarize(dc).mean(), summarize(dc).se(), reps});
        rep.levels.push_back({li, double(N), "fraction_zero_score", double(zeros) / double(reps), 0.0, reps});
        rep.levels.push_back({li, double(N), "fraction_alive_at_cap", double(alive) / double(reps), 0.0, reps});
        rep.levels.push_back({li, double(N), "initial_mass", double(mu.total_mass()), 0.0, reps});
        rep.levels.push_back({li, double(N), "horizon", double(H), 0.0, reps});
        med_score.push_back(ms);
        med_disc.push_back(md);
        for (auto& row : rows) rep.replicates.rows.push_back(std::move(row));
    }
    const Verdict a = strictly_decreasing_verdict(med_score);
    const Verdict b = strictly_decreasing_verdict(med_disc);
    rep.trend = (a == Verdict::Fail || b == Verdict::Fail) ? Verdict::Fail
                : (a == Verdict::Pass && b == Verdict::Pass) ? Verdict::Pass
                                                             : Verdict::Inconclusive;
    rep.verdict = rep.trend;
    return rep;
}

DiagnosticReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
    switch (cfg.mode) {
        case Mode::LocalTime: return converge_diagnostic(cfg, opt);
        case Mode::ThresholdSweep: return threshold_sweep(cfg, opt);
        case Mode::OccupationTime: return occupation_time_stat(cfg, opt);
        case Mode::BoundsSuite: return bounds_suite(cfg, opt);
        case Mode::ImportanceBattery: return importance_battery(cfg, opt);
        case Mode::Coupling: return coupling_diagnostic(cfg, opt);
    }
    throw std::logic_error("run_experiment: unknown mode");
}

std::string report_json(const DiagnosticReport& r) {
    ojson j;
    j["schema"] = "sirlt.diagnostic_report/1";
    j["mode"] = mode_name(r.config.mode);
    j["config_hash"] = r.hash;
    j["seed"] = r.config.seed;
    j["version"] = r.version;
    ojson cfg = ojson::object();
    {
        std::istringstream is(canonical_config(r.config));
        std::string line;
        while (std::getline(is, line)) {
            const auto eq = line.find(" = ");
            cfg[line.substr(0, eq)] = line.substr(eq + 3);
        }
    }
    j["config"] = cfg;
    j["verdict"] = verdict_name(r.verdict);
    j["trend"] = verdict_name(r.trend);
    ojson lv = ojson::array();
    for (const auto& l : r.levels)
        lv.push_back({{"level", l.level}, {"param", l.param}, {"stat", l.stat}, {"value", l.value}, {"se", l.se}, {"n", l.n}});
    j["levels"] = lv;
    ojson ds = ojson::array();
    for (const auto& d : r.distances)
        ds.push_back({{"probe", d.probe}, {"from", d.from}, {"to", d.to}, {"ks", d.ks}, {"pvalue", d.pvalue},
                      {"n_from", d.n_from}, {"n_to", d.n_to}});
    j["distances"] = ds;
    ojson cs = ojson::array();
    for (const auto& c : r.checks) cs.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}});
    j["checks"] = cs;
    if (!r.bounds.empty()) {
        ojson bs = ojson::array();
        for (const auto& b : r.bounds) bs.push_back(ojson::parse(to_json(b)));
        j["bounds"] = bs;
    }
    if (!r.importance.empty()) {
        ojson is = ojson::array();
        for (const auto& x : r.importance)
            is.push_back({{"id", x.id}, {"N", x.village}, {"lhs", x.lhs}, {"lhs_se", x.lhs_se}, {"rhs", x.rhs},
                          {"rhs_se", x.rhs_se}, {"z", x.z}, {"degenerate", x.degenerate}});
        j["importance"] = is;
    }
    j["notes"] = r.notes;
    return j.dump(2) + "\n";
}

void write_levels_csv(std::ostream& os, const DiagnosticReport& r) {
    os << "level,param,stat,value,se,n\n";
    for (const auto& l : r.levels)
        os << l.level << ',' << num(l.param) << ",\"" << l.stat << "\"," << num(l.value) << ',' << num(l.se) << ',' << l.n
           << '\n';
}

void write_replicates_csv(std::ostream& os, const DiagnosticReport& r) {
    for (std::size_t i = 0; i < r.replicates.columns.size(); ++i)
        os << (i ? "," : "") << '"' << r.replicates.columns[i] << '"';
    os << '\n';
    for (const auto& row : r.replicates.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << num(row[i]);
        os << '\n';
    }
}

std::vector<std::string> write_report(const DiagnosticReport& r, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> paths;
    auto open = [&](const std::string& name) {
        paths.push_back((fs::path(dir) / name).string());
        std::ofstream f(paths.back(), std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + paths.back());
        return f;
    };
    {
        auto f = open("report.json");
        f << report_json(r);
    }
    {
        auto f = open("levels.csv");
        write_levels_csv(f, r);
    }
    if (!r.replicates.columns.empty()) {
        auto f = open("replicates.csv");
        write_replicates_csv(f, r);
    }
    if (!r.bounds.empty()) {
        auto f = open("bounds.csv");
        write_bound_header(f);
        for (const auto& b : r.bounds) write_bound_row(f, b);
    }
    if (!r.importance.empty()) {
        auto f = open("importance.csv");
        write_importance_header(f);
        for (const auto& x : r.importance) write_importance_row(f, x);
    }
    return paths;
}

std::string summary_line(const DiagnosticReport& r) {
    std::ostringstream s;
    s << mode_name(r.config.mode) << " d=" << r.config.d << " hash=" << r.hash << " seed=" << r.config.seed
      << " verdict=" << verdict_name(r.verdict);
    std::size_t failed = 0;
    for (const auto& c : r.checks) failed += !c.pass;
    s << " checks=" << (r.checks.size() - failed) << "/" << r.checks.size();
    if (!r.distances.empty()) {
        s << " ks=";
        for (std::size_t i = 0; i < r.distances.size(); ++i) s << (i ? "," : "") << num(r.distances[i].ks);
    }
    const char* headline = nullptr;
    switch (r.config.mode) {
        case Mode::ThresholdSweep: headline = "max_suppression"; break;
        case Mode::OccupationTime: headline = "r"; break;
        case Mode::Coupling: headline = "median_scaled_collision_score"; break;
        default: break;
    }
    if (headline) {
        s << ' ' << headline << '=';
        const auto v = r.series(headline);
        for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << num(v[i]);
    }
    return s.str();
}

int run(const std::string& config_path, const RunOptions& opt, std::ostream& out, std::ostream& err,
        const std::vector<std::pair<std::string, std::string>>& overrides) {
    RawConfig raw;
    try {
        raw = load_config_file(config_path);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return run_raw(std::move(raw), opt, out, err, overrides);
}

int run_raw(RawConfig raw, const RunOptions& opt, std::ostream& out, std::ostream& err,
            const std::vector<std::pair<std::string, std::string>>& overrides) {
    ExperimentConfig cfg;
    try {
        for (const auto& [k, v] : overrides) {
            auto it = std::find_if(raw.items.begin(), raw.items.end(), [&](const auto& i) { return i.key == k; });
            if (it != raw.items.end()) it->value = v;
            else raw.items.push_back({k, v, 0});
        }
        cfg = build_config(raw);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        const DiagnosticReport rep = run_experiment(cfg, opt);
        for (const auto& p : write_report(rep, cfg.out_dir)) err << "wrote " << p << "\n";
        out << summary_line(rep) << "\n";
        return rep.verdict == Verdict::Fail ? kExitFail : kExitOk;
    } catch (const InsufficientReplicatesError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace sirlt
