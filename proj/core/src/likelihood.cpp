#include "sirlt/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sirlt/parallel.hpp"
#include "sirlt/sir.hpp"
#include "sirlt/stats.hpp"

namespace sirlt {

double LikelihoodBreakdown::lr() const { return std::exp(log_lr); }

double log_lr_factor(std::int64_t y, double lambda, std::int64_t recovered, std::int64_t village) {
    const double k0 = kappa(y, recovered, village);
    const double k1 = kappa(y + 1, recovered, village);
    if (k0 == 0.0 && k1 == 0.0) return 0.0;
    // p(y+1|lambda)/p(y|lambda) = lambda/(y+1).
    return std::log1p(-k0 + lambda / static_cast<double>(y + 1) * k1);
}

LikelihoodBreakdown log_lr(const Trajectory& traj, std::int64_t village, double alpha, bool keep_factors) {
    if (village < 1) throw std::invalid_argument("log_lr: N must be >= 1");
    LikelihoodBreakdown out;
    out.village = village;
    out.alpha = alpha;
    if (traj.generations.empty()) return out;
    const int d = traj.at(0).dim();
    const double moves_n = 2.0 * d + 1.0;
    const double na = std::pow(static_cast<double>(village), alpha);
    const double n1a = std::pow(static_cast<double>(village), 1.0 - alpha);
    CompensatedSum lsum, s1, s2;
    LatticeField recovered(d);
    for (int t = 1; t <= traj.horizon(); ++t) {
        const LatticeField& prev = traj.at(t - 1);
        const LatticeField& cur = traj.at(t);
        recovered = field_sum(recovered, prev);  // R_t = sum_{s<t} X_s
        const LatticeField nsum = neighbour_sum(prev);
        for (const auto& [key, y] : cur) {
            if (nsum.at_key(key) == 0) {
                const Site x = site_key::unpack(key);
                throw ImpossiblePathError("log_lr: X_" + std::to_string(t) + "(" + std::to_string(x[0]) + "," +
                                          std::to_string(x[1]) + "," + std::to_string(x[2]) +
                                          ") > 0 with lambda = 0");
            }
        }
        for (const auto& [key, r] : recovered) {
            const std::int64_t y = cur.at_key(key);
            const double lambda = static_cast<double>(nsum.at_key(key)) / moves_n;
            const double lf = log_lr_factor(y, lambda, r, village);
            const double delta = (static_cast<double>(y) - lambda) / na;
            const double rho = static_cast<double>(r) / n1a;
            lsum.add(lf);
            s1.add(delta * rho);
            s2.add(0.5 * delta * delta * rho * rho);
            ++out.active;
            if (keep_factors) out.factors.push_back({t, site_key::unpack(key), y, lambda, r, lf, delta, rho});
        }
    }
    out.log_lr = lsum.value();
    out.s1 = s1.value();
    out.s2 = s2.value();
    out.epsilon = out.log_lr + out.s1 + out.s2;
    return out;
}

double difference_operator(const TestFunction& psi, int d, double k, std::span<const double> x) {
    const double h = 1.0 / std::sqrt(k);
    std::vector<double> y(x.begin(), x.end());
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
        const auto ia = static_cast<std::size_t>(a);
        y[ia] = x[ia] + h;
        const double up = psi(y);
        y[ia] = x[ia] - h;
        const double down = psi(y);
        y[ia] = x[ia];
        s += up + down;
    }
    // The e = 0 term cancels one copy of psi(x).
    return (s - 2.0 * d * psi(x)) * k / (2.0 * d + 1.0);
}

MartingaleSeries martingale_functional(const Trajectory& traj, const TestFunction& psi, int k) {
    if (k < 1) throw std::invalid_argument("martingale_functional: k must be >= 1");
    MartingaleSeries m;
    m.k = k;
    if (traj.generations.empty()) return m;
    const int d = traj.at(0).dim();
    const double kd = static_cast<double>(k);
    const TestFunction one = [](std::span<const double>) { return 1.0; };
    const TestFunction ak = [&](std::span<const double> x) { return difference_operator(psi, d, kd, x); };
    double drift_sum = 0.0;
    for (int j = 0; j <= traj.horizon(); ++j) {
        const LatticeField& x = traj.at(j);
        m.times.push_back(static_cast<double>(j) / kd);
        m.mass.push_back(feller_pair(x, kd, one));
        m.pairing.push_back(feller_pair(x, kd, psi));
        m.values.push_back(m.pairing.back() - m.pairing.front() - drift_sum);
        m.drift.push_back(feller_pair(x, kd, ak) / kd);
        drift_sum += m.drift.back();
    }
    return m;
}

double MartingaleRegression::max_abs_t() const {
    double m = 0.0;
    for (std::size_t i = 0; i < coef.size(); ++i)
        m = std::max(m, se[i] > 0.0 ? std::abs(coef[i]) / se[i] : (coef[i] == 0.0 ? 0.0 : INFINITY));
    return m;
}

MartingaleRegression martingale_regression(const LatticeField& mu, const TestFunction& psi, int k, int horizon,
                                           std::size_t reps, std::uint64_t seed, unsigned workers) {
    if (horizon < 1) throw std::invalid_argument("martingale_regression: horizon must be >= 1");
    const auto law = OffspringLaw::poisson_unit();
    // Per replicate: horizon rows of (1, mass, pairing, increment).
    auto parts = parallel_map(reps, workers, [&](std::size_t r) {
        const auto traj = brw_run(mu, law, horizon, RngContext(seed, r));
        const auto m = martingale_functional(traj, psi, k);
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(horizon) * 4);
        for (int j = 0; j < horizon; ++j) {
            const auto u = static_cast<std::size_t>(j);
            out.insert(out.end(), {1.0, m.mass[u], m.pairing[u], m.values[u + 1] - m.values[u]});
        }
        return out;
    });
    std::vector<double> rows, y;
    for (const auto& p : parts)
        for (std::size_t i = 0; i < p.size(); i += 4) {
            rows.insert(rows.end(), {p[i], p[i + 1], p[i + 2]});
            y.push_back(p[i + 3]);
        }
    const OlsFit fit = ols_hc0(rows, 3, y);
    MartingaleRegression out;
    out.regressors = {"intercept", "mass", "pairing"};
    out.coef = fit.coef;
    out.se = fit.se;
    out.observations = fit.n;
    return out;
}

std::vector<NamedFunctional> standard_battery() {
    std::vector<NamedFunctional> b;
    b.push_back({"one", [](const Trajectory&) { return 1.0; }});
    b.push_back({"extinct_at_horizon",
                 [](const Trajectory& t) { return t.at(t.horizon()).empty() ? 1.0 : 0.0; }});
    b.push_back({"min_R_origin_10", [](const Trajectory& t) {
                     std::int64_t r = 0;
                     for (int s = 0; s < t.horizon(); ++s) r += t.at(s).at({0, 0, 0});
                     return static_cast<double>(std::min<std::int64_t>(r, 10));
                 }});
    b.push_back({"occupation_30", [](const Trajectory& t) {
                     std::int64_t r = 0;
                     for (int s = 0; s <= t.horizon(); ++s) r += t.at(s).total_mass();
                     return static_cast<double>(std::min<std::int64_t>(r, 30)) / 30.0;
                 }});
    b.push_back({"max_site_5", [](const Trajectory& t) {
                     return static_cast<double>(std::min(t.at(t.horizon()).max_count(), 5));
                 }});
    return b;
}

std::vector<ImportanceResult> importance_check(std::span<const NamedFunctional> battery, const LatticeField& mu,
                                               const ImportanceOptions& opt) {
    if (opt.reps < 2) throw std::invalid_argument("importance_check: need at least 2 replicates");
    const std::size_t nf = battery.size();
    const auto law = OffspringLaw::poisson_unit();
    constexpr std::size_t kChunk = 1 << 14;
    std::vector<RunningStats> q(nf), p(nf);
    for (std::size_t base = 0; base < opt.reps; base += kChunk) {
        const std::size_t count = std::min(kChunk, opt.reps - base);
        const auto rows = parallel_map(count, opt.workers, [&](std::size_t i) {
            const RngContext rng(opt.seed, base + i);
            const Trajectory tq = modified_sir_run(mu, opt.village, law, opt.horizon, rng.fork(1));
            const Trajectory tp = brw_run(mu, law, opt.horizon, rng.fork(2));
            const double w = log_lr(tp, opt.village, opt.alpha).lr();
            std::vector<double> v(2 * nf);
            for (std::size_t f = 0; f < nf; ++f) {
                v[f] = battery[f].f(tq);
                v[nf + f] = battery[f].f(tp) * w;
            }
            return v;
        });
        for (const auto& v : rows)
            for (std::size_t f = 0; f < nf; ++f) {
                q[f].add(v[f]);
                p[f].add(v[nf + f]);
            }
    }
    std::vector<ImportanceResult> out;
    for (std::size_t f = 0; f < nf; ++f) {
        ImportanceResult r;
        r.id = battery[f].id;
        r.village = opt.village;
        r.lhs = q[f].mean();
        r.lhs_se = q[f].se();
        r.rhs = p[f].mean();
        r.rhs_se = p[f].se();
        r.degenerate = r.lhs_se == 0.0 && r.rhs_se == 0.0;
        r.z = two_sample_z(q[f], p[f]);
        out.push_back(r);
    }
    return out;
}

void write_importance_header(std::ostream& os) { os << "functional,N,lhs,lhs_se,rhs,rhs_se,z,degenerate\n"; }

void write_importance_row(std::ostream& os, const ImportanceResult& r) {
    os << r.id << ',' << r.village << ',' << r.lhs << ',' << r.lhs_se << ',' << r.rhs << ',' << r.rhs_se << ','
       << r.z << ',' << (r.degenerate ? 1 : 0) << '\n';
}

}  // namespace sirlt
