#include "sirlt/moments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace sirlt {

Convention parse_convention(const std::string& s) {
    if (s == "gen_1_to_n") return Convention::Gen1ToN;
    if (s == "gen_0_to_n_minus_1") return Convention::Gen0ToNMinus1;
    throw std::invalid_argument("unknown convention '" + s + "'");
}

std::string convention_name(Convention c) {
    return c == Convention::Gen1ToN ? "gen_1_to_n" : "gen_0_to_n_minus_1";
}

namespace {

BoxGrid empty_grid(int d) { return BoxGrid(d, {0, 0, 0}, {-1, -1, -1}); }

BoxGrid on_box(const BoxGrid& g, const BoxGrid& box) {
    if (box.empty()) return box;
    if (g.empty()) return BoxGrid(box.dim(), box.lo(), box.hi());
    return g.embedded(box.lo(), box.hi());
}

// g + h on the hull of both boxes.
BoxGrid add_grids(const BoxGrid& g, const BoxGrid& h, double scale = 1.0) {
    const BoxGrid box = BoxGrid::hull(g, h);
    BoxGrid out = on_box(g, box);
    if (h.empty()) return out;
    const BoxGrid hh = on_box(h, box);
    auto ov = out.values();
    auto hv = hh.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += scale * hv[i];
    return out;
}

// Binomial moments b_l = sum_j q_j C(j, l), so that pgf(1 + s) = sum_l b_l s^l.
std::vector<double> binomial_moments(const OffspringLaw& law) {
    const auto& q = law.pmf();
    std::vector<double> b(q.size(), 0.0);
    for (std::size_t j = 0; j < q.size(); ++j) {
        double c = 1.0;
        for (std::size_t l = 0; l <= j; ++l) {
            b[l] += q[j] * c;
            c = c * static_cast<double>(j - l) / static_cast<double>(l + 1);
        }
    }
    return b;
}

void require_iid(const OffspringLaw& law, const char* who) {
    if (!law.iid_placement()) {
        throw std::invalid_argument(std::string(who) + ": only laws with i.i.d. uniform placement are supported");
    }
}

// f(1 + s) evaluated exactly: s for Poisson(1), log1p(sum_{l>=1} b_l s^l) for
// finite-support laws.
class ShiftedLogPgf {
public:
    explicit ShiftedLogPgf(const OffspringLaw& law) : poisson_(law.kind() == OffspringLaw::Kind::PoissonUnit) {
        if (!poisson_) b_ = binomial_moments(law);
    }
    double operator()(double s) const {
        if (poisson_) return s;
        double p = 0.0;
        for (std::size_t l = b_.size(); l-- > 1;) p = (p + b_[l]) * s;
        return std::log1p(p);
    }

private:
    bool poisson_;
    std::vector<double> b_;
};

void check_ceiling(const BoxGrid& g, double ceiling) {
    for (double v : g.values()) {
        if (!(std::abs(v) <= ceiling)) {
            std::ostringstream os;
            os << "nu recursion diverged: |nu| = " << std::abs(v) << " exceeds ceiling " << ceiling;
            throw DivergenceError(os.str());
        }
    }
}

// One step nu -> f(mean_e exp(shift + nu)) (shift may be empty).
BoxGrid nu_step(const BoxGrid& cur, const BoxGrid& shift, const ShiftedLogPgf& f, double ceiling) {
    const BoxGrid box = BoxGrid::hull(cur, shift);
    if (box.empty()) return box;
    BoxGrid g = on_box(cur, box);
    if (!shift.empty()) {
        const BoxGrid s = on_box(shift, box);
        auto gv = g.values();
        auto sv = s.values();
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += sv[i];
    }
    for (double& v : g.values()) v = std::expm1(v);
    BoxGrid next = stencil_step(g);
    for (double& v : next.values()) v = f(v);
    check_ceiling(next, ceiling);
    return next;
}

// Composition tables comps[h][m] for 1 <= m <= h <= H.
using CompTable = std::vector<std::vector<std::vector<std::vector<int>>>>;

CompTable composition_table(int H) {
    CompTable t(static_cast<std::size_t>(H) + 1);
    for (int h = 1; h <= H; ++h) {
        t[static_cast<std::size_t>(h)].resize(static_cast<std::size_t>(h) + 1);
        for (int m = 1; m <= h; ++m) t[static_cast<std::size_t>(h)][static_cast<std::size_t>(m)] = compositions(h, m);
    }
    return t;
}

// sum_{m=1}^{h} w_m sum_{P_m(h)} prod a_{h_i}, for every h = 1..H.
void composition_series(const CompTable& comps, std::span<const double> weights, std::span<const double> a,
                        std::span<double> out) {
    const int H = static_cast<int>(out.size()) - 1;
    for (int h = 1; h <= H; ++h) {
        double total = 0.0;
        for (int m = 1; m <= h; ++m) {
            const double w = weights[static_cast<std::size_t>(m)];
            if (w == 0.0) continue;
            double s = 0.0;
            for (const auto& c : comps[static_cast<std::size_t>(h)][static_cast<std::size_t>(m)]) {
                double p = 1.0;
                for (int part : c) p *= a[static_cast<std::size_t>(part)];
                s += p;
            }
            total += w * s;
        }
        out[static_cast<std::size_t>(h)] = total;
    }
}

// exp(A) - 1 for a series with zero constant term, by E_0 = 1,
// n E_n = sum_{k=1}^{n} k A_k E_{n-k}.
void series_expm1(std::span<const double> a, std::span<double> out) {
    const int H = static_cast<int>(a.size()) - 1;
    std::vector<double> e(static_cast<std::size_t>(H) + 1, 0.0);
    e[0] = 1.0;
    for (int n = 1; n <= H; ++n) {
        double s = 0.0;
        for (int k = 1; k <= n; ++k) s += k * a[static_cast<std::size_t>(k)] * e[static_cast<std::size_t>(n - k)];
        e[static_cast<std::size_t>(n)] = s / n;
    }
    out[0] = 0.0;
    for (int n = 1; n <= H; ++n) out[static_cast<std::size_t>(n)] = e[static_cast<std::size_t>(n)];
}

// sum_{l>=1} c_l S^l truncated at order H, by repeated multiplication.
void series_compose(std::span<const double> c, std::span<const double> s, std::span<double> out) {
    const int H = static_cast<int>(s.size()) - 1;
    std::vector<double> pw(s.begin(), s.end()), tmp(static_cast<std::size_t>(H) + 1);
    std::fill(out.begin(), out.end(), 0.0);
    for (int l = 1; l <= H; ++l) {
        const double cl = c[static_cast<std::size_t>(l)];
        for (int h = l; h <= H; ++h) out[static_cast<std::size_t>(h)] += cl * pw[static_cast<std::size_t>(h)];
        std::fill(tmp.begin(), tmp.end(), 0.0);
        for (int i = l; i <= H; ++i)
            for (int j = 1; i + j <= H; ++j)
                tmp[static_cast<std::size_t>(i + j)] += pw[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(j)];
        pw = tmp;
    }
}

// Per-step map of the direct engine: given series A_h (h = 1..H) on a box,
// return the series of F(mean_e (exp A - 1)) on the box grown by 1, using
// explicit composition sums.
std::vector<BoxGrid> direct_step(const std::vector<BoxGrid>& A, const CompTable& comps, std::span<const double> c) {
    const int H = static_cast<int>(A.size()) - 1;
    const BoxGrid& box = A[1];
    std::vector<double> inv_fact(static_cast<std::size_t>(H) + 1, 1.0);
    for (int m = 1; m <= H; ++m) inv_fact[static_cast<std::size_t>(m)] = inv_fact[static_cast<std::size_t>(m - 1)] / m;

    std::vector<BoxGrid> W(static_cast<std::size_t>(H) + 1);
    for (int h = 1; h <= H; ++h) W[static_cast<std::size_t>(h)] = BoxGrid(box.dim(), box.lo(), box.hi());
    std::vector<double> a(static_cast<std::size_t>(H) + 1), w(static_cast<std::size_t>(H) + 1);
    for (std::size_t idx = 0; idx < box.size(); ++idx) {
        for (int h = 1; h <= H; ++h) a[static_cast<std::size_t>(h)] = A[static_cast<std::size_t>(h)].values()[idx];
        composition_series(comps, inv_fact, a, w);
        for (int h = 1; h <= H; ++h) W[static_cast<std::size_t>(h)].values()[idx] = w[static_cast<std::size_t>(h)];
    }
    std::vector<BoxGrid> S(static_cast<std::size_t>(H) + 1);
    for (int h = 1; h <= H; ++h) S[static_cast<std::size_t>(h)] = stencil_step(W[static_cast<std::size_t>(h)]);
    const BoxGrid& out_box = S[1];
    std::vector<BoxGrid> K(static_cast<std::size_t>(H) + 1);
    for (int h = 1; h <= H; ++h) K[static_cast<std::size_t>(h)] = BoxGrid(out_box.dim(), out_box.lo(), out_box.hi());
    for (std::size_t idx = 0; idx < out_box.size(); ++idx) {
        for (int h = 1; h <= H; ++h) a[static_cast<std::size_t>(h)] = S[static_cast<std::size_t>(h)].values()[idx];
        composition_series(comps, c, a, w);
        for (int h = 1; h <= H; ++h) K[static_cast<std::size_t>(h)].values()[idx] = w[static_cast<std::size_t>(h)];
    }
    return K;
}

// Nonlinear source of order h for the Xi engine: coefficient h of
// F(mean_e (exp A' - 1)) where A' agrees with A below order h and has
// A'_h = extra_h (the linear term is accounted for by the convolution).
BoxGrid xi_source(const std::vector<BoxGrid>& A, int h, const BoxGrid& extra_h, std::span<const double> c) {
    const BoxGrid& box = A[1];
    std::vector<double> a(static_cast<std::size_t>(h) + 1, 0.0), w(static_cast<std::size_t>(h) + 1);
    const BoxGrid extra = on_box(extra_h, box);
    // Only the order-h coefficient of exp(A') - 1 is needed per site, but the
    // outer composition needs all orders <= h of the averaged series.
    std::vector<BoxGrid> Wall(static_cast<std::size_t>(h) + 1);
    for (int j = 1; j <= h; ++j) Wall[static_cast<std::size_t>(j)] = BoxGrid(box.dim(), box.lo(), box.hi());
    for (std::size_t idx = 0; idx < box.size(); ++idx) {
        for (int j = 1; j < h; ++j) a[static_cast<std::size_t>(j)] = A[static_cast<std::size_t>(j)].values()[idx];
        a[static_cast<std::size_t>(h)] = extra.values()[idx];
        series_expm1(a, w);
        for (int j = 1; j <= h; ++j) Wall[static_cast<std::size_t>(j)].values()[idx] = w[static_cast<std::size_t>(j)];
    }
    std::vector<BoxGrid> S(static_cast<std::size_t>(h) + 1);
    for (int j = 1; j <= h; ++j) S[static_cast<std::size_t>(j)] = stencil_step(Wall[static_cast<std::size_t>(j)]);
    const BoxGrid& ob = S[1];
    BoxGrid out(ob.dim(), ob.lo(), ob.hi());
    std::vector<double> s(static_cast<std::size_t>(h) + 1, 0.0), r(static_cast<std::size_t>(h) + 1);
    for (std::size_t idx = 0; idx < ob.size(); ++idx) {
        for (int j = 1; j <= h; ++j) s[static_cast<std::size_t>(j)] = S[static_cast<std::size_t>(j)].values()[idx];
        series_compose(c, s, r);
        out.values()[idx] = r[static_cast<std::size_t>(h)];
    }
    return out;
}

std::string law_label(const OffspringLaw& law) { return law.describe(); }

// Gen1 cumulants kappa[h][i], i = 0..n, on boxes psi grown by i.
std::vector<std::vector<BoxGrid>> gen1_direct(const BoxGrid& psi, int H, int n, std::span<const double> c) {
    const int d = psi.dim();
    const CompTable comps = composition_table(H);
    std::vector<std::vector<BoxGrid>> K(static_cast<std::size_t>(H) + 1);
    for (int h = 1; h <= H; ++h) K[static_cast<std::size_t>(h)].push_back(on_box(empty_grid(d), psi));
    for (int i = 0; i < n; ++i) {
        std::vector<BoxGrid> A(static_cast<std::size_t>(H) + 1);
        for (int h = 1; h <= H; ++h) A[static_cast<std::size_t>(h)] = K[static_cast<std::size_t>(h)].back();
        A[1] = add_grids(A[1], psi);
        auto next = direct_step(A, comps, c);
        for (int h = 1; h <= H; ++h) K[static_cast<std::size_t>(h)].push_back(std::move(next[static_cast<std::size_t>(h)]));
    }
    return K;
}

void require_table(const KernelTable* table, int d, int needed, const char* who) {
    if (table == nullptr) throw std::invalid_argument(std::string(who) + ": the Xi engine needs a kernel table");
    if (table->dim() != d) throw std::invalid_argument(std::string(who) + ": kernel table dimension mismatch");
    if (table->n_max() < needed) {
        throw HorizonError(std::string(who) + ": kernel table horizon " + std::to_string(table->n_max()) +
                           " below required " + std::to_string(needed));
    }
}

// sum_{l} c1^l P_l * src[j - l] style accumulation into a target box.
BoxGrid convolve_row(const KernelTable& table, int l, const BoxGrid& f) { return convolve(table.row(l), f); }

std::vector<std::vector<BoxGrid>> gen1_xi(const BoxGrid& psi, int H, int n, std::span<const double> c,
                                          const KernelTable& table) {
    const int d = psi.dim();
    const double c1 = c[1];
    std::vector<std::vector<BoxGrid>> K(static_cast<std::size_t>(H) + 1);
    for (int h = 1; h <= H; ++h) {
        // Sources Xi_j(h), j = 1..n, from lower orders at generation j - 1.
        std::vector<BoxGrid> xi(static_cast<std::size_t>(n) + 1);
        for (int j = 1; j <= n; ++j) {
            std::vector<BoxGrid> A(static_cast<std::size_t>(h) + 1);
            const BoxGrid box = psi.grown(j - 1);
            for (int hp = 1; hp < h; ++hp) A[static_cast<std::size_t>(hp)] = on_box(K[static_cast<std::size_t>(hp)][static_cast<std::size_t>(j - 1)], box);
            if (h == 1) {
                A[1] = on_box(psi, box);
            } else {
                A[1] = add_grids(on_box(A[1], box), psi);
                A[static_cast<std::size_t>(h)] = on_box(empty_grid(d), box);
            }
            if (h == 1) {
                // Xi(1) = c_1 P_1 * psi + (higher c_l contribute only to orders >= 2).
                xi[static_cast<std::size_t>(j)] = convolve_row(table, 1, psi);
                for (double& v : xi[static_cast<std::size_t>(j)].values()) v *= c1;
            } else {
                // The order-h slot of A' holds delta_1(h) psi = 0 for h >= 2.
                xi[static_cast<std::size_t>(j)] = xi_source(A, h, on_box(empty_grid(d), box), c);
            }
        }
        auto& row = K[static_cast<std::size_t>(h)];
        row.push_back(on_box(empty_grid(d), psi));
        for (int i = 1; i <= n; ++i) {
            BoxGrid acc = on_box(empty_grid(d), psi.grown(i));
            double w = 1.0;
            for (int l = 0; l < i; ++l) {
                acc = add_grids(acc, convolve_row(table, l, xi[static_cast<std::size_t>(i - l)]), w);
                w *= c1;
            }
            row.push_back(on_box(acc, psi.grown(i)));
        }
    }
    return K;
}

CumulantTable make_table(const BoxGrid& psi, int H, int n, const OffspringLaw& law, Convention conv) {
    CumulantTable t;
    t.d = psi.dim();
    t.convention = conv;
    t.h_max = H;
    t.n = n;
    t.psi = psi;
    t.law = law_label(law);
    t.truncation_bound = 0.0;
    return t;
}

// kappa^{gen0}_{h,i} = kappa^{gen1}_{h,i-1} + delta_1(h) psi for i >= 1, zero at i = 0.
std::vector<std::vector<BoxGrid>> shift_gen0(const std::vector<std::vector<BoxGrid>>& g1, const BoxGrid& psi, int n) {
    const int H = static_cast<int>(g1.size()) - 1;
    std::vector<std::vector<BoxGrid>> K(static_cast<std::size_t>(H) + 1);
    for (int h = 1; h <= H; ++h) {
        auto& row = K[static_cast<std::size_t>(h)];
        row.push_back(on_box(empty_grid(psi.dim()), psi));
        for (int i = 1; i <= n; ++i) {
            BoxGrid g = g1[static_cast<std::size_t>(h)][static_cast<std::size_t>(i - 1)];
            row.push_back(h == 1 ? add_grids(g, psi) : on_box(g, psi.grown(i - 1)));
        }
    }
    return K;
}

void check_psi(const BoxGrid& psi, const char* who) {
    if (psi.empty()) throw std::invalid_argument(std::string(who) + ": psi must live on a non-empty box");
}

}  // namespace

std::vector<std::vector<int>> compositions(int h, int m) {
    std::vector<std::vector<int>> out;
    if (m < 1 || h < m) return out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int left, int parts) -> void {
        if (parts == 1) {
            cur.push_back(left);
            out.push_back(cur);
            cur.pop_back();
            return;
        }
        for (int first = 1; first <= left - (parts - 1); ++first) {
            cur.push_back(first);
            self(self, left - first, parts - 1);
            cur.pop_back();
        }
    };
    rec(rec, h, m);
    return out;
}

BoxGrid convolve(const BoxGrid& f, const BoxGrid& g) {
    const int d = f.dim();
    if (f.empty() || g.empty()) return empty_grid(d);
    Site lo = add(f.lo(), g.lo()), hi = add(f.hi(), g.hi());
    BoxGrid out(d, lo, hi);
    const auto fv = f.values();
    const int g0 = g.extent(0), g1 = g.extent(1), g2 = g.extent(2);
    const auto gv = g.values();
    for (std::size_t i = 0; i < fv.size(); ++i) {
        const double a = fv[i];
        if (a == 0.0) continue;
        const Site z = f.site_at(i);
        for (int p = 0; p < g0; ++p) {
            for (int q = 0; q < g1; ++q) {
                const Site gs{g.lo()[0] + p, g.lo()[1] + q, g.lo()[2]};
                const double* src = gv.data() + g.index(gs);
                double* dst = out.values().data() + out.index(add(z, gs));
                for (int r = 0; r < g2; ++r) dst[r] += a * src[r];
            }
        }
    }
    return out;
}

double CumulantTable::pair_nu(const LatticeField& mu, int i) const {
    double s = 0.0;
    for (const auto& [key, count] : mu) s += static_cast<double>(count) * nu_at(i, site_key::unpack(key));
    return s;
}

double CumulantTable::pair_kappa(const LatticeField& mu, int h, int i) const {
    double s = 0.0;
    for (const auto& [key, count] : mu) s += static_cast<double>(count) * kappa_at(h, i, site_key::unpack(key));
    return s;
}

std::string to_json(const CumulantTable& t) {
    using nlohmann::json;
    auto grid = [](const BoxGrid& g) {
        json j;
        j["lo"] = std::vector<int>(g.lo().begin(), g.lo().end());
        std::vector<int> ext;
        for (int a = 0; a < 3; ++a) ext.push_back(g.empty() ? 0 : g.extent(a));
        j["extent"] = ext;
        j["values"] = std::vector<double>(g.values().begin(), g.values().end());
        return j;
    };
    json j;
    j["schema"] = "sirlt.cumulant_table/1";
    j["d"] = t.d;
    j["convention"] = convention_name(t.convention);
    j["h_max"] = t.h_max;
    j["n"] = t.n;
    j["window"] = t.window;
    j["law"] = t.law;
    j["truncation_bound"] = t.truncation_bound;
    j["psi"] = grid(t.psi);
    j["nu"] = json::array();
    for (const auto& g : t.nu) j["nu"].push_back(grid(g));
    j["kappa"] = json::array();
    for (int h = 1; h <= t.h_max && h < static_cast<int>(t.kappa.size()); ++h) {
        for (std::size_t i = 0; i < t.kappa[static_cast<std::size_t>(h)].size(); ++i) {
            json e = grid(t.kappa[static_cast<std::size_t>(h)][i]);
            e["h"] = h;
            e["i"] = i;
            j["kappa"].push_back(e);
        }
    }
    return j.dump();
}

std::pair<BoxGrid, BoxGrid> mean_fields(const LatticeField& mu, const KernelTable& table, int n) {
    if (n < 0) throw std::invalid_argument("mean_fields: n must be >= 0");
    if (n > table.n_max()) throw HorizonError("mean_fields: n exceeds kernel horizon");
    const int d = table.dim();
    if (mu.empty()) return {empty_grid(d), empty_grid(d)};
    BoxGrid m(d, mu.bounding_box().lo(), mu.bounding_box().hi());
    for (const auto& [key, count] : mu) m[site_key::unpack(key)] += static_cast<double>(count);
    BoxGrid ex = convolve(m, table.row(n));
    BoxGrid er = n == 0 ? empty_grid(d) : convolve(m, table.green(n));
    return {std::move(ex), std::move(er)};
}

double second_moment(const Site& x, int n, const OffspringLaw& law, const KernelTable& table) {
    if (n < 0) throw std::invalid_argument("second_moment: n must be >= 0");
    if (n > table.n_max()) throw HorizonError("second_moment: n exceeds kernel horizon");
    const int d = table.dim();
    const double mean = law.mean();
    const double cd = law.factorial_same(d);
    const double co = law.factorial_cross(d);
    const double t = 2.0 * d + 1.0;
    const auto mv = moves(d);
    CompensatedSum acc;
    acc.add(std::pow(mean, n) * table.p(n, x));
    for (int i = 0; i < n; ++i) {
        const int r = n - i - 1;
        const BoxGrid& pi = table.row(i);
        const double growth = std::pow(mean, i) * std::pow(mean, 2 * r);
        for (std::size_t idx = 0; idx < pi.size(); ++idx) {
            const double pz = pi.values()[idx];
            if (pz == 0.0) continue;
            const Site w = sub(x, pi.site_at(idx));
            const double pr1 = table.p(r + 1, w);
            double sq = 0.0;
            for (const Site& e : mv) {
                const double v = table.p(r, sub(w, e));
                sq += v * v;
            }
            const double pair = co * (t * pr1) * (t * pr1) + (cd - co) * sq;
            if (pair != 0.0) acc.add(growth * pz * pair);
        }
    }
    return acc.value();
}

CumulantTable nu_recursion(const BoxGrid& psi, int n, const OffspringLaw& law, Convention convention, double ceiling) {
    check_psi(psi, "nu_recursion");
    require_iid(law, "nu_recursion");
    if (n < 0) throw std::invalid_argument("nu_recursion: n must be >= 0");
    const ShiftedLogPgf f(law);
    CumulantTable t = make_table(psi, 0, n, law, convention);
    std::vector<BoxGrid> g1{on_box(empty_grid(psi.dim()), psi)};
    const int steps = convention == Convention::Gen1ToN ? n : std::max(n - 1, 0);
    for (int i = 0; i < steps; ++i) g1.push_back(nu_step(g1.back(), psi, f, ceiling));
    if (convention == Convention::Gen1ToN) {
        t.nu = std::move(g1);
    } else {
        t.nu.push_back(on_box(empty_grid(psi.dim()), psi));
        for (int i = 1; i <= n; ++i) t.nu.push_back(add_grids(g1[static_cast<std::size_t>(i - 1)], psi));
    }
    return t;
}

CumulantTable cumulant_recursion(const BoxGrid& psi, int h_max, int n, const OffspringLaw& law, Convention convention,
                                 CumulantEngine engine, const KernelTable* table) {
    check_psi(psi, "cumulant_recursion");
    require_iid(law, "cumulant_recursion");
    if (h_max < 1) throw std::invalid_argument("cumulant_recursion: h_max must be >= 1");
    if (h_max > 12) throw std::invalid_argument("cumulant_recursion: h_max above 12 is not supported");
    if (n < 0) throw std::invalid_argument("cumulant_recursion: n must be >= 0");
    const auto c = law.log_pgf_series(h_max);
    CumulantTable t = make_table(psi, h_max, n, law, convention);
    const int n1 = convention == Convention::Gen1ToN ? n : std::max(n - 1, 0);
    std::vector<std::vector<BoxGrid>> g1;
    if (engine == CumulantEngine::Direct) {
        g1 = gen1_direct(psi, h_max, n1, c);
    } else {
        require_table(table, psi.dim(), std::max(n1 - 1, 1), "cumulant_recursion");
        g1 = gen1_xi(psi, h_max, n1, c, *table);
    }
    t.kappa = convention == Convention::Gen1ToN ? std::move(g1) : shift_gen0(g1, psi, n);
    return t;
}

CumulantTable cumulant_time_increment(const BoxGrid& psi, int n, int m, int h_max, const OffspringLaw& law,
                                      CumulantEngine engine, const KernelTable* table, double ceiling) {
    check_psi(psi, "cumulant_time_increment");
    require_iid(law, "cumulant_time_increment");
    if (n < 0 || m < 0) throw std::invalid_argument("cumulant_time_increment: n and m must be >= 0");
    const int d = psi.dim();
    // Window base (m = 0): cumulants and nu of <R_n, psi>.
    CumulantTable base = cumulant_recursion(psi, h_max, n, law, Convention::Gen0ToNMinus1, engine, table);
    CumulantTable nub = nu_recursion(psi, n, law, Convention::Gen0ToNMinus1, ceiling);
    const auto c = law.log_pgf_series(h_max);
    const ShiftedLogPgf f(law);

    CumulantTable t = make_table(psi, h_max, m, law, Convention::Gen0ToNMinus1);
    t.window = n;
    t.nu.push_back(nub.nu.back());
    for (int j = 0; j < m; ++j) t.nu.push_back(nu_step(t.nu.back(), BoxGrid(), f, ceiling));

    t.kappa.assign(static_cast<std::size_t>(h_max) + 1, {});
    for (int h = 1; h <= h_max; ++h) t.kappa[static_cast<std::size_t>(h)].push_back(base.kappa[static_cast<std::size_t>(h)].back());
    if (m == 0) return t;
    BoxGrid base_box = t.kappa[1][0];
    if (base_box.empty()) base_box = on_box(empty_grid(d), psi);

    if (engine == CumulantEngine::Direct) {
        const CompTable comps = composition_table(h_max);
        for (int j = 0; j < m; ++j) {
            std::vector<BoxGrid> A(static_cast<std::size_t>(h_max) + 1);
            const BoxGrid box = base_box.grown(j);
            for (int h = 1; h <= h_max; ++h) A[static_cast<std::size_t>(h)] = on_box(t.kappa[static_cast<std::size_t>(h)].back(), box);
            auto next = direct_step(A, comps, c);
            for (int h = 1; h <= h_max; ++h) t.kappa[static_cast<std::size_t>(h)].push_back(std::move(next[static_cast<std::size_t>(h)]));
        }
        return t;
    }

    require_table(table, d, m, "cumulant_time_increment");
    const double c1 = c[1];
    for (int h = 1; h <= h_max; ++h) {
        // Xi~_{n,j}(h), j = 1..m, from lower orders at offset j - 1.
        std::vector<BoxGrid> xi(static_cast<std::size_t>(m) + 1);
        if (h >= 2) {
            for (int j = 1; j <= m; ++j) {
                const BoxGrid box = base_box.grown(j - 1);
                std::vector<BoxGrid> A(static_cast<std::size_t>(h) + 1);
                for (int hp = 1; hp < h; ++hp) A[static_cast<std::size_t>(hp)] = on_box(t.kappa[static_cast<std::size_t>(hp)][static_cast<std::size_t>(j - 1)], box);
                A[static_cast<std::size_t>(h)] = on_box(empty_grid(d), box);
                xi[static_cast<std::size_t>(j)] = xi_source(A, h, on_box(empty_grid(d), box), c);
            }
        }
        auto& row = t.kappa[static_cast<std::size_t>(h)];
        const BoxGrid k0 = row[0];
        for (int mm = 1; mm <= m; ++mm) {
            const BoxGrid box = base_box.grown(mm);
            BoxGrid acc = convolve_row(*table, mm, on_box(k0, base_box));
            for (double& v : acc.values()) v *= std::pow(c1, mm);
            acc = on_box(acc, box);
            if (h >= 2) {
                double w = 1.0;
                for (int i = 0; i < mm; ++i) {
                    acc = add_grids(acc, convolve_row(*table, i, xi[static_cast<std::size_t>(mm - i)]), w);
                    w *= c1;
                }
            }
            row.push_back(on_box(acc, box));
        }
    }
    return t;
}

double brute_force_mgf(const BoxGrid& psi, int n, const OffspringLaw& law, const LatticeField& mu, std::size_t budget) {
    if (law.kind() != OffspringLaw::Kind::Custom) {
        throw std::invalid_argument("brute_force_mgf: needs a custom law with finite support");
    }
    if (n < 0) throw std::invalid_argument("brute_force_mgf: n must be >= 0");
    const int d = mu.dim();
    const auto mv = moves(d);
    const double place = 1.0 / static_cast<double>(mv.size());
    const auto& q = law.pmf();

    // Ancestors reproduce independently, so the expectation factorises over
    // the particles of mu. For one ancestor the value is a sum over every
    // outcome of its first generation (offspring count j and an ordered
    // placement of each child), each child then carrying the value of its own
    // subtree one generation shorter. Subtree values are memoised per site.
    std::size_t outcomes = 0;
    std::vector<std::map<std::uint64_t, double>> memo(static_cast<std::size_t>(n) + 1);
    std::function<double(std::uint64_t, int)> subtree = [&](std::uint64_t key, int left) -> double {
        if (left == 0) return 1.0;
        auto& cache = memo[static_cast<std::size_t>(left)];
        if (auto it = cache.find(key); it != cache.end()) return it->second;
        const Site x = site_key::unpack(key);
        std::vector<double> child(mv.size());
        for (std::size_t e = 0; e < mv.size(); ++e) {
            const Site y = add(x, mv[e]);
            child[e] = std::exp(psi.value(y)) * subtree(site_key::pack(y), left - 1);
        }
        CompensatedSum total;
        for (std::size_t j = 0; j < q.size(); ++j) {
            if (q[j] == 0.0) continue;
            const double w = q[j] * std::pow(place, static_cast<double>(j));
            std::vector<std::size_t> idx(j, 0);
            for (;;) {
                if (++outcomes > budget) throw CapacityError("brute_force_mgf: enumeration budget exceeded");
                double v = w;
                for (std::size_t c : idx) v *= child[c];
                total.add(v);
                std::size_t p = 0;
                while (p < j && ++idx[p] == mv.size()) idx[p++] = 0;
                if (p == j) break;
            }
        }
        cache.emplace(key, total.value());
        return total.value();
    };
    double out = 1.0;
    for (const auto& [key, count] : mu) out *= std::pow(subtree(key, n), static_cast<double>(count));
    return out;
}

}  // namespace sirlt
