#include "sirlt/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace sirlt {

namespace {

struct NameEntry {
    BoundId id;
    const char* name;
};

constexpr NameEntry kNames[] = {
    {BoundId::LcltBd, "lclt_bd"},         {BoundId::DisConv, "dis_conv"},
    {BoundId::GreenBd, "green_bd"},       {BoundId::PDiff, "p_diff"},
    {BoundId::PDiffAlpha, "p_diff_alpha"}, {BoundId::GreenIndc, "green_indc"},
    {BoundId::Conv, "conv"},              {BoundId::GreenIndcB, "green_indc_B"},
    {BoundId::ConvB, "conv_B"},           {BoundId::FgCentral, "fg_central"},
};

std::string site_str(const Site& s, int d) {
    std::ostringstream os;
    os << '(' << s[0] << ',' << s[1];
    if (d == 3) os << ',' << s[2];
    os << ')';
    return os.str();
}

template <class Fn>
void for_box(int d, int r, Fn&& fn) {
    const int rz = d == 3 ? r : 0;
    for (int a = -r; a <= r; ++a)
        for (int b = -r; b <= r; ++b)
            for (int c = -rz; c <= rz; ++c) fn(Site{a, b, c});
}

std::vector<Site> ball_offsets(int d, int h) {
    std::vector<Site> out;
    for_box(d, h, [&](const Site& s) {
        if (norm2(s) < 1LL * h * h) out.push_back(s);
    });
    return out;
}

double euclid(const Site& s) { return std::sqrt(static_cast<double>(norm2(s))); }

// Running maximum of LHS/RHS with witnesses. Points with LHS = RHS = 0 are
// skipped; RHS = 0 < LHS is recorded separately.
struct Tracker {
    double best = 0.0;
    bool any = false;
    std::string witness;
    bool zero = false;
    std::string zero_witness;
    std::size_t count = 0;

    template <class W>
    void add(double lhs, double rhs, W&& where) {
        ++count;
        if (rhs <= 0.0) {
            if (lhs > 0.0 && !zero) {
                zero = true;
                zero_witness = where();
            }
            return;
        }
        const double r = lhs / rhs;
        if (!any || r > best) {
            best = r;
            any = true;
            witness = where();
        }
    }
};

void check_params(BoundId id, const BoundParams& p) {
    check_dimension(p.d);
    if (!(p.beta > 0.0)) throw std::invalid_argument("verify_bounds: beta must be positive");
    const bool needs_small_beta =
        id == BoundId::LcltBd || id == BoundId::DisConv || id == BoundId::GreenBd || id == BoundId::PDiff ||
        id == BoundId::PDiffAlpha;
    if (needs_small_beta && !(p.beta < 1.0 / std::sqrt(static_cast<double>(p.d)))) {
        throw std::invalid_argument("verify_bounds: beta must lie below 1/sqrt(d) for " + bound_id_name(id));
    }
    if (id == BoundId::GreenIndc || id == BoundId::Conv || id == BoundId::PDiffAlpha) {
        const double hi = id == BoundId::PDiffAlpha ? 1.0 : 2.0 - p.d / 2.0;
        if (!(p.gamma > 0.0 && p.gamma <= hi && (id == BoundId::PDiffAlpha || p.gamma < hi))) {
            throw std::invalid_argument("verify_bounds: gamma outside its admissible range for " + bound_id_name(id));
        }
    }
    if (p.radius < 0 || p.offset < 0) throw std::invalid_argument("verify_bounds: negative scan radius");
    for (auto [a, b] : p.h_pairs)
        if (a < 1 || b < 1) throw std::invalid_argument("verify_bounds: h must be >= 1");
}

int max_of(const std::vector<int>& v) { return v.empty() ? 0 : *std::max_element(v.begin(), v.end()); }

int max_h(const BoundParams& p) {
    int h = 1;
    for (auto [a, b] : p.h_pairs) h = std::max({h, a, b, a + b - 1});
    return h;
}

// S(z) = sum_{l in [lo, hi)} w(l) phi_l(scale z) on the box of radius r,
// and its ball sums B_h(z) = sum_{|rho| < h} S(z + rho).
BoxGrid ball_sum(const BoxGrid& s, int h, int r) {
    BoxGrid out = BoxGrid::centered(s.dim(), r);
    const auto rho = ball_offsets(s.dim(), h);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Site z = out.site_at(i);
        double acc = 0.0;
        for (const Site& q : rho) acc += s.value(add(z, q));
        out.values()[i] = acc;
    }
    return out;
}

void add_phi(BoxGrid& s, int d, int l, double weight, double scale) {
    for (std::size_t i = 0; i < s.size(); ++i) s.values()[i] += weight * gauss_phi(d, l, s.site_at(i), scale);
}

// (P_i * H)(x) evaluated only at sites of `out`.
void accumulate_conv(BoxGrid& out, const BoxGrid& p, const BoxGrid& h) {
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Site x = out.site_at(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double w = p.values()[j];
            if (w != 0.0) acc += w * h.value(sub(x, p.site_at(j)));
        }
        out.values()[i] += acc;
    }
}

BoundReport finish(BoundId id, const BoundParams& p, const Tracker& t, int horizon) {
    BoundReport r;
    r.id = id;
    r.params = p;
    r.constant = t.best;
    r.witness = t.witness;
    r.zero_rhs = t.zero;
    r.zero_rhs_witness = t.zero_witness;
    r.evaluated = t.count;
    r.kernel_horizon = horizon;
    if (id == BoundId::FgCentral) {
        r.pass = !t.zero && t.best <= 1.0 + 1e-12;
    } else {
        r.pass = !t.zero && t.any && r.constant <= p.ceiling;
    }
    return r;
}

BoundReport scan_lclt(const BoundParams& p, const KernelTable& tb) {
    Tracker t;
    for (int n : p.n_ladder) {
        if (n < 1) throw std::invalid_argument("lclt_bd: n must be >= 1");
        for_box(p.d, std::min(p.radius, n), [&](const Site& x) {
            t.add(tb.p(n, x), gauss_phi(p.d, n, x, p.beta),
                  [&] { return "n=" + std::to_string(n) + " x=" + site_str(x, p.d); });
        });
    }
    return finish(BoundId::LcltBd, p, t, max_of(p.n_ladder));
}

BoundReport scan_dis_conv(const BoundParams& p, const KernelTable& tb) {
    Tracker t;
    for (int m : p.m_ladder) {
        const BoxGrid& row = tb.row(m);
        for (int n : p.n_ladder) {
            if (m < 1 || n < 1) throw std::invalid_argument("dis_conv: m, n must be >= 1");
            for_box(p.d, p.radius, [&](const Site& x) {
                double lhs = 0.0;
                for (std::size_t j = 0; j < row.size(); ++j)
                    lhs += row.values()[j] * gauss_phi(p.d, n, sub(x, row.site_at(j)), p.beta);
                t.add(lhs, gauss_phi(p.d, m + n, x, p.beta / 2.0), [&] {
                    return "m=" + std::to_string(m) + " n=" + std::to_string(n) + " x=" + site_str(x, p.d);
                });
            });
        }
    }
    return finish(BoundId::DisConv, p, t, max_of(p.m_ladder));
}

BoundReport scan_green_bd(const BoundParams& p) {
    Tracker t;
    for (int k : p.k_ladder) {
        const int nmax = static_cast<int>(std::floor(k * p.horizon_t + 1e-9));
        const double rad = p.radius_a * std::sqrt(static_cast<double>(k));
        const int window = static_cast<int>(std::floor(rad + 1e-9));
        KernelStepper st(WalkSpec(p.d), window, nmax + 1);
        BoxGrid lhs = BoxGrid::centered(p.d, window), rhs = BoxGrid::centered(p.d, window);
        for (int n = 1; n <= nmax; ++n) {
            st.advance();
            for (std::size_t i = 0; i < lhs.size(); ++i) {
                const Site x = lhs.site_at(i);
                lhs.values()[i] += gauss_phi(p.d, n, x, p.beta);
                rhs.values()[i] += st.current().value(x);
            }
        }
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            const Site x = lhs.site_at(i);
            if (euclid(x) > rad + 1e-12) continue;
            t.add(lhs.values()[i], rhs.values()[i],
                  [&] { return "k=" + std::to_string(k) + " x=" + site_str(x, p.d); });
        }
    }
    return finish(BoundId::GreenBd, p, t, 0);
}

BoundReport scan_p_diff(BoundId id, const BoundParams& p, const KernelTable& tb) {
    Tracker t;
    for (int n : p.n_ladder) {
        if (n < 1) throw std::invalid_argument("p_diff: n must be >= 1");
        const double sn = std::sqrt(static_cast<double>(n));
        for_box(p.d, p.radius, [&](const Site& x) {
            const double px = tb.p(n, x);
            const double fx = gauss_phi(p.d, n, x, p.beta);
            for_box(p.d, p.offset, [&](const Site& v) {
                if (norm2(v) == 0) return;
                const Site y = add(x, v);
                const double u = euclid(v) / sn;
                const double w = id == BoundId::PDiff ? std::min(u, 1.0) : std::pow(u, p.gamma);
                t.add(std::abs(px - tb.p(n, y)), w * (fx + gauss_phi(p.d, n, y, p.beta)), [&] {
                    return "n=" + std::to_string(n) + " x=" + site_str(x, p.d) + " y=" + site_str(y, p.d);
                });
            });
        });
    }
    return finish(id, p, t, max_of(p.n_ladder));
}

// Ball sums of S_j = sum_{l=1}^{j-1} l^{-gamma/2} phi_l(beta z), j = 1..n,
// for every h in 1..H, on the box of radius r.
std::vector<std::vector<BoxGrid>> f_ball_sums(const BoundParams& p, int n, int r, int H, double beta) {
    BoxGrid s = BoxGrid::centered(p.d, r + H);
    std::vector<std::vector<BoxGrid>> out(static_cast<std::size_t>(n) + 1);
    for (int j = 1; j <= n; ++j) {
        if (j >= 2) add_phi(s, p.d, j - 1, std::pow(static_cast<double>(j - 1), -p.gamma / 2.0), beta);
        out[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(H) + 1);
        for (int h = 1; h <= H; ++h) out[static_cast<std::size_t>(j)][static_cast<std::size_t>(h)] = ball_sum(s, h, r);
    }
    return out;
}

BoundReport scan_green_indc(const BoundParams& p) {
    Tracker t;
    const int H = max_h(p);
    for (int n : p.n_ladder) {
        if (n < 2) continue;  // F_{1,h} is an empty sum
        const double scale = std::pow(static_cast<double>(n), 2.0 - (p.d + p.gamma) / 2.0);
        const auto B = f_ball_sums(p, n, p.radius + p.offset, H, p.beta);
        const auto& Bn = B[static_cast<std::size_t>(n)];
        for_box(p.d, p.radius, [&](const Site& x) {
            for_box(p.d, p.offset, [&](const Site& v) {
                const Site y = add(x, v);
                for (auto [h1, h2] : p.h_pairs) {
                    auto F = [&](int h) { return Bn[static_cast<std::size_t>(h)][x] + Bn[static_cast<std::size_t>(h)][y]; };
                    t.add(F(h1) * F(h2), scale * F(h1 + h2 - 1), [&] {
                        return "n=" + std::to_string(n) + " h=(" + std::to_string(h1) + "," + std::to_string(h2) +
                               ") x=" + site_str(x, p.d) + " y=" + site_str(y, p.d);
                    });
                }
            });
        });
    }
    return finish(BoundId::GreenIndc, p, t, 0);
}

BoundReport scan_conv(const BoundParams& p, const KernelTable& tb) {
    Tracker t;
    const int H = max_h(p);
    for (int n : p.n_ladder) {
        if (n < 2) continue;
        const double scale = std::pow(static_cast<double>(n), 2.0 - (p.d + p.gamma) / 2.0);
        // B for windows j = n - i up to n, on the box reached by x - z + v.
        const int r = p.radius + n + p.offset;
        const auto B = f_ball_sums(p, n, r, H, p.beta);
        const auto Bhalf = f_ball_sums(p, n, p.radius + p.offset, H, p.beta / 2.0);
        for_box(p.d, p.offset, [&](const Site& v) {
            for (auto [h1, h2] : p.h_pairs) {
                BoxGrid lhs = BoxGrid::centered(p.d, p.radius);
                for (int i = 0; i < n; ++i) {
                    const int j = n - i;
                    if (j < 2) continue;
                    const auto& Bj = B[static_cast<std::size_t>(j)];
                    BoxGrid h = BoxGrid::centered(p.d, p.radius + i);
                    for (std::size_t q = 0; q < h.size(); ++q) {
                        const Site u = h.site_at(q);
                        const Site w = add(u, v);
                        const double f1 = Bj[static_cast<std::size_t>(h1)][u] + Bj[static_cast<std::size_t>(h1)][w];
                        const double f2 = Bj[static_cast<std::size_t>(h2)][u] + Bj[static_cast<std::size_t>(h2)][w];
                        h.values()[q] = f1 * f2;
                    }
                    accumulate_conv(lhs, tb.row(i), h);
                }
                const auto& Bh = Bhalf[static_cast<std::size_t>(n)][static_cast<std::size_t>(h1 + h2 - 1)];
                for (std::size_t q = 0; q < lhs.size(); ++q) {
                    const Site x = lhs.site_at(q);
                    const Site y = add(x, v);
                    t.add(lhs.values()[q], scale * (Bh[x] + Bh[y]), [&] {
                        return "n=" + std::to_string(n) + " h=(" + std::to_string(h1) + "," + std::to_string(h2) +
                               ") x=" + site_str(x, p.d) + " y=" + site_str(y, p.d);
                    });
                }
            }
        });
    }
    return finish(BoundId::Conv, p, t, std::max(max_of(p.n_ladder) - 1, 0));
}

// Ball sums of SJ_j = sum_{l=m}^{m+j-1} phi_l(beta z), j = 0..n.
std::vector<std::vector<BoxGrid>> j_ball_sums(const BoundParams& p, int m, int n, int r, int H, double beta) {
    BoxGrid s = BoxGrid::centered(p.d, r + H);
    std::vector<std::vector<BoxGrid>> out(static_cast<std::size_t>(n) + 1);
    for (int j = 1; j <= n; ++j) {
        add_phi(s, p.d, m + j - 1, 1.0, beta);
        out[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(H) + 1);
        for (int h = 1; h <= H; ++h) out[static_cast<std::size_t>(j)][static_cast<std::size_t>(h)] = ball_sum(s, h, r);
    }
    return out;
}

BoundReport scan_green_indc_b(const BoundParams& p) {
    Tracker t;
    const int H = max_h(p);
    for (int m : p.m_ladder) {
        if (m < 1) throw std::invalid_argument("green_indc_B: m must be >= 1");
        for (int n : p.n_ladder) {
            if (n < 1) continue;
            const double scale = std::pow(static_cast<double>(n), 2.0 - p.d / 2.0);
            const auto B = j_ball_sums(p, m, n, p.radius, H, p.beta);
            const auto& Bn = B[static_cast<std::size_t>(n)];
            for_box(p.d, p.radius, [&](const Site& x) {
                for (auto [h1, h2] : p.h_pairs) {
                    auto J = [&](int h) { return Bn[static_cast<std::size_t>(h)][x]; };
                    t.add(J(h1) * J(h2), scale * J(h1 + h2 - 1), [&] {
                        return "m=" + std::to_string(m) + " n=" + std::to_string(n) + " h=(" + std::to_string(h1) +
                               "," + std::to_string(h2) + ") x=" + site_str(x, p.d);
                    });
                }
            });
        }
    }
    return finish(BoundId::GreenIndcB, p, t, 0);
}

BoundReport scan_conv_b(const BoundParams& p, const KernelTable& tb) {
    Tracker t;
    const int H = max_h(p);
    for (int m : p.m_ladder) {
        if (m < 1) throw std::invalid_argument("conv_B: m must be >= 1");
        for (int n : p.n_ladder) {
            if (n < 1) continue;
            const double scale = std::pow(static_cast<double>(n), 2.0 - p.d / 2.0);
            const auto B = j_ball_sums(p, m, n, p.radius + n, H, p.beta);
            const auto Bhalf = j_ball_sums(p, m, n, p.radius, H, p.beta / 2.0);
            for (auto [h1, h2] : p.h_pairs) {
                BoxGrid lhs = BoxGrid::centered(p.d, p.radius);
                for (int i = 0; i < n; ++i) {
                    const auto& Bj = B[static_cast<std::size_t>(n - i)];
                    BoxGrid h = BoxGrid::centered(p.d, p.radius + i);
                    for (std::size_t q = 0; q < h.size(); ++q) {
                        const Site u = h.site_at(q);
                        h.values()[q] = Bj[static_cast<std::size_t>(h1)][u] * Bj[static_cast<std::size_t>(h2)][u];
                    }
                    accumulate_conv(lhs, tb.row(i), h);
                }
                const auto& Bh = Bhalf[static_cast<std::size_t>(n)][static_cast<std::size_t>(h1 + h2 - 1)];
                for (std::size_t q = 0; q < lhs.size(); ++q) {
                    const Site x = lhs.site_at(q);
                    t.add(lhs.values()[q], scale * Bh[x], [&] {
                        return "m=" + std::to_string(m) + " n=" + std::to_string(n) + " h=(" + std::to_string(h1) +
                               "," + std::to_string(h2) + ") x=" + site_str(x, p.d);
                    });
                }
            }
        }
    }
    return finish(BoundId::ConvB, p, t, std::max(max_of(p.n_ladder) - 1, 0));
}

struct RadialPair {
    std::string name;
    int support;  // f vanishes for |y|_inf > support
    std::function<double(double)> f, g;  // functions of |y|
};

std::vector<RadialPair> radial_pairs() {
    return {
        {"point_point", 0, [](double r) { return r == 0.0 ? 1.0 : 0.0; }, [](double r) { return r == 0.0 ? 1.0 : 0.0; }},
        {"disc3_gauss", 3, [](double r) { return r <= 3.0 ? 1.0 : 0.0; },
         [](double r) { return std::exp(-0.16 * r * r / 8.0); }},
        {"cap_cauchy", 4, [](double r) { return std::max(16.0 - r * r, 0.0); }, [](double r) { return 1.0 / (1.0 + r * r); }},
        {"disc2_disc5", 2, [](double r) { return r <= 2.0 ? 1.0 : 0.0; }, [](double r) { return r <= 5.0 ? 1.0 : 0.0; }},
        {"exp_gauss", 4, [](double r) { return r <= 4.0 ? std::exp(-r) : 0.0; },
         [](double r) { return std::exp(-r * r / 8.0); }},
    };
}

BoundReport scan_fg_central(const BoundParams& p) {
    Tracker t;
    for (const RadialPair& pr : radial_pairs()) {
        double rhs = 0.0;
        std::vector<std::pair<Site, double>> fsup;
        for_box(p.d, pr.support, [&](const Site& y) {
            const double fy = pr.f(euclid(y));
            if (fy > 0.0) {
                fsup.emplace_back(y, fy);
                rhs += fy * pr.g(euclid(y));
            }
        });
        for_box(p.d, p.radius, [&](const Site& x) {
            double lhs = 0.0;
            for (const auto& [y, fy] : fsup) lhs += fy * pr.g(euclid(sub(x, y)));
            t.add(lhs, rhs, [&] { return pr.name + " x=" + site_str(x, p.d); });
        });
    }
    return finish(BoundId::FgCentral, p, t, 0);
}

}  // namespace

BoundId parse_bound_id(const std::string& name) {
    for (const auto& e : kNames)
        if (name == e.name) return e.id;
    throw std::invalid_argument("unknown inequality '" + name + "'");
}

std::string bound_id_name(BoundId id) {
    for (const auto& e : kNames)
        if (e.id == id) return e.name;
    return "?";
}

std::vector<BoundId> all_bound_ids() {
    std::vector<BoundId> v;
    for (const auto& e : kNames) v.push_back(e.id);
    return v;
}

BoundParams standard_bound_params(BoundId id, int d) {
    check_dimension(d);
    BoundParams p;
    p.d = d;
    const bool two = d == 2;
    switch (id) {
        case BoundId::LcltBd:
        case BoundId::PDiff:
        case BoundId::PDiffAlpha:
            p.n_ladder = two ? std::vector<int>{1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128}
                             : std::vector<int>{1, 2, 3, 4, 6, 8, 12, 16, 24, 32};
            p.radius = two ? 24 : 12;
            p.offset = 2;
            if (id != BoundId::LcltBd) p.radius = two ? 16 : 8;
            break;
        case BoundId::DisConv:
            p.m_ladder = two ? std::vector<int>{1, 2, 4, 8, 16, 32} : std::vector<int>{1, 2, 4, 8};
            p.n_ladder = p.m_ladder;
            p.radius = two ? 12 : 5;
            break;
        case BoundId::GreenBd:
            p.k_ladder = two ? std::vector<int>{25, 100, 400} : std::vector<int>{16, 64, 144};
            p.horizon_t = 1.0;
            p.radius_a = 1.0;
            break;
        case BoundId::GreenIndc:
            p.n_ladder = two ? std::vector<int>{2, 4, 8, 16, 32, 64} : std::vector<int>{2, 4, 8, 16, 32};
            p.radius = two ? 12 : 6;
            p.offset = 2;
            break;
        case BoundId::Conv:
            p.n_ladder = two ? std::vector<int>{2, 4, 8, 16, 32} : std::vector<int>{2, 4, 8};
            p.radius = two ? 8 : 4;
            p.offset = 1;
            break;
        case BoundId::GreenIndcB:
            p.m_ladder = {1, 4, 16};
            p.n_ladder = two ? std::vector<int>{1, 2, 4, 8, 16, 32, 64} : std::vector<int>{1, 2, 4, 8, 16, 32};
            p.radius = two ? 12 : 6;
            break;
        case BoundId::ConvB:
            p.m_ladder = {1, 4, 16};
            p.n_ladder = two ? std::vector<int>{1, 2, 4, 8, 16, 32} : std::vector<int>{1, 2, 4, 8};
            p.radius = two ? 8 : 4;
            break;
        case BoundId::FgCentral:
            p.radius = two ? 10 : 6;
            break;
    }
    return p;
}

int bound_kernel_horizon(BoundId id, const BoundParams& p) {
    switch (id) {
        case BoundId::LcltBd:
        case BoundId::PDiff:
        case BoundId::PDiffAlpha: return max_of(p.n_ladder);
        case BoundId::DisConv: return max_of(p.m_ladder);
        case BoundId::Conv:
        case BoundId::ConvB: return std::max(max_of(p.n_ladder) - 1, 0);
        default: return 0;
    }
}

BoundReport verify_bounds(BoundId id, const BoundParams& p, const KernelTable& table) {
    check_params(id, p);
    if (table.dim() != p.d) throw std::invalid_argument("verify_bounds: kernel table dimension mismatch");
    if (table.n_max() < bound_kernel_horizon(id, p)) {
        throw HorizonError("verify_bounds: kernel table horizon " + std::to_string(table.n_max()) + " below " +
                           std::to_string(bound_kernel_horizon(id, p)));
    }
    switch (id) {
        case BoundId::LcltBd: return scan_lclt(p, table);
        case BoundId::DisConv: return scan_dis_conv(p, table);
        case BoundId::GreenBd: return scan_green_bd(p);
        case BoundId::PDiff:
        case BoundId::PDiffAlpha: return scan_p_diff(id, p, table);
        case BoundId::GreenIndc: return scan_green_indc(p);
        case BoundId::Conv: return scan_conv(p, table);
        case BoundId::GreenIndcB: return scan_green_indc_b(p);
        case BoundId::ConvB: return scan_conv_b(p, table);
        case BoundId::FgCentral: return scan_fg_central(p);
    }
    throw std::logic_error("verify_bounds: unhandled inequality");
}

std::string to_json(const BoundReport& r) {
    nlohmann::ordered_json j;
    j["schema"] = "sirlt.bound_report/1";
    j["inequality"] = bound_id_name(r.id);
    j["d"] = r.params.d;
    j["beta"] = r.params.beta;
    j["gamma"] = r.params.gamma;
    j["n_ladder"] = r.params.n_ladder;
    j["m_ladder"] = r.params.m_ladder;
    j["k_ladder"] = r.params.k_ladder;
    j["T"] = r.params.horizon_t;
    j["A"] = r.params.radius_a;
    j["radius"] = r.params.radius;
    j["offset"] = r.params.offset;
    nlohmann::ordered_json hp = nlohmann::ordered_json::array();
    for (auto [a, b] : r.params.h_pairs) hp.push_back({a, b});
    j["h_pairs"] = hp;
    j["constant"] = r.constant;
    j["witness"] = r.witness;
    j["zero_rhs"] = r.zero_rhs;
    j["zero_rhs_witness"] = r.zero_rhs_witness;
    j["evaluated"] = r.evaluated;
    j["pass"] = r.pass;
    return j.dump(2);
}

void write_bound_header(std::ostream& os) { os << "inequality,d,beta,gamma,constant,evaluated,zero_rhs,pass,witness\n"; }

void write_bound_row(std::ostream& os, const BoundReport& r) {
    std::ostringstream c;
    c.precision(17);
    c << r.constant;
    os << bound_id_name(r.id) << ',' << r.params.d << ',' << r.params.beta << ',' << r.params.gamma << ',' << c.str()
       << ',' << r.evaluated << ',' << (r.zero_rhs ? 1 : 0) << ',' << (r.pass ? 1 : 0) << ",\"" << r.witness << "\"\n";
}

}  // namespace sirlt
