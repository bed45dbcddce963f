#include "sirlt/kernel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "sirlt/field.hpp"

namespace sirlt {

namespace {

constexpr char kCacheMagic[8] = {'S', 'I', 'R', 'L', 'T', 'K', 'T', '1'};
constexpr std::uint32_t kCacheVersion = 1;
constexpr std::uint32_t kEndianTag = 0x01020304;

std::size_t box_cells(int d, int radius) {
    std::size_t side = 2 * static_cast<std::size_t>(radius) + 1;
    return d == 2 ? side * side : side * side * side;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("kernel cache: truncated file");
    return v;
}

}  // namespace

std::size_t kernel_table_bytes(int d, int n_max) {
    std::size_t cells = 0;
    for (int i = 0; i <= n_max; ++i) cells += box_cells(d, i);
    return cells * sizeof(double);
}

KernelTable::KernelTable(WalkSpec spec, int n_max, std::size_t budget_bytes) : spec_(spec) {
    if (n_max < 0) throw std::invalid_argument("KernelTable: n_max must be >= 0");
    const std::size_t need = kernel_table_bytes(spec.d, n_max);
    if (need > budget_bytes) {
        throw CapacityError("KernelTable: d=" + std::to_string(spec.d) + " n_max=" + std::to_string(n_max) +
                            " needs " + std::to_string(need) + " bytes, budget is " +
                            std::to_string(budget_bytes));
    }
    rows_.reserve(static_cast<std::size_t>(n_max) + 1);
    rows_.push_back(BoxGrid::centered(spec.d, 0, 1.0));
    for (int i = 0; i < n_max; ++i) rows_.push_back(stencil_step(rows_.back()));
}

const BoxGrid& KernelTable::row(int i) const {
    if (i < 0 || i > n_max()) {
        throw HorizonError("KernelTable: step " + std::to_string(i) + " outside [0, " + std::to_string(n_max()) +
                           "]");
    }
    return rows_[static_cast<std::size_t>(i)];
}

BoxGrid KernelTable::green(int n) const {
    if (n > n_max() + 1) {
        throw HorizonError("KernelTable::green: n=" + std::to_string(n) + " exceeds horizon " +
                           std::to_string(n_max() + 1));
    }
    BoxGrid g = BoxGrid::centered(dim(), n - 1);
    for (int i = 0; i < n; ++i) {
        const BoxGrid& r = rows_[static_cast<std::size_t>(i)];
        const auto rv = r.values();
        for (std::size_t idx = 0; idx < rv.size(); ++idx) g[r.site_at(idx)] += rv[idx];
    }
    return g;
}

double KernelTable::green_at(int n, const Site& x) const {
    if (n > n_max() + 1) {
        throw HorizonError("KernelTable::green_at: n=" + std::to_string(n) + " exceeds horizon");
    }
    double s = 0.0;
    for (int i = norm_inf(x); i < n; ++i) s += rows_[static_cast<std::size_t>(i)].value(x);
    return s;
}

void KernelTable::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("kernel cache: cannot open " + path + " for writing");
    os.write(kCacheMagic, sizeof(kCacheMagic));
    write_pod(os, kCacheVersion);
    write_pod(os, kEndianTag);
    write_pod(os, static_cast<std::uint32_t>(dim()));
    write_pod(os, static_cast<std::uint32_t>(n_max()));
    for (const auto& r : rows_) {
        const auto v = r.values();
        os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("kernel cache: write failed for " + path);
}

KernelTable KernelTable::load(const std::string& path, std::size_t budget_bytes) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("kernel cache: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("kernel cache: bad magic in " + path);
    }
    if (read_pod<std::uint32_t>(is) != kCacheVersion) throw std::runtime_error("kernel cache: unsupported version");
    if (read_pod<std::uint32_t>(is) != kEndianTag) throw std::runtime_error("kernel cache: endianness mismatch");
    const int d = static_cast<int>(read_pod<std::uint32_t>(is));
    const int n_max = static_cast<int>(read_pod<std::uint32_t>(is));
    WalkSpec spec(d);
    if (kernel_table_bytes(d, n_max) > budget_bytes) {
        throw CapacityError("kernel cache: table in " + path + " exceeds memory budget");
    }
    std::vector<BoxGrid> rows;
    rows.reserve(static_cast<std::size_t>(n_max) + 1);
    for (int i = 0; i <= n_max; ++i) {
        BoxGrid r = BoxGrid::centered(d, i);
        auto v = r.values();
        is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
        if (!is) throw std::runtime_error("kernel cache: truncated payload in " + path);
        rows.push_back(std::move(r));
    }
    return KernelTable(spec, std::move(rows));
}

KernelTable KernelTable::cached(const std::string& path, WalkSpec spec, int n_max, std::size_t budget_bytes) {
    if (!path.empty() && std::filesystem::exists(path)) {
        KernelTable t = load(path, budget_bytes);
        if (t.dim() == spec.d && t.n_max() >= n_max) {
            t.rows_.resize(static_cast<std::size_t>(n_max) + 1);
            return t;
        }
    }
    KernelTable t(spec, n_max, budget_bytes);
    if (!path.empty()) t.save(path);
    return t;
}

KernelStepper::KernelStepper(WalkSpec spec, int window, int horizon)
    : spec_(spec), window_(window), horizon_(horizon), current_(BoxGrid::centered(spec.d, 0, 1.0)) {}

void KernelStepper::advance() {
    int cap = -1;
    if (window_ >= 0 && horizon_ > 0) cap = std::max(window_, window_ + horizon_ - 2 - step_);
    stencil_step_into(current_, spare_, cap);
    std::swap(current_, spare_);
    ++step_;
}

std::vector<BoxGrid> green_window(WalkSpec spec, std::span<const int> ns, int window) {
    if (window < 0) throw std::invalid_argument("green_window: window must be >= 0");
    int horizon = 0;
    for (int n : ns) {
        if (n < 0) throw std::invalid_argument("green_window: negative n");
        horizon = std::max(horizon, n);
    }
    std::vector<BoxGrid> out(ns.size(), BoxGrid::centered(spec.d, window));
    BoxGrid running = BoxGrid::centered(spec.d, window);
    KernelStepper stepper(spec, window, horizon);
    for (int i = 0; i < horizon; ++i) {
        const BoxGrid& p = stepper.current();
        const auto pv = p.values();
        for (std::size_t idx = 0; idx < pv.size(); ++idx) {
            const Site s = p.site_at(idx);
            if (running.contains(s)) running[s] += pv[idx];
        }
        for (std::size_t q = 0; q < ns.size(); ++q) {
            if (ns[q] == i + 1) out[q] = running;
        }
        stepper.advance();
    }
    return out;
}

BoxGrid green_convolve(const KernelTable& table, const LatticeField& mu, int n) {
    const int d = table.dim();
    if (n > table.n_max() + 1) {
        throw HorizonError("green_convolve: n=" + std::to_string(n) + " exceeds kernel horizon");
    }
    if (mu.empty() || n <= 0) return BoxGrid(d, {0, 0, 0}, {-1, -1, -1});
    const BoxGrid g = table.green(n);
    BoxGrid out = mu.bounding_box().grown(n - 1);
    const auto gv = g.values();
    for (const auto& [key, count] : mu) {
        const Site y = site_key::unpack(key);
        for (std::size_t idx = 0; idx < gv.size(); ++idx) {
            if (gv[idx] == 0.0) continue;
            out[add(y, g.site_at(idx))] += static_cast<double>(count) * gv[idx];
        }
    }
    return out;
}

double green_convolve_at(const KernelTable& table, const LatticeField& mu, int n, const Site& x) {
    double s = 0.0;
    for (const auto& [key, count] : mu) {
        s += static_cast<double>(count) * table.green_at(n, sub(x, site_key::unpack(key)));
    }
    return s;
}

double green_interpolate(const KernelTable& table, const LatticeField& mu, double t, std::span<const double> x) {
    const int d = table.dim();
    if (static_cast<int>(x.size()) != d) throw std::invalid_argument("green_interpolate: wrong point dimension");
    if (t < 0) throw std::invalid_argument("green_interpolate: negative time");
    const int t0 = static_cast<int>(std::floor(t));
    const double wt = t - t0;
    Site base{0, 0, 0};
    double frac[3] = {0, 0, 0};
    for (int a = 0; a < d; ++a) {
        base[a] = static_cast<int>(std::floor(x[static_cast<std::size_t>(a)]));
        frac[a] = x[static_cast<std::size_t>(a)] - base[a];
    }
    double total = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        Site c = base;
        for (int a = 0; a < d; ++a) {
            const bool up = (corner >> a) & 1;
            w *= up ? frac[a] : 1.0 - frac[a];
            c[a] += up ? 1 : 0;
        }
        if (w == 0.0) continue;
        double v = (1.0 - wt) * green_convolve_at(table, mu, t0, c);
        if (wt > 0.0) v += wt * green_convolve_at(table, mu, t0 + 1, c);
        total += w * v;
    }
    return total;
}

double gauss_phi(int d, double s, std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return std::pow(2.0 * std::numbers::pi * s, -0.5 * d) * std::exp(-r2 / (2.0 * s));
}

double gauss_phi(int d, double s, const Site& x, double scale) {
    const double r2 = static_cast<double>(norm2(x)) * scale * scale;
    return std::pow(2.0 * std::numbers::pi * s, -0.5 * d) * std::exp(-r2 / (2.0 * s));
}

double gauss_Phi(int d, double s, const Site& x, const Site& y, double scale) {
    return gauss_phi(d, s, x, scale) + gauss_phi(d, s, y, scale);
}

namespace {

struct SimpsonPanel {
    double a, b, fa, fm, fb, whole;
};

template <typename F>
double adaptive_simpson(const F& f, const SimpsonPanel& p, double eps, int depth) {
    const double m = 0.5 * (p.a + p.b);
    const double lm = 0.5 * (p.a + m), rm = 0.5 * (m + p.b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    const double right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    const double delta = left + right - p.whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    return adaptive_simpson(f, {p.a, m, p.fa, flm, p.fm, left}, eps / 2.0, depth - 1) +
           adaptive_simpson(f, {m, p.b, p.fm, frm, p.fb, right}, eps / 2.0, depth - 1);
}

}  // namespace

double heat_occupation(int d, double t, std::span<const double> x, double rel_tol) {
    check_dimension(d);
    if (static_cast<int>(x.size()) != d) throw std::invalid_argument("heat_occupation: wrong point dimension");
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    if (r2 == 0.0) throw DomainError("heat_occupation: q_t(0) diverges for d >= 2");
    constexpr double kEps = 1e-8;
    if (t <= kEps) return 0.0;
    auto f = [&](double s) { return std::pow(2.0 * std::numbers::pi * s, -0.5 * d) * std::exp(-r2 / (2.0 * s)); };

    // Geometric initial panels so the peak near s = |x|^2/d is resolved.
    constexpr int kPanels = 48;
    const double ratio = std::pow(t / kEps, 1.0 / kPanels);
    std::vector<double> pieces;
    double a = kEps;
    double rough = 0.0;
    for (int i = 0; i < kPanels; ++i) {
        const double b = (i + 1 == kPanels) ? t : a * ratio;
        const double m = 0.5 * (a + b);
        rough += (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
        a = b;
    }
    const double eps = std::max(rel_tol * std::abs(rough), 1e-300);
    a = kEps;
    double total = 0.0;
    for (int i = 0; i < kPanels; ++i) {
        const double b = (i + 1 == kPanels) ? t : a * ratio;
        const double m = 0.5 * (a + b);
        const double fa = f(a), fm = f(m), fb = f(b);
        total += adaptive_simpson(f, {a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb)}, eps / kPanels, 40);
        a = b;
    }
    return total;
}

RescaledGreenTest::RescaledGreenTest(const KernelTable& table, TestFunction psi, double psi_radius, int k)
    : table_(&table), k_(k) {
    if (k < 1) throw std::invalid_argument("RescaledGreenTest: k must be >= 1");
    const int d = table.dim();
    const double sk = std::sqrt(static_cast<double>(k));
    const int r = static_cast<int>(std::ceil(psi_radius * sk));
    const int r2 = d == 3 ? r : 0;
    std::vector<double> pt(static_cast<std::size_t>(d));
    for (int i = -r; i <= r; ++i) {
        for (int j = -r; j <= r; ++j) {
            for (int l = -r2; l <= r2; ++l) {
                const Site y{i, j, l};
                pt[0] = i / sk;
                pt[1] = j / sk;
                if (d == 3) pt[2] = l / sk;
                const double v = psi(pt);
                if (v != 0.0) {
                    samples_.emplace_back(y, v);
                    psi_max_ = std::max(psi_max_, std::abs(v));
                }
            }
        }
    }
}

double RescaledGreenTest::at_lattice(int j, const Site& z) const {
    if (j > table_->n_max() + 1) {
        throw HorizonError("RescaledGreenTest: k*t=" + std::to_string(j) + " exceeds kernel horizon");
    }
    double s = 0.0;
    for (const auto& [y, v] : samples_) s += v * table_->green_at(j, sub(z, y));
    return s / k_;
}

double RescaledGreenTest::operator()(double t, std::span<const double> x) const {
    const int d = table_->dim();
    if (static_cast<int>(x.size()) != d) throw std::invalid_argument("RescaledGreenTest: wrong point dimension");
    const double sk = std::sqrt(static_cast<double>(k_));
    const double tt = t * k_;
    const int j0 = static_cast<int>(std::floor(tt));
    const double wt = tt - j0;
    Site base{0, 0, 0};
    double frac[3] = {0, 0, 0};
    for (int a = 0; a < d; ++a) {
        const double u = x[static_cast<std::size_t>(a)] * sk;
        base[a] = static_cast<int>(std::floor(u));
        frac[a] = u - base[a];
    }
    double total = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        Site c = base;
        for (int a = 0; a < d; ++a) {
            const bool up = (corner >> a) & 1;
            w *= up ? frac[a] : 1.0 - frac[a];
            c[a] += up ? 1 : 0;
        }
        if (w == 0.0) continue;
        double v = (1.0 - wt) * at_lattice(j0, c);
        if (wt > 0.0) v += wt * at_lattice(j0 + 1, c);
        total += w * v;
    }
    return total;
}

}  // namespace sirlt

namespace sirlt {

namespace {

// P_0..P_{n_max} stepped in place on two flat buffers centred at the origin.
// Each cell uses the same arithmetic as stencil_step, so rows agree bit for
// bit with KernelTable and KernelStepper.
class FlatKernel {
public:
    FlatKernel(int d, int n_max) : d_(d), half_(n_max + 2) {
        side_ = 2 * static_cast<std::ptrdiff_t>(half_) + 1;
        s2_ = d == 3 ? 1 : 0;
        s1_ = d == 3 ? side_ : 1;
        s0_ = d == 3 ? side_ * side_ : side_;
        const std::size_t cells = static_cast<std::size_t>(d == 3 ? side_ * side_ * side_ : side_ * side_);
        a_.assign(cells, 0.0);
        b_.assign(cells, 0.0);
        centre_ = half_ * (s0_ + s1_ + s2_);
        a_[static_cast<std::size_t>(centre_)] = 1.0;
    }

    int step() const { return step_; }
    double at(const Site& x) const {
        for (int k = 0; k < d_; ++k)
            if (std::abs(x[k]) > step_) return 0.0;
        return a_[static_cast<std::size_t>(idx(x))];
    }

    // Advances one step and returns the new row's mass (line sums in plain
    // double, compensated across lines).
    double advance() {
        const int r = ++step_;
        CompensatedSum mass;
        const int rz = d_ == 3 ? r : 0;
        for (int i = -r; i <= r; ++i) {
            for (int j = d_ == 3 ? -r : 0; j <= (d_ == 3 ? r : 0); ++j) {
                // d = 2: the line runs over axis 1; d = 3: over axis 2.
                const std::ptrdiff_t start = d_ == 3 ? idx({i, j, -rz}) : idx({i, -r, 0});
                const double* c = a_.data() + start;
                double* o = b_.data() + start;
                const int len = 2 * r + 1;
                double line = 0.0;
                if (d_ == 2) {
                    for (int l = 0; l < len; ++l, ++c) {
                        const double a0 = c[-s0_] + c[s0_];
                        const double a1 = c[-s1_] + c[s1_];
                        o[l] = (c[0] + (a0 + a1)) / 5.0;
                        line += o[l];
                    }
                } else {
                    for (int l = 0; l < len; ++l, ++c) {
                        const double a0 = c[-s0_] + c[s0_];
                        const double a1 = c[-s1_] + c[s1_];
                        const double a2 = c[-s2_] + c[s2_];
                        const double mn = std::min(a0, std::min(a1, a2));
                        const double mx = std::max(a0, std::max(a1, a2));
                        const double md = std::max(std::min(a0, a1), std::min(std::max(a0, a1), a2));
                        o[l] = (c[0] + ((mn + md) + mx)) / 7.0;
                        line += o[l];
                    }
                }
                mass.add(line);
            }
        }
        std::swap(a_, b_);
        return mass.value();
    }

    BoxGrid grid() const {
        BoxGrid g = BoxGrid::centered(d_, step_);
        for (std::size_t q = 0; q < g.size(); ++q) g.values()[q] = a_[static_cast<std::size_t>(idx(g.site_at(q)))];
        return g;
    }

    // Exact equality under a sign flip and the axis swaps.
    bool symmetric(std::string& witness) const {
        const int r = step_;
        const int rz = d_ == 3 ? r : 0;
        for (int i = -r; i <= r; ++i)
            for (int j = -r; j <= r; ++j)
                for (int l = -rz; l <= rz; ++l) {
                    const Site s{i, j, l};
                    const double v = a_[static_cast<std::size_t>(idx(s))];
                    bool ok = a_[static_cast<std::size_t>(idx({-i, j, l}))] == v &&
                              a_[static_cast<std::size_t>(idx({j, i, l}))] == v;
                    if (d_ == 3) ok = ok && a_[static_cast<std::size_t>(idx({i, l, j}))] == v;
                    if (!ok) {
                        witness = "(" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(l) + ")";
                        return false;
                    }
                }
        return true;
    }

private:
    std::ptrdiff_t idx(const Site& x) const { return centre_ + x[0] * s0_ + x[1] * s1_ + x[2] * s2_; }

    int d_;
    int half_;
    int step_ = 0;
    std::ptrdiff_t side_ = 0, s0_ = 0, s1_ = 0, s2_ = 0, centre_ = 0;
    std::vector<double> a_, b_;
};

double ck_at(const BoxGrid& a, const BoxGrid& b, const Site& x) {
    CompensatedSum s;
    const auto av = a.values();
    for (std::size_t i = 0; i < av.size(); ++i) s.add(av[i] * b.value(sub(x, a.site_at(i))));
    return s.value();
}


}  // namespace

KernelExactness check_kernel_exactness(WalkSpec spec, int n_max) {
    if (n_max < 0) throw std::invalid_argument("check_kernel_exactness: n_max must be >= 0");
    const int d = spec.d;
    KernelExactness rep;
    rep.d = d;
    rep.n_max = n_max;
    constexpr int kSmall = 64;
    const int ck_offsets[] = {1, 2, 5};
    std::vector<BoxGrid> small{BoxGrid::centered(d, 0, 1.0)};
    FlatKernel k(d, n_max);
    auto sites_for = [&](int n) {
        std::vector<Site> xs{{0, 0, 0}, {1, 0, 0}, {3, -2, 0}, {n / 4, n / 8, 0}, {n / 2, 0, 0}, {n, 0, 0}};
        if (d == 3)
            for (auto& x : xs) x[2] = x[1] / 2;
        return xs;
    };
    // Patches of P_{n_max - a} around each check site x (radius a).
    struct Patch {
        int a;
        Site x;
        BoxGrid values;
    };
    std::vector<Patch> late;
    auto take_patches = [&](int a) {
        for (const Site& x : sites_for(n_max)) {
            Site lo = x, hi = x;
            for (int q = 0; q < d; ++q) {
                lo[q] -= a;
                hi[q] += a;
            }
            BoxGrid g(d, lo, hi);
            for (std::size_t q = 0; q < g.size(); ++q) g.values()[q] = k.at(g.site_at(q));
            late.push_back({a, x, std::move(g)});
        }
    };
    rep.symmetry_rows = 1;
    for (int a : ck_offsets)
        if (n_max - a == 0) take_patches(a);
    for (int i = 1; i <= n_max; ++i) {
        const double err = std::abs(k.advance() - 1.0);
        if (err > rep.max_mass_error) {
            rep.max_mass_error = err;
            rep.worst_mass_row = i;
        }
        const bool sym_row = i <= kSmall || std::has_single_bit(static_cast<unsigned>(i)) || i == n_max;
        if (sym_row && rep.symmetric) {
            ++rep.symmetry_rows;
            if (!k.symmetric(rep.symmetry_witness)) rep.symmetric = false;
        }
        if (i <= kSmall) small.push_back(k.grid());
        for (int a : ck_offsets)
            if (i == n_max - a) take_patches(a);
    }
    // The stored small rows and the final row come from the same in-place
    // stepping; compare them with the allocating stencil for the support check.
    {
        KernelStepper st(spec);
        for (int i = 0; i < static_cast<int>(small.size()); ++i) {
            const BoxGrid& r = st.current();
            for (int a = 0; a < d; ++a)
                if (r.lo()[a] != -i || r.hi()[a] != i) rep.support_ok = false;
            if (!std::equal(r.values().begin(), r.values().end(), small[static_cast<std::size_t>(i)].values().begin()))
                rep.support_ok = false;
            st.advance();
        }
    }
    // P_n = P_a * P_{n-a} at the last row.
    for (const Patch& p : late) {
        if (p.a >= static_cast<int>(small.size())) continue;
        const double rhs = ck_at(small[static_cast<std::size_t>(p.a)], p.values, p.x);
        rep.max_ck_error = std::max(rep.max_ck_error, std::abs(k.at(p.x) - rhs));
        ++rep.ck_checks;
    }
    for (int m = 1; 2 * m < static_cast<int>(small.size()); m *= 2) {
        for (const Site& x : sites_for(2 * m)) {
            const double lhs = small[static_cast<std::size_t>(2 * m)].value(x);
            const double rhs = ck_at(small[static_cast<std::size_t>(m)], small[static_cast<std::size_t>(m)], x);
            rep.max_ck_error = std::max(rep.max_ck_error, std::abs(lhs - rhs));
            ++rep.ck_checks;
        }
    }
    return rep;
}

}  // namespace sirlt
