#include "sirlt/families.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <absl/container/flat_hash_map.h>

namespace sirlt {

FamilyKind parse_family_kind(const std::string& name) {
    if (name == "point_spread_d2") return FamilyKind::PointSpreadD2;
    if (name == "ball_bounded_d3") return FamilyKind::BallBoundedD3;
    if (name == "radial_spike_d2") return FamilyKind::RadialSpikeD2;
    if (name == "custom") return FamilyKind::Custom;
    throw std::invalid_argument("unknown family kind '" + name + "'");
}

std::string family_kind_name(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::PointSpreadD2: return "point_spread_d2";
        case FamilyKind::BallBoundedD3: return "ball_bounded_d3";
        case FamilyKind::RadialSpikeD2: return "radial_spike_d2";
        case FamilyKind::Custom: return "custom";
    }
    return "?";
}

namespace {

// Lattice points of (spacing * Z)^d ordered by distance to the origin, ties
// broken by site key. Returns the first `count` of them.
std::vector<Site> nearest_points(int d, std::int64_t count, int spacing) {
    if (count <= 0) return {};
    const double ball = d == 2 ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0;
    const int r = static_cast<int>(std::ceil(std::pow(static_cast<double>(count) / ball, 1.0 / d))) + 2;
    const long long r2 = 1LL * r * r;
    std::vector<std::pair<long long, Site>> pts;
    const int zr = d == 3 ? r : 0;
    for (int i = -r; i <= r; ++i) {
        for (int j = -r; j <= r; ++j) {
            for (int l = -zr; l <= zr; ++l) {
                const Site idx{i, j, l};
                const long long q = norm2(idx);
                if (q <= r2) pts.emplace_back(q, Site{i * spacing, j * spacing, l * spacing});
            }
        }
    }
    if (static_cast<std::int64_t>(pts.size()) < count) throw std::logic_error("nearest_points: search radius too small");
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return site_key::pack(a.second) < site_key::pack(b.second);
    });
    std::vector<Site> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) out.push_back(pts[static_cast<std::size_t>(i)].second);
    return out;
}

LatticeField fill_points(int d, const std::vector<Site>& pts, std::int64_t k, std::int64_t load) {
    std::vector<LatticeField::Entry> entries;
    std::int64_t left = k;
    for (const Site& s : pts) {
        const std::int64_t c = std::min(load, left);
        entries.emplace_back(site_key::pack(s), c);
        left -= c;
    }
    return LatticeField::from_entries(d, std::move(entries));
}

struct BallLayout {
    int spacing;
    int load;
};

BallLayout ball_layout(double c1, int c2, int k) {
    const double r = 3.0 * c1 * std::pow(static_cast<double>(k), 1.0 / 6.0);
    // Spacing s > r: a closed ball of radius r meets at most two values of
    // each coordinate, hence at most 8 points. Spacing > 2r: at most one.
    if (c2 >= 8) return {static_cast<int>(std::floor(r)) + 1, c2 / 8};
    return {static_cast<int>(std::floor(2.0 * r)) + 1, c2};
}

double spike_radius(double alpha, double c) {
    return std::pow((2.0 - alpha) / (2.0 * std::numbers::pi * c), 1.0 / (2.0 - alpha));
}

}  // namespace

InitialConfigFamily::InitialConfigFamily(FamilyKind kind, FamilyParams params)
    : kind_(kind), params_(std::move(params)), d_(2) {
    switch (kind_) {
        case FamilyKind::PointSpreadD2:
            if (params_.cap < 1) throw std::invalid_argument("point_spread_d2: cap must be >= 1");
            d_ = 2;
            support_ = 1.0;
            mass_lo_ = mass_hi_ = 1.0;
            break;
        case FamilyKind::BallBoundedD3:
            if (!(params_.c1 > 0.0)) throw std::invalid_argument("ball_bounded_d3: C1 must be positive");
            if (params_.c2 < 1) throw std::invalid_argument("ball_bounded_d3: C2 must be >= 1");
            d_ = 3;
            // n points of s Z^3 nearest the origin lie within s((3n/4pi)^{1/3} + sqrt3/2),
            // n <= k and s <= 6 C1 k^{1/6} + 1.
            support_ = 1.5 * (6.0 * params_.c1 + 1.0);
            mass_lo_ = mass_hi_ = 1.0;
            break;
        case FamilyKind::RadialSpikeD2:
            if (!(params_.spike_alpha > 0.0 && params_.spike_alpha < 2.0))
                throw std::invalid_argument("radial_spike_d2: alpha must lie in (0, 2)");
            if (!(params_.spike_c > 0.0)) throw std::invalid_argument("radial_spike_d2: C must be positive");
            d_ = 2;
            support_ = 2.0 * spike_radius(params_.spike_alpha, params_.spike_c) + 2.0;
            mass_lo_ = 1.0;
            mass_hi_ = 3.0;
            break;
        case FamilyKind::Custom:
            if (!params_.custom) throw std::invalid_argument("custom family: generator missing");
            check_dimension(params_.custom_d);
            d_ = params_.custom_d;
            support_ = params_.custom_support;
            mass_lo_ = params_.custom_mass_lo;
            mass_hi_ = params_.custom_mass_hi;
            break;
    }
}

double InitialConfigFamily::ball_radius(int k) const {
    return 3.0 * params_.c1 * std::pow(static_cast<double>(k), 1.0 / 6.0);
}

LatticeField InitialConfigFamily::generate(int k) const {
    if (k < 1) throw std::invalid_argument("family: k must be >= 1");
    switch (kind_) {
        case FamilyKind::PointSpreadD2: {
            const std::int64_t sites = (k + params_.cap - 1) / params_.cap;
            return fill_points(2, nearest_points(2, sites, 1), k, params_.cap);
        }
        case FamilyKind::BallBoundedD3: {
            const BallLayout lay = ball_layout(params_.c1, params_.c2, k);
            const std::int64_t sites = (k + lay.load - 1) / lay.load;
            return fill_points(3, nearest_points(3, sites, lay.spacing), k, lay.load);
        }
        case FamilyKind::RadialSpikeD2: {
            // Whole shells {|y|^2 = q} in increasing q until the mass reaches k.
            std::vector<LatticeField::Entry> entries;
            std::int64_t mass = 0;
            const int rmax = static_cast<int>(std::ceil(4.0 * support_ * std::sqrt(static_cast<double>(k)))) + 2;
            std::map<long long, std::vector<Site>> shells;
            for (int i = -rmax; i <= rmax; ++i)
                for (int j = -rmax; j <= rmax; ++j) shells[1LL * i * i + 1LL * j * j].push_back({i, j, 0});
            for (const auto& [q, pts] : shells) {
                if (mass >= k) break;
                const double v = params_.spike_c *
                                 std::pow(static_cast<double>(k) / (static_cast<double>(q) + 1.0), params_.spike_alpha / 2.0);
                const auto c = static_cast<std::int64_t>(std::floor(v));
                if (c <= 0) throw std::invalid_argument("radial_spike_d2: profile vanishes before reaching mass k");
                for (const Site& s : pts) entries.emplace_back(site_key::pack(s), c);
                mass += c * static_cast<std::int64_t>(pts.size());
            }
            if (mass < k) throw std::logic_error("radial_spike_d2: search radius too small");
            return LatticeField::from_entries(2, std::move(entries));
        }
        case FamilyKind::Custom: {
            LatticeField f = params_.custom(k);
            if (f.dim() != d_) throw std::invalid_argument("custom family: generator returned wrong dimension");
            return f;
        }
    }
    return LatticeField(d_);
}

std::string InitialConfigFamily::limit_description() const {
    std::ostringstream os;
    switch (kind_) {
        case FamilyKind::PointSpreadD2:
            os << "uniform density " << params_.cap << " on the disc of radius 1/sqrt(" << params_.cap << " pi)";
            break;
        case FamilyKind::BallBoundedD3:
            os << "approximately uniform on a ball; lattice spacing grows like k^{1/6}, so the rescaled "
                  "configuration has no k-independent density at finite k";
            break;
        case FamilyKind::RadialSpikeD2:
            os << "density C |u|^{-alpha} on the disc of radius ((2-alpha)/(2 pi C))^{1/(2-alpha)} (floors ignored)";
            break;
        case FamilyKind::Custom: os << "user supplied"; break;
    }
    return os.str();
}

std::function<double(std::span<const double>)> InitialConfigFamily::limit_density() const {
    if (kind_ == FamilyKind::PointSpreadD2) {
        const double cap = params_.cap;
        const double r2 = 1.0 / (cap * std::numbers::pi);
        return [cap, r2](std::span<const double> u) { return u[0] * u[0] + u[1] * u[1] <= r2 ? cap : 0.0; };
    }
    if (kind_ == FamilyKind::RadialSpikeD2) {
        const double a = params_.spike_alpha, c = params_.spike_c;
        const double r = spike_radius(a, c);
        return [a, c, r](std::span<const double> u) {
            const double n = std::hypot(u[0], u[1]);
            return n <= r && n > 0.0 ? c * std::pow(n, -a) : 0.0;
        };
    }
    return {};
}

InitialConfigFamily build_family(FamilyKind kind, const FamilyParams& params) { return InitialConfigFamily(kind, params); }

std::int64_t max_ball_count(const LatticeField& field, double radius) {
    if (radius < 0) throw std::invalid_argument("max_ball_count: negative radius");
    const int d = field.dim();
    const int r = static_cast<int>(std::floor(radius));
    const double r2 = radius * radius;
    std::vector<Site> offsets;
    const int zr = d == 3 ? r : 0;
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j)
            for (int l = -zr; l <= zr; ++l)
                if (static_cast<double>(norm2({i, j, l})) <= r2) offsets.push_back({i, j, l});
    absl::flat_hash_map<std::uint64_t, std::int64_t> centres;
    std::int64_t best = 0;
    for (const auto& [key, count] : field) {
        const Site p = site_key::unpack(key);
        for (const Site& o : offsets) {
            std::int64_t& c = centres[site_key::pack(add(p, o))];
            c += count;
            best = std::max(best, c);
        }
    }
    return best;
}

bool radially_nonincreasing(const LatticeField& field) {
    if (field.empty()) return true;
    long long qmax = 0;
    for (const auto& e : field) qmax = std::max(qmax, norm2(site_key::unpack(e.first)));
    const int r = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(qmax)))) + 1;
    const int zr = field.dim() == 3 ? r : 0;
    std::map<long long, std::pair<std::int64_t, std::int64_t>> shell;  // q -> (min, max)
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j)
            for (int l = -zr; l <= zr; ++l) {
                const Site s{i, j, l};
                const long long q = norm2(s);
                if (q > qmax + 1) continue;
                const std::int64_t v = field.at(s);
                auto [it, fresh] = shell.try_emplace(q, v, v);
                if (!fresh) {
                    it->second.first = std::min(it->second.first, v);
                    it->second.second = std::max(it->second.second, v);
                }
            }
    std::int64_t prev = -1;
    for (const auto& [q, mm] : shell) {
        if (mm.first != mm.second) return false;
        if (prev >= 0 && mm.first > prev) return false;
        prev = mm.first;
    }
    return true;
}

SmoothnessReport validate_spread(const InitialConfigFamily& family, std::span<const int> k_list,
                                 std::span<const double> t_list, const KernelTable& table, double growth_tolerance) {
    if (k_list.empty() || t_list.empty()) throw std::invalid_argument("validate_spread: empty ladder");
    if (table.dim() != family.dim()) throw std::invalid_argument("validate_spread: table dimension mismatch");
    SmoothnessReport rep;
    rep.k_list.assign(k_list.begin(), k_list.end());
    rep.t_list.assign(t_list.begin(), t_list.end());
    std::sort(rep.t_list.begin(), rep.t_list.end(), std::greater<>());
    rep.growth_tolerance = growth_tolerance;
    const int d = family.dim();
    std::vector<LatticeField> mus;
    for (int k : rep.k_list) mus.push_back(family.generate(k));
    for (double t : rep.t_list) {
        if (!(t > 0.0)) throw std::invalid_argument("validate_spread: t must be positive");
        std::vector<double> row;
        for (std::size_t ki = 0; ki < rep.k_list.size(); ++ki) {
            const int k = rep.k_list[ki];
            const int n = static_cast<int>(std::floor(k * t + 1e-9));
            if (n > table.n_max() + 1) {
                throw HorizonError("validate_spread: k t = " + std::to_string(n) + " exceeds the kernel horizon");
            }
            double mx = 0.0;
            if (!mus[ki].empty() && n > 0) mx = green_convolve(table, mus[ki], n).max_abs();
            const double m = mx / std::pow(static_cast<double>(k), 2.0 - d / 2.0);
            row.push_back(m);
            rep.slope_estimate = std::max(rep.slope_estimate, m / t);
        }
        rep.sup_over_k.push_back(*std::max_element(row.begin(), row.end()));
        for (double m : row) {
            if (m > growth_tolerance * row.front() + 1e-15) rep.uniform_in_k = false;
        }
        rep.m.push_back(std::move(row));
    }
    for (std::size_t i = 1; i < rep.sup_over_k.size(); ++i) {
        if (rep.sup_over_k[i] > rep.sup_over_k[i - 1] + 1e-15) rep.monotone_in_t = false;
    }
    rep.pass = rep.monotone_in_t && rep.uniform_in_k;
    std::ostringstream os;
    if (!rep.monotone_in_t) os << "sup_k m(k,t) is not non-increasing as t decreases; ";
    if (!rep.uniform_in_k) os << "m(k,t) grows along the k ladder beyond x" << growth_tolerance << "; ";
    rep.detail = os.str();
    return rep;
}

}  // namespace sirlt
