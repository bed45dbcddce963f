#include "sirlt/lattice.hpp"

#include <algorithm>

namespace sirlt {

BoxGrid::BoxGrid(int d, const Site& lo, const Site& hi, double fill) : d_(d), lo_(lo), hi_(hi) {
    check_dimension(d);
    for (int a = 0; a < 3; ++a) {
        if (hi[a] < lo[a]) {
            lo_ = {0, 0, 0};
            hi_ = {-1, -1, -1};
            return;
        }
    }
    if (d == 2 && (lo[2] != 0 || hi[2] != 0)) {
        throw std::invalid_argument("BoxGrid: third axis must be {0} in d=2");
    }
    std::size_t n = 1;
    for (int a = 0; a < 3; ++a) n *= static_cast<std::size_t>(hi[a] - lo[a] + 1);
    values_.assign(n, fill);
}

void BoxGrid::reshape(int d, const Site& lo, const Site& hi) {
    check_dimension(d);
    d_ = d;
    for (int a = 0; a < 3; ++a) {
        if (hi[a] < lo[a]) {
            lo_ = {0, 0, 0};
            hi_ = {-1, -1, -1};
            values_.clear();
            return;
        }
    }
    if (d_ == 2 && (lo[2] != 0 || hi[2] != 0)) throw std::invalid_argument("BoxGrid: third axis must be {0} in d=2");
    lo_ = lo;
    hi_ = hi;
    std::size_t n = 1;
    for (int a = 0; a < 3; ++a) n *= static_cast<std::size_t>(hi[a] - lo[a] + 1);
    // Growing boxes (steppers) would otherwise reallocate on every call.
    if (values_.capacity() < n) values_.reserve(n + n / 2);
    values_.assign(n, 0.0);
}

BoxGrid BoxGrid::centered(int d, int radius, double fill) {
    check_dimension(d);
    if (radius < 0) return BoxGrid(d, {0, 0, 0}, {-1, -1, -1});
    const int r2 = d == 3 ? radius : 0;
    return BoxGrid(d, {-radius, -radius, -r2}, {radius, radius, r2}, fill);
}

Site BoxGrid::site_at(std::size_t idx) const {
    const auto e2 = static_cast<std::size_t>(extent(2));
    const auto e1 = static_cast<std::size_t>(extent(1));
    Site s;
    s[2] = lo_[2] + static_cast<int>(idx % e2);
    idx /= e2;
    s[1] = lo_[1] + static_cast<int>(idx % e1);
    idx /= e1;
    s[0] = lo_[0] + static_cast<int>(idx);
    return s;
}

BoxGrid BoxGrid::grown(int r) const {
    if (empty()) return BoxGrid(d_, {0, 0, 0}, {-1, -1, -1});
    Site lo = lo_, hi = hi_;
    for (int a = 0; a < d_; ++a) {
        lo[a] -= r;
        hi[a] += r;
    }
    return BoxGrid(d_, lo, hi);
}

BoxGrid BoxGrid::hull(const BoxGrid& a, const BoxGrid& b) {
    if (a.empty()) return BoxGrid(b.d_, b.lo_, b.hi_);
    if (b.empty()) return BoxGrid(a.d_, a.lo_, a.hi_);
    Site lo, hi;
    for (int k = 0; k < 3; ++k) {
        lo[k] = std::min(a.lo_[k], b.lo_[k]);
        hi[k] = std::max(a.hi_[k], b.hi_[k]);
    }
    return BoxGrid(a.d_, lo, hi);
}

BoxGrid BoxGrid::embedded(const Site& lo, const Site& hi) const {
    BoxGrid out(d_, lo, hi);
    if (empty()) return out;
    for (int a = 0; a < 3; ++a) {
        if (lo_[a] < lo[a] || hi_[a] > hi[a]) {
            throw std::invalid_argument("BoxGrid::embedded: target box does not contain source");
        }
    }
    const int n0 = extent(0), n1 = extent(1), n2 = extent(2);
    for (int i = 0; i < n0; ++i) {
        for (int j = 0; j < n1; ++j) {
            const Site s{lo_[0] + i, lo_[1] + j, lo_[2]};
            std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(index(s)), n2,
                        out.values_.begin() + static_cast<std::ptrdiff_t>(out.index(s)));
        }
    }
    return out;
}

double BoxGrid::sum() const {
    CompensatedSum s;
    for (double v : values_) s.add(v);
    return s.value();
}

double BoxGrid::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

BoxGrid stencil_step(const BoxGrid& in, int max_radius) {
    BoxGrid out(in.dim(), {0, 0, 0}, {-1, -1, -1});
    stencil_step_into(in, out, max_radius);
    return out;
}

void stencil_step_into(const BoxGrid& in, BoxGrid& out, int max_radius) {
    const int d = in.dim();
    if (in.empty()) {
        out.reshape(d, {0, 0, 0}, {-1, -1, -1});
        return;
    }

    Site lo = in.lo(), hi = in.hi();
    for (int a = 0; a < d; ++a) {
        lo[a] -= 1;
        hi[a] += 1;
        if (max_radius >= 0) {
            lo[a] = std::max(lo[a], -max_radius);
            hi[a] = std::min(hi[a], max_radius);
        }
    }
    out.reshape(d, lo, hi);
    if (out.empty()) return;

    // Zero-padded copy of the input; the scratch keeps its storage between
    // calls so large steppers do not fault in fresh pages every step.
    thread_local BoxGrid scratch;
    {
        Site plo = in.lo(), phi = in.hi();
        for (int a = 0; a < d; ++a) {
            plo[a] -= 2;
            phi[a] += 2;
        }
        scratch.reshape(d, plo, phi);
    }
    const BoxGrid& padded = scratch;
    {
        const auto src = in.values();
        auto dst = scratch.values();
        const int e0 = in.extent(0), e1 = in.extent(1), e2 = in.extent(2);
        for (int i = 0; i < e0; ++i)
            for (int j = 0; j < e1; ++j) {
                const Site s{in.lo()[0] + i, in.lo()[1] + j, in.lo()[2]};
                std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(in.index(s)), e2,
                            dst.begin() + static_cast<std::ptrdiff_t>(scratch.index(s)));
            }
    }
    const auto pv = padded.values();
    auto ov = out.values();

    const std::ptrdiff_t s2 = 1;
    const std::ptrdiff_t s1 = padded.extent(2);
    const std::ptrdiff_t s0 = static_cast<std::ptrdiff_t>(padded.extent(1)) * padded.extent(2);
    const int n0 = out.extent(0), n1 = out.extent(1), n2 = out.extent(2);

    if (d == 2) {
        for (int i = 0; i < n0; ++i) {
            const Site row{lo[0] + i, lo[1], 0};
            const double* p = pv.data() + padded.index(row);
            double* o = ov.data() + out.index(row);
            for (int j = 0; j < n1; ++j) {
                const double* c = p + j * s1;
                const double a0 = c[-s0] + c[s0];
                const double a1 = c[-s1] + c[s1];
                o[j] = (c[0] + (a0 + a1)) / 5.0;
            }
        }
    } else {
        for (int i = 0; i < n0; ++i) {
            for (int j = 0; j < n1; ++j) {
                const Site row{lo[0] + i, lo[1] + j, lo[2]};
                const double* p = pv.data() + padded.index(row);
                double* o = ov.data() + out.index(row);
                for (int l = 0; l < n2; ++l) {
                    const double* c = p + l * s2;
                    const double a0 = c[-s0] + c[s0];
                    const double a1 = c[-s1] + c[s1];
                    const double a2 = c[-s2] + c[s2];
                    const double mn = std::min(a0, std::min(a1, a2));
                    const double mx = std::max(a0, std::max(a1, a2));
                    const double md = std::max(std::min(a0, a1), std::min(std::max(a0, a1), a2));
                    o[l] = (c[0] + ((mn + md) + mx)) / 7.0;
                }
            }
        }
    }
}

}  // namespace sirlt
