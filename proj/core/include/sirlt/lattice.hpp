#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sirlt {

/// A point of Z^d, d in {2, 3}. Unused trailing coordinates are zero.
using Site = std::array<int, 3>;

inline void check_dimension(int d) {
    if (d != 2 && d != 3) {
        throw std::invalid_argument("dimension must be 2 or 3, got " + std::to_string(d));
    }
}

/// Packed site keys: 21 bits per axis with a fixed offset, so that the
/// unsigned order of keys is the lexicographic order of coordinates.
namespace site_key {
inline constexpr int kBits = 21;
inline constexpr int kOffset = 1 << 20;
inline constexpr std::uint64_t kMask = (std::uint64_t{1} << kBits) - 1;

inline std::uint64_t pack(const Site& s) {
    for (int c : s) {
        if (c <= -kOffset || c >= kOffset) {
            throw std::out_of_range("site coordinate outside packable range: " + std::to_string(c));
        }
    }
    return (static_cast<std::uint64_t>(s[0] + kOffset) << (2 * kBits)) |
           (static_cast<std::uint64_t>(s[1] + kOffset) << kBits) |
           static_cast<std::uint64_t>(s[2] + kOffset);
}

inline Site unpack(std::uint64_t key) {
    return {static_cast<int>((key >> (2 * kBits)) & kMask) - kOffset,
            static_cast<int>((key >> kBits) & kMask) - kOffset,
            static_cast<int>(key & kMask) - kOffset};
}

/// Key of s + e where e is a unit move along axis (positive or negative).
inline std::uint64_t shift(std::uint64_t key, int axis, int sign) {
    const int shift_bits = (2 - axis) * kBits;
    return sign > 0 ? key + (std::uint64_t{1} << shift_bits) : key - (std::uint64_t{1} << shift_bits);
}
}  // namespace site_key

/// The 2d+1 moves of the lazy nearest-neighbour walk, origin first.
inline std::vector<Site> moves(int d) {
    check_dimension(d);
    std::vector<Site> out{{0, 0, 0}};
    for (int a = 0; a < d; ++a) {
        Site p{0, 0, 0};
        p[a] = 1;
        out.push_back(p);
        p[a] = -1;
        out.push_back(p);
    }
    return out;
}

inline Site add(const Site& a, const Site& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Site sub(const Site& a, const Site& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Site negate(const Site& a) { return {-a[0], -a[1], -a[2]}; }

inline long long norm2(const Site& s) {
    return 1LL * s[0] * s[0] + 1LL * s[1] * s[1] + 1LL * s[2] * s[2];
}

inline int norm_inf(const Site& s) {
    return std::max({std::abs(s[0]), std::abs(s[1]), std::abs(s[2])});
}

/// Dense real-valued function on an axis-aligned box of Z^d; zero outside.
class BoxGrid {
public:
    BoxGrid() = default;
    BoxGrid(int d, const Site& lo, const Site& hi, double fill = 0.0);

    /// Box [-radius, radius]^d. A negative radius gives an empty grid.
    static BoxGrid centered(int d, int radius, double fill = 0.0);

    int dim() const { return d_; }
    const Site& lo() const { return lo_; }
    const Site& hi() const { return hi_; }
    bool empty() const { return values_.empty(); }
    std::size_t size() const { return values_.size(); }
    int extent(int axis) const { return hi_[axis] - lo_[axis] + 1; }

    bool contains(const Site& s) const {
        for (int a = 0; a < 3; ++a) {
            if (s[a] < lo_[a] || s[a] > hi_[a]) return false;
        }
        return !values_.empty();
    }

    std::size_t index(const Site& s) const {
        return (static_cast<std::size_t>(s[0] - lo_[0]) * extent(1) + (s[1] - lo_[1])) * extent(2) +
               (s[2] - lo_[2]);
    }

    Site site_at(std::size_t idx) const;

    double& operator[](const Site& s) { return values_[index(s)]; }
    double operator[](const Site& s) const { return values_[index(s)]; }

    /// Value at s, zero outside the box.
    double value(const Site& s) const { return contains(s) ? values_[index(s)] : 0.0; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    /// Empty (zero) grid on this box grown by r on every active axis.
    BoxGrid grown(int r) const;

    /// Smallest box containing both.
    static BoxGrid hull(const BoxGrid& a, const BoxGrid& b);

    /// Copy of this grid re-embedded in a larger (or equal) box.
    BoxGrid embedded(const Site& lo, const Site& hi) const;

    double sum() const;
    double max_abs() const;

    /// Re-targets the grid to a new box, zero-filled, keeping the storage.
    void reshape(int d, const Site& lo, const Site& hi);

private:
    int d_ = 2;
    Site lo_{0, 0, 0};
    Site hi_{-1, -1, -1};
    std::vector<double> values_;
};

/// One application of the lazy-walk transition operator:
/// out(x) = (1/(2d+1)) * sum_e in(x + e), on the input box grown by 1
/// (clipped to `max_radius` when non-negative; the input must be centred).
/// Pair sums are formed symmetrically so lattice symmetries are preserved
/// bit-for-bit.
BoxGrid stencil_step(const BoxGrid& in, int max_radius = -1);

/// Same as stencil_step, writing into `out` and reusing its storage. `out`
/// must not alias `in`.
void stencil_step_into(const BoxGrid& in, BoxGrid& out, int max_radius = -1);

/// (P_1 * f)(x) on the box of f grown by 1.
inline BoxGrid average_neighbours(const BoxGrid& f) { return stencil_step(f); }

/// Neumaier-compensated sum.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace sirlt
