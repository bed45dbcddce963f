#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "sirlt/lattice.hpp"

namespace sirlt {

/// Finitely supported non-negative integer field on Z^d. Entries are kept
/// sorted by packed site key (lexicographic coordinates); zero counts are
/// never stored.
class LatticeField {
public:
    using Entry = std::pair<std::uint64_t, std::int64_t>;

    LatticeField() = default;
    explicit LatticeField(int d) : d_(d) { check_dimension(d); }

    /// Point mass of `count` particles at `s`.
    static LatticeField point(int d, const Site& s, std::int64_t count = 1);
    /// From unsorted (key, count) pairs; duplicate keys are summed.
    static LatticeField from_entries(int d, std::vector<Entry> entries);

    int dim() const { return d_; }
    std::int64_t total_mass() const { return total_; }
    std::size_t support_size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    std::int64_t at(const Site& s) const;
    std::int64_t at_key(std::uint64_t key) const;

    const std::vector<Entry>& entries() const { return entries_; }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    /// Bounding box of the support (empty grid when the field is empty).
    BoxGrid bounding_box() const;
    int max_count() const;

    bool operator==(const LatticeField& o) const { return d_ == o.d_ && entries_ == o.entries_; }

private:
    int d_ = 2;
    std::vector<Entry> entries_;
    std::int64_t total_ = 0;
};

/// Hash-map accumulator for building fields.
class FieldBuilder {
public:
    explicit FieldBuilder(int d) : d_(d) {}

    void add(std::uint64_t key, std::int64_t count) {
        if (count != 0) counts_[key] += count;
    }
    void add(const Site& s, std::int64_t count) { add(site_key::pack(s), count); }
    void reserve(std::size_t n) { counts_.reserve(n); }
    std::size_t size() const { return counts_.size(); }

    LatticeField build() const;

private:
    int d_;
    absl::flat_hash_map<std::uint64_t, std::int64_t> counts_;
};

/// Pointwise sum of two fields.
LatticeField field_sum(const LatticeField& a, const LatticeField& b);

/// Feller rescaling pairing <F_k field, psi> = k^{-1} sum_x field(x) psi(x / sqrt k).
double feller_pair(const LatticeField& field, double k,
                   const std::function<double(std::span<const double>)>& psi);

/// Sorted `x,y[,z],count` CSV.
void write_field_csv(std::ostream& os, const LatticeField& field);
LatticeField read_field_csv(std::istream& is, int d);

}  // namespace sirlt
