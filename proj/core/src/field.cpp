#include "sirlt/field.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sirlt {

LatticeField LatticeField::point(int d, const Site& s, std::int64_t count) {
    LatticeField f(d);
    if (count < 0) throw std::invalid_argument("LatticeField: negative count");
    if (count > 0) {
        f.entries_.emplace_back(site_key::pack(s), count);
        f.total_ = count;
    }
    return f;
}

LatticeField LatticeField::from_entries(int d, std::vector<Entry> entries) {
    LatticeField f(d);
    std::sort(entries.begin(), entries.end());
    for (const auto& [key, count] : entries) {
        if (count < 0) throw std::invalid_argument("LatticeField: negative count");
        if (count == 0) continue;
        if (!f.entries_.empty() && f.entries_.back().first == key) {
            f.entries_.back().second += count;
        } else {
            f.entries_.emplace_back(key, count);
        }
        f.total_ += count;
    }
    return f;
}

std::int64_t LatticeField::at_key(std::uint64_t key) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const Entry& e, std::uint64_t k) { return e.first < k; });
    return (it != entries_.end() && it->first == key) ? it->second : 0;
}

std::int64_t LatticeField::at(const Site& s) const { return at_key(site_key::pack(s)); }

BoxGrid LatticeField::bounding_box() const {
    if (entries_.empty()) return BoxGrid(d_, {0, 0, 0}, {-1, -1, -1});
    Site lo = site_key::unpack(entries_.front().first), hi = lo;
    for (const auto& e : entries_) {
        const Site s = site_key::unpack(e.first);
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], s[a]);
            hi[a] = std::max(hi[a], s[a]);
        }
    }
    return BoxGrid(d_, lo, hi);
}

int LatticeField::max_count() const {
    std::int64_t m = 0;
    for (const auto& e : entries_) m = std::max(m, e.second);
    return static_cast<int>(m);
}

LatticeField FieldBuilder::build() const {
    std::vector<LatticeField::Entry> entries(counts_.begin(), counts_.end());
    return LatticeField::from_entries(d_, std::move(entries));
}

LatticeField field_sum(const LatticeField& a, const LatticeField& b) {
    std::vector<LatticeField::Entry> entries(a.entries());
    entries.insert(entries.end(), b.entries().begin(), b.entries().end());
    return LatticeField::from_entries(a.dim(), std::move(entries));
}

double feller_pair(const LatticeField& field, double k, const std::function<double(std::span<const double>)>& psi) {
    if (k < 1) throw std::invalid_argument("feller_pair: k must be >= 1");
    const int d = field.dim();
    const double sk = std::sqrt(k);
    std::vector<double> pt(static_cast<std::size_t>(d));
    double s = 0.0;
    for (const auto& [key, count] : field) {
        const Site x = site_key::unpack(key);
        for (int a = 0; a < d; ++a) pt[static_cast<std::size_t>(a)] = x[a] / sk;
        s += static_cast<double>(count) * psi(pt);
    }
    return s / k;
}

void write_field_csv(std::ostream& os, const LatticeField& field) {
    const int d = field.dim();
    os << (d == 2 ? "x,y,count\n" : "x,y,z,count\n");
    for (const auto& [key, count] : field) {
        const Site s = site_key::unpack(key);
        os << s[0] << ',' << s[1];
        if (d == 3) os << ',' << s[2];
        os << ',' << count << '\n';
    }
}

LatticeField read_field_csv(std::istream& is, int d) {
    check_dimension(d);
    std::vector<LatticeField::Entry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (lineno == 1 && line[0] == 'x') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        Site s{0, 0, 0};
        std::int64_t count = 0;
        for (int a = 0; a < d; ++a) ls >> s[a];
        ls >> count;
        if (!ls) throw std::runtime_error("field csv: malformed line " + std::to_string(lineno));
        std::string rest;
        if (ls >> rest) throw std::runtime_error("field csv: trailing data on line " + std::to_string(lineno));
        entries.emplace_back(site_key::pack(s), count);
    }
    return LatticeField::from_entries(d, std::move(entries));
}

}  // namespace sirlt
