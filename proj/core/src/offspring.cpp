#include "sirlt/offspring.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sirlt {

namespace {

// Below this mean the pmf is inverted directly from one uniform; the
// distribution objects of <random> cost more to build than to draw from.
constexpr double kInversionMean = 30.0;

std::int64_t poisson_inversion(double lambda, double p0, Stream& s) {
    const double u = s.uniform();
    double p = p0, f = p0;
    std::int64_t k = 0;
    while (u >= f) {
        ++k;
        p *= lambda / static_cast<double>(k);
        f += p;
        if (p < 1e-300 && f < u) break;  // u within rounding of 1
    }
    return k;
}

std::int64_t binomial_inversion(std::int64_t n, double prob, double p0, Stream& s) {
    const double u = s.uniform();
    const double odds = prob / (1.0 - prob);
    double p = p0, f = p0;
    std::int64_t k = 0;
    while (u >= f && k < n) {
        p *= static_cast<double>(n - k) / static_cast<double>(k + 1) * odds;
        ++k;
        f += p;
        if (p < 1e-300 && f < u) break;
    }
    return k;
}

}  // namespace

OffspringLaw OffspringLaw::envelope(std::int64_t village_size) {
    if (village_size < 1) throw std::invalid_argument("envelope law: village size must be >= 1");
    return OffspringLaw(Kind::EnvelopeN, village_size, {});
}

OffspringLaw OffspringLaw::poisson_unit() { return OffspringLaw(Kind::PoissonUnit, 0, {}); }

OffspringLaw OffspringLaw::custom(std::vector<double> pmf) {
    if (pmf.empty()) throw std::invalid_argument("custom law: empty pmf");
    double total = 0.0;
    for (double q : pmf) {
        if (!(q >= 0.0)) throw std::invalid_argument("custom law: negative or NaN probability");
        total += q;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("custom law: probabilities must sum to 1");
    return OffspringLaw(Kind::Custom, 0, std::move(pmf));
}

std::string OffspringLaw::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::EnvelopeN: os << "envelope_N(N=" << village_ << ")"; break;
        case Kind::PoissonUnit: os << "poisson_unit"; break;
        case Kind::Custom:
            os << "custom(";
            for (std::size_t j = 0; j < pmf_.size(); ++j) os << (j ? "," : "") << pmf_[j];
            os << ")";
            break;
    }
    return os.str();
}

double OffspringLaw::mean() const {
    if (kind_ != Kind::Custom) return 1.0;
    double m = 0.0;
    for (std::size_t j = 0; j < pmf_.size(); ++j) m += static_cast<double>(j) * pmf_[j];
    return m;
}

std::pair<std::int64_t, std::int64_t> OffspringLaw::mean_rational(int d) const {
    if (kind_ == Kind::Custom) throw std::logic_error("mean_rational: custom laws carry a floating mean");
    // (2d+1) targets, each with mean 1/(2d+1) (Poisson) or N * 1/((2d+1)N).
    const std::int64_t targets = 2 * d + 1;
    std::int64_t num = kind_ == Kind::EnvelopeN ? targets * village_ : targets;
    std::int64_t den = kind_ == Kind::EnvelopeN ? targets * village_ : targets;
    const std::int64_t g = std::gcd(num, den);
    return {num / g, den / g};
}

double OffspringLaw::variance(int d) const {
    switch (kind_) {
        case Kind::PoissonUnit: return 1.0;
        case Kind::EnvelopeN: {
            const double trials = static_cast<double>((2 * d + 1) * village_);
            return trials * (1.0 / trials) * (1.0 - 1.0 / trials);
        }
        case Kind::Custom: {
            const double m = mean();
            double s = 0.0;
            for (std::size_t j = 0; j < pmf_.size(); ++j) s += pmf_[j] * (j - m) * (j - m);
            return s;
        }
    }
    return 0.0;
}

double OffspringLaw::factorial_same(int d) const {
    const double t = 2.0 * d + 1.0;
    switch (kind_) {
        case Kind::PoissonUnit: return 1.0 / (t * t);
        case Kind::EnvelopeN: {
            const double n = static_cast<double>(village_);
            return n * (n - 1.0) / (t * n * t * n);
        }
        case Kind::Custom: {
            double fk = 0.0;
            for (std::size_t j = 2; j < pmf_.size(); ++j) fk += pmf_[j] * j * (j - 1.0);
            return fk / (t * t);
        }
    }
    return 0.0;
}

double OffspringLaw::factorial_cross(int d) const {
    const double t = 2.0 * d + 1.0;
    if (kind_ == Kind::Custom) return factorial_same(d);
    return 1.0 / (t * t);
}

double OffspringLaw::log_pgf(double u) const {
    switch (kind_) {
        case Kind::PoissonUnit: return u - 1.0;
        case Kind::Custom: {
            double s = 0.0;
            for (std::size_t j = pmf_.size(); j-- > 0;) s = s * u + pmf_[j];
            return std::log(s);
        }
        case Kind::EnvelopeN: break;
    }
    throw std::logic_error("log_pgf: envelope_N has no single-argument generating function");
}

std::vector<double> OffspringLaw::log_pgf_series(int max_order) const {
    std::vector<double> c(static_cast<std::size_t>(max_order) + 1, 0.0);
    if (kind_ == Kind::PoissonUnit) {
        if (max_order >= 1) c[1] = 1.0;
        return c;
    }
    if (kind_ != Kind::Custom) throw std::logic_error("log_pgf_series: envelope_N not supported");
    // pgf(1 + w) = sum_l b_l w^l with b_l = sum_j q_j C(j, l).
    std::vector<double> b(static_cast<std::size_t>(max_order) + 1, 0.0);
    for (std::size_t j = 0; j < pmf_.size(); ++j) {
        double binom = 1.0;
        for (std::size_t l = 0; l <= static_cast<std::size_t>(max_order) && l <= j; ++l) {
            b[l] += pmf_[j] * binom;
            binom = binom * static_cast<double>(j - l) / static_cast<double>(l + 1);
        }
    }
    if (b[0] <= 0.0) throw std::domain_error("log_pgf_series: pgf vanishes at 1");
    c[0] = std::log(b[0]);
    // log of a power series: n c_n b_0 = n b_n - sum_{k=1}^{n-1} k c_k b_{n-k}.
    for (int n = 1; n <= max_order; ++n) {
        double s = n * b[static_cast<std::size_t>(n)];
        for (int k = 1; k < n; ++k) s -= k * c[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(n - k)];
        c[static_cast<std::size_t>(n)] = s / (n * b[0]);
    }
    return c;
}

void OffspringLaw::sample(std::int64_t parents, int d, const RngContext& rng, Purpose purpose, std::uint64_t step,
                          std::uint64_t site_key, std::span<std::int64_t> out) const {
    const int targets = 2 * d + 1;
    if (static_cast<int>(out.size()) != targets) throw std::invalid_argument("sample: output span has wrong size");
    if (parents <= 0) {
        std::fill(out.begin(), out.end(), 0);
        return;
    }
    const std::uint64_t base = rng.site_hash(purpose, step, site_key);
    switch (kind_) {
        case Kind::PoissonUnit: {
            const double lambda = static_cast<double>(parents) / targets;
            const double p0 = std::exp(-lambda);
            for (int e = 0; e < targets; ++e) {
                Stream s = RngContext::substream(base, static_cast<std::uint64_t>(e));
                if (lambda <= kInversionMean) {
                    out[static_cast<std::size_t>(e)] = poisson_inversion(lambda, p0, s);
                } else {
                    std::poisson_distribution<std::int64_t> pois(lambda);
                    out[static_cast<std::size_t>(e)] = pois(s);
                }
            }
            return;
        }
        case Kind::EnvelopeN: {
            const double p = 1.0 / (static_cast<double>(targets) * static_cast<double>(village_));
            const std::int64_t trials = parents * village_;
            const double mean = static_cast<double>(trials) * p;
            const double p0 = std::exp(static_cast<double>(trials) * std::log1p(-p));
            for (int e = 0; e < targets; ++e) {
                Stream s = RngContext::substream(base, static_cast<std::uint64_t>(e));
                if (mean <= kInversionMean && p < 1.0) {
                    out[static_cast<std::size_t>(e)] = binomial_inversion(trials, p, p0, s);
                } else {
                    std::binomial_distribution<std::int64_t> binom(trials, p);
                    out[static_cast<std::size_t>(e)] = binom(s);
                }
            }
            return;
        }
        case Kind::Custom: {
            std::fill(out.begin(), out.end(), 0);
            Stream s = rng.stream(purpose, step, site_key, 0xc057u);
            std::discrete_distribution<int> count(pmf_.begin(), pmf_.end());
            std::uniform_int_distribution<int> where(0, targets - 1);
            for (std::int64_t p = 0; p < parents; ++p) {
                const int kids = count(s);
                for (int c = 0; c < kids; ++c) ++out[static_cast<std::size_t>(where(s))];
            }
            return;
        }
    }
}

}  // namespace sirlt
