#include "sirlt/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sirlt/bounds.hpp"

namespace sirlt {

namespace {

std::string locate(const std::string& source, int line, const std::string& field) {
    std::string s = source;
    if (line > 0) s += ":" + std::to_string(line);
    if (!field.empty()) s += ": " + field;
    return s;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(v);
    while (std::getline(is, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

// Canonical number text: shortest round-trip form.
std::string fmt(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ",";
        if constexpr (std::is_same_v<T, double>) s += fmt(xs[i]);
        else if constexpr (std::is_same_v<T, std::string>) s += xs[i];
        else s += std::to_string(xs[i]);
    }
    return s;
}

// Typed accessor over a RawConfig that remembers which keys were consumed.
class Reader {
public:
    explicit Reader(const RawConfig& raw) : raw_(raw) {}

    const RawConfig::Item* get(const std::string& key) {
        used_.insert(key);
        return raw_.find(key);
    }

    [[noreturn]] void fail(const RawConfig::Item& it, const std::string& msg) const {
        throw ConfigError(raw_.source, it.line, it.key, msg);
    }

    double real(const RawConfig::Item& it, const std::string& text) const {
        double v = 0.0;
        const auto* b = text.data();
        const auto* e = b + text.size();
        auto r = std::from_chars(b, e, v);
        if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v)) fail(it, "expected a number, got '" + text + "'");
        return v;
    }

    long long integer(const RawConfig::Item& it, const std::string& text) const {
        // Accept 1e5 style integers, which are common in ladders.
        const double v = real(it, text);
        if (v != std::floor(v) || std::abs(v) > 9.0e15) fail(it, "expected an integer, got '" + text + "'");
        return static_cast<long long>(v);
    }

    void set(const std::string& key, double& out) {
        if (const auto* it = get(key)) out = real(*it, it->value);
    }
    void set(const std::string& key, int& out) {
        if (const auto* it = get(key)) out = static_cast<int>(integer(*it, it->value));
    }
    void set(const std::string& key, std::int64_t& out) {
        if (const auto* it = get(key)) out = integer(*it, it->value);
    }
    void set(const std::string& key, std::uint64_t& out) {
        if (const auto* it = get(key)) {
            const long long v = integer(*it, it->value);
            if (v < 0) fail(*it, "must be non-negative");
            out = static_cast<std::uint64_t>(v);
        }
    }
    void set(const std::string& key, std::string& out) {
        if (const auto* it = get(key)) out = it->value;
    }
    template <class T>
    void set_list(const std::string& key, std::vector<T>& out) {
        const auto* it = get(key);
        if (!it) return;
        out.clear();
        for (const auto& s : split_list(it->value)) {
            if constexpr (std::is_same_v<T, double>) out.push_back(real(*it, s));
            else if constexpr (std::is_same_v<T, std::string>) out.push_back(s);
            else {
                const long long v = integer(*it, s);
                if (v < 0) fail(*it, "entries must be non-negative");
                out.push_back(static_cast<T>(v));
            }
        }
        if (out.empty()) fail(*it, "empty list");
    }

    void reject_unknown() const {
        for (const auto& it : raw_.items)
            if (!used_.count(it.key)) fail(it, "unknown key");
    }

private:
    const RawConfig& raw_;
    std::set<std::string> used_;
};

template <class T>
bool strictly_increasing(const std::vector<T>& xs) {
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i - 1] < xs[i])) return false;
    return true;
}

}  // namespace

ConfigError::ConfigError(std::string source, int line, std::string field, const std::string& msg)
    : std::runtime_error(locate(source, line, field) + ": " + msg),
      source_(std::move(source)),
      line_(line),
      field_(std::move(field)),
      message_(msg) {}

const RawConfig::Item* RawConfig::find(std::string_view key) const {
    for (const auto& it : items)
        if (it.key == key) return &it;
    return nullptr;
}

RawConfig parse_config_text(const std::string& text, const std::string& source) {
    RawConfig raw;
    raw.source = source;
    std::istringstream is(text);
    std::string line;
    int no = 0;
    while (std::getline(is, line)) {
        ++no;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(source, no, "", "expected 'key = value'");
        RawConfig::Item it{trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)), no};
        if (it.key.empty()) throw ConfigError(source, no, "", "empty key");
        if (it.value.empty()) throw ConfigError(source, no, it.key, "empty value");
        if (raw.find(it.key)) throw ConfigError(source, no, it.key, "duplicate key");
        raw.items.push_back(std::move(it));
    }
    return raw;
}

RawConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "", "cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

Mode parse_mode(const std::string& name) {
    if (name == "local_time") return Mode::LocalTime;
    if (name == "threshold_sweep") return Mode::ThresholdSweep;
    if (name == "occupation_time") return Mode::OccupationTime;
    if (name == "bounds_suite") return Mode::BoundsSuite;
    if (name == "importance_battery") return Mode::ImportanceBattery;
    if (name == "coupling") return Mode::Coupling;
    throw std::invalid_argument("unknown mode '" + name + "'");
}

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::LocalTime: return "local_time";
        case Mode::ThresholdSweep: return "threshold_sweep";
        case Mode::OccupationTime: return "occupation_time";
        case Mode::BoundsSuite: return "bounds_suite";
        case Mode::ImportanceBattery: return "importance_battery";
        case Mode::Coupling: return "coupling";
    }
    return "?";
}

double critical_alpha(int d) { return 1.0 / (3.0 - d / 2.0); }

std::size_t ExperimentConfig::replicates_at(std::size_t level) const {
    if (replicates.empty()) return 0;
    return replicates.size() == 1 ? replicates[0] : replicates.at(level);
}

InitialConfigFamily ExperimentConfig::make_family() const {
    return build_family(parse_family_kind(family), family_params);
}

ExperimentConfig build_config(const RawConfig& raw) {
    Reader r(raw);
    ExperimentConfig c;

    const auto* m = r.get("mode");
    if (!m) throw ConfigError(raw.source, 0, "mode", "required key missing");
    try {
        c.mode = parse_mode(m->value);
    } catch (const std::invalid_argument& e) {
        r.fail(*m, e.what());
    }
    r.set("d", c.d);
    if (c.d != 2 && c.d != 3) {
        const auto* it = raw.find("d");
        throw ConfigError(raw.source, it ? it->line : 0, "d", "dimension must be 2 or 3");
    }
    r.set("seed", c.seed);

    // Mode-dependent defaults, then overrides from the file.
    c.family = c.d == 2 ? "point_spread_d2" : "ball_bounded_d3";
    c.alpha = critical_alpha(c.d);
    switch (c.mode) {
        case Mode::LocalTime:
            c.k_ladder = {16, 64, 256};
            c.probe_t = {0.5};
            c.replicates = {10000};
            break;
        case Mode::ThresholdSweep:
            c.village_ladder = {1000, 10000, 100000};
            c.probe_t = {0.5, 1.0, 1.5, 2.0};
            c.horizon_t = 2.0;
            c.replicates = {1000};
            break;
        case Mode::OccupationTime:
            c.k_ladder = {64, 256, 1024};
            c.horizon_t = 1.0;
            c.replicates = {10000};
            break;
        case Mode::BoundsSuite:
            for (auto id : all_bound_ids()) c.inequalities.push_back(bound_id_name(id));
            break;
        case Mode::ImportanceBattery:
            c.village_ladder = {5, 10, 50};
            c.alpha = 0.5;
            c.horizon = 4;
            c.replicates = {100000};
            break;
        case Mode::Coupling:
            c.village_ladder = {1000, 10000, 100000};
            c.horizon_t = 8.0;
            c.replicates = {1000};
            break;
    }
    c.probe_x.assign(static_cast<std::size_t>(c.d), 0.0);

    r.set("family", c.family);
    r.set("family.cap", c.family_params.cap);
    r.set("family.c1", c.family_params.c1);
    r.set("family.c2", c.family_params.c2);
    r.set("family.spike_alpha", c.family_params.spike_alpha);
    r.set("family.spike_c", c.family_params.spike_c);
    r.set_list("k_ladder", c.k_ladder);
    r.set_list("village_ladder", c.village_ladder);
    r.set("alpha", c.alpha);
    r.set_list("probe_t", c.probe_t);
    r.set_list("probe_x", c.probe_x);
    r.set("horizon_t", c.horizon_t);
    r.set("horizon", c.horizon);
    r.set_list("replicates", c.replicates);
    r.set("mu_mass", c.mu_mass);
    r.set("variance_k", c.variance_k);
    r.set("se_multiplier", c.se_multiplier);
    r.set("suppression_threshold", c.suppression_threshold);
    r.set("ks_resolution", c.ks_resolution);
    r.set("beta", c.beta);
    r.set("gamma", c.gamma);
    if (const auto* it = r.get("inequalities")) {
        if (it->value != "all") {
            c.inequalities.clear();
            for (const auto& s : split_list(it->value)) {
                try {
                    c.inequalities.push_back(bound_id_name(parse_bound_id(s)));
                } catch (const std::exception& e) {
                    r.fail(*it, e.what());
                }
            }
        }
    }
    r.set("bounds_baseline", c.bounds_baseline);
    r.set("baseline_tolerance", c.baseline_tolerance);
    r.set("out_dir", c.out_dir);
    r.reject_unknown();

    // Report validation problems against the line of the offending key.
    try {
        validate_config(c, raw.source);
    } catch (const ConfigError& e) {
        const auto* it = raw.find(e.field());
        if (it) throw ConfigError(raw.source, it->line, e.field(), e.message());
        throw;
    }
    return c;
}

void validate_config(const ExperimentConfig& c, const std::string& source) {
    auto bad = [&](const std::string& field, const std::string& msg) { throw ConfigError(source, 0, field, msg); };
    if (c.d != 2 && c.d != 3) bad("d", "dimension must be 2 or 3");
    try {
        const auto kind = parse_family_kind(c.family);
        if (kind == FamilyKind::Custom) bad("family", "custom families cannot be configured from a file");
        const int fd = kind == FamilyKind::BallBoundedD3 ? 3 : 2;
        if (fd != c.d) bad("family", "family '" + c.family + "' lives in d=" + std::to_string(fd));
    } catch (const std::invalid_argument& e) {
        bad("family", e.what());
    }
    if (!strictly_increasing(c.k_ladder)) bad("k_ladder", "ladder must be strictly increasing");
    if (!c.k_ladder.empty() && c.k_ladder.front() < 1) bad("k_ladder", "levels must be >= 1");
    if (!strictly_increasing(c.village_ladder)) bad("village_ladder", "ladder must be strictly increasing");
    if (!c.village_ladder.empty() && c.village_ladder.front() < 1) bad("village_ladder", "villages must be >= 1");
    if (!(c.alpha > 0.0)) bad("alpha", "alpha must be positive");
    if (c.mode == Mode::ThresholdSweep && c.alpha > critical_alpha(c.d) + 1e-12)
        bad("alpha", "threshold sweeps need alpha <= 1/(3 - d/2) = " + fmt(critical_alpha(c.d)));
    if (c.mode == Mode::OccupationTime && c.d != 2) bad("d", "occupation_time is defined for d=2 only");
    if (static_cast<int>(c.probe_x.size()) != c.d) bad("probe_x", "needs exactly d coordinates");
    for (double t : c.probe_t)
        if (t < 0.0) bad("probe_t", "probe times must be >= 0");
    if (c.horizon_t < 0.0) bad("horizon_t", "must be >= 0");
    if (c.horizon < 0) bad("horizon", "must be >= 0");
    const std::size_t levels = c.mode == Mode::LocalTime || c.mode == Mode::OccupationTime ? c.k_ladder.size()
                                                                                            : c.village_ladder.size();
    if (c.mode != Mode::BoundsSuite) {
        if (c.replicates.empty()) bad("replicates", "missing");
        if (c.replicates.size() != 1 && c.replicates.size() != levels)
            bad("replicates", "give one value or one per ladder level");
        for (auto n : c.replicates)
            if (n < 1) bad("replicates", "must be >= 1");
    }
    if (c.mu_mass < 0) bad("mu_mass", "must be >= 0");
    if (c.variance_k < 1) bad("variance_k", "must be >= 1");
    if (!(c.se_multiplier > 0.0)) bad("se_multiplier", "must be positive");
    if (!(c.suppression_threshold > 0.0)) bad("suppression_threshold", "must be positive");
    if (c.ks_resolution < 0.0 || c.ks_resolution >= 1.0) bad("ks_resolution", "must lie in [0, 1)");
    if (!(c.baseline_tolerance >= 1.0)) bad("baseline_tolerance", "must be >= 1");
    if (c.mode == Mode::BoundsSuite && c.inequalities.empty()) bad("inequalities", "empty selection");
}

std::string canonical_config(const ExperimentConfig& c) {
    std::map<std::string, std::string> kv;
    kv["mode"] = mode_name(c.mode);
    kv["d"] = std::to_string(c.d);
    kv["seed"] = std::to_string(c.seed);
    kv["family"] = c.family;
    kv["family.cap"] = std::to_string(c.family_params.cap);
    kv["family.c1"] = fmt(c.family_params.c1);
    kv["family.c2"] = std::to_string(c.family_params.c2);
    kv["family.spike_alpha"] = fmt(c.family_params.spike_alpha);
    kv["family.spike_c"] = fmt(c.family_params.spike_c);
    kv["k_ladder"] = join(c.k_ladder);
    kv["village_ladder"] = join(c.village_ladder);
    kv["alpha"] = fmt(c.alpha);
    kv["probe_t"] = join(c.probe_t);
    kv["probe_x"] = join(c.probe_x);
    kv["horizon_t"] = fmt(c.horizon_t);
    kv["horizon"] = std::to_string(c.horizon);
    kv["replicates"] = join(c.replicates);
    kv["mu_mass"] = std::to_string(c.mu_mass);
    kv["variance_k"] = std::to_string(c.variance_k);
    kv["se_multiplier"] = fmt(c.se_multiplier);
    kv["suppression_threshold"] = fmt(c.suppression_threshold);
    kv["ks_resolution"] = fmt(c.ks_resolution);
    kv["beta"] = fmt(c.beta);
    kv["gamma"] = fmt(c.gamma);
    kv["inequalities"] = join(c.inequalities);
    kv["bounds_baseline"] = c.bounds_baseline;
    kv["baseline_tolerance"] = fmt(c.baseline_tolerance);
    std::string s;
    for (const auto& [k, v] : kv) s += k + " = " + v + "\n";
    return s;
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_config(cfg))));
    return buf;
}

}  // namespace sirlt
